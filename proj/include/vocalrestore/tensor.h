#pragma once

#include <span>
#include <vector>

namespace vr {

// Dense (group, channel, time) grid, time contiguous. Groups are bands in the
// generator; kernels act on channels at every (group, time) position.
template <typename T>
class BasicTensor3 {
 public:
  BasicTensor3() = default;
  BasicTensor3(int groups, int channels, int length, T fill = T{0})
      : groups_(groups),
        channels_(channels),
        length_(length),
        data_(static_cast<std::size_t>(groups) * channels * length, fill) {}

  int groups() const { return groups_; }
  int channels() const { return channels_; }
  int length() const { return length_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int g, int c, int t) { return data_[index(g, c, t)]; }
  const T& operator()(int g, int c, int t) const { return data_[index(g, c, t)]; }

  // channels x length block of one group.
  T* group(int g) { return data_.data() + static_cast<std::size_t>(g) * channels_ * length_; }
  const T* group(int g) const {
    return data_.data() + static_cast<std::size_t>(g) * channels_ * length_;
  }

  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  bool same_shape(const BasicTensor3& o) const {
    return groups_ == o.groups_ && channels_ == o.channels_ && length_ == o.length_;
  }

 private:
  std::size_t index(int g, int c, int t) const {
    return (static_cast<std::size_t>(g) * channels_ + c) * length_ + t;
  }

  int groups_ = 0;
  int channels_ = 0;
  int length_ = 0;
  std::vector<T> data_;
};

using Tensor3 = BasicTensor3<float>;

// Non-owning row-major matrix.
template <typename T>
struct MatrixRef {
  std::span<const T> data;
  int rows = 0;
  int cols = 0;

  const T& operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

}  // namespace vr

namespace vr {

// Activation map with its shape, e.g. (channels, height, width).
struct FeatureMap {
  std::vector<int> shape;
  std::vector<float> values;
};

}  // namespace vr
