#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vocalrestore/tensor.h"

namespace vr {

struct Param {
  std::vector<int> shape;
  std::vector<float> values;

  std::size_t count() const;
  friend bool operator==(const Param&, const Param&) = default;
};

// Expected parameter names and shapes.
using Manifest = std::map<std::string, std::vector<int>>;

// Named float32 parameters. Ordered by name so serialization is canonical.
class WeightStore {
 public:
  void set(const std::string& name, Param p);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  void erase(const std::string& name) { params_.erase(name); }

  // Throws ManifestError when absent.
  const Param& get(const std::string& name) const;
  Param& get_mutable(const std::string& name);

  MatrixRef<float> matrix(const std::string& name) const;
  std::span<const float> vector(const std::string& name) const;

  const std::map<std::string, Param>& params() const { return params_; }
  Manifest manifest() const;

  friend bool operator==(const WeightStore&, const WeightStore&) = default;

 private:
  std::map<std::string, Param> params_;
};

// ManifestError naming the first missing or unexpected tensor; ShapeError on a
// shape mismatch; InvalidInputError on non-finite values.
void check_manifest(const WeightStore& store, const Manifest& expected);

// File layout (all integers little-endian):
//   8 bytes   magic "SRSW0001"
//   8 bytes   uint64 manifest length M
//   M bytes   UTF-8 JSON: {"tensors":[{"name","shape","dtype":"f32","offset"}...]}
//   payload   IEEE-754 float32 values; "offset" is the byte offset into the payload
void save_weights(const WeightStore& store, const std::filesystem::path& path);
std::vector<unsigned char> encode_weights(const WeightStore& store);

// FormatError on bad magic or malformed manifest; CorruptFileError on truncation.
WeightStore load_weights(const std::filesystem::path& path);
WeightStore decode_weights(const std::vector<unsigned char>& bytes);

}  // namespace vr
