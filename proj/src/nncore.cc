#include "vocalrestore/nncore.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vocalrestore/error.h"

namespace vr::nn {
namespace {

template <typename T>
T sigmoid(T z) {
  return T{1} / (T{1} + std::exp(-z));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Raw block kernels

template <typename T>
void rmsnorm_block(const T* __restrict x, int channels, int length,
                   const T* __restrict gain, T* __restrict y) {
  std::vector<T> scale(length, T{0});
  for (int c = 0; c < channels; ++c) {
    const T* xr = x + static_cast<std::size_t>(c) * length;
    for (int t = 0; t < length; ++t) scale[t] += xr[t] * xr[t];
  }
  const T inv_c = T{1} / static_cast<T>(channels);
  for (int t = 0; t < length; ++t)
    scale[t] = T{1} / std::sqrt(scale[t] * inv_c + static_cast<T>(kRmsNormDelta));
  for (int c = 0; c < channels; ++c) {
    const T* xr = x + static_cast<std::size_t>(c) * length;
    T* yr = y + static_cast<std::size_t>(c) * length;
    const T g = gain[c];
    for (int t = 0; t < length; ++t) yr[t] = xr[t] * scale[t] * g;
  }
}

// Four output rows share each pass over an input row; time is processed in
// chunks that keep the accumulators in L1. The per-element summation order is
// always c = 0..cin-1, independent of blocking.
template <typename T>
void pointwise_block(const T* __restrict x, int cin, int length, const T* __restrict weight,
                     int cout, const T* __restrict bias, T* __restrict y) {
  constexpr int kChunk = 256;
  for (int t0 = 0; t0 < length; t0 += kChunk) {
    const int n = std::min(kChunk, length - t0);
    int o = 0;
    for (; o + 4 <= cout; o += 4) {
      T* __restrict y0 = y + static_cast<std::size_t>(o) * length + t0;
      T* __restrict y1 = y0 + length;
      T* __restrict y2 = y1 + length;
      T* __restrict y3 = y2 + length;
      const T b0 = bias ? bias[o] : T{0}, b1 = bias ? bias[o + 1] : T{0};
      const T b2 = bias ? bias[o + 2] : T{0}, b3 = bias ? bias[o + 3] : T{0};
      for (int j = 0; j < n; ++j) {
        y0[j] = b0;
        y1[j] = b1;
        y2[j] = b2;
        y3[j] = b3;
      }
      const T* w0 = weight + static_cast<std::size_t>(o) * cin;
      const T* w1 = w0 + cin;
      const T* w2 = w1 + cin;
      const T* w3 = w2 + cin;
      for (int c = 0; c < cin; ++c) {
        const T* __restrict xr = x + static_cast<std::size_t>(c) * length + t0;
        const T a0 = w0[c], a1 = w1[c], a2 = w2[c], a3 = w3[c];
        for (int j = 0; j < n; ++j) {
          const T v = xr[j];
          y0[j] += a0 * v;
          y1[j] += a1 * v;
          y2[j] += a2 * v;
          y3[j] += a3 * v;
        }
      }
    }
    for (; o < cout; ++o) {
      T* __restrict yr = y + static_cast<std::size_t>(o) * length + t0;
      const T b = bias ? bias[o] : T{0};
      for (int j = 0; j < n; ++j) yr[j] = b;
      const T* wr = weight + static_cast<std::size_t>(o) * cin;
      for (int c = 0; c < cin; ++c) {
        const T* __restrict xr = x + static_cast<std::size_t>(c) * length + t0;
        const T a = wr[c];
        for (int j = 0; j < n; ++j) yr[j] += a * xr[j];
      }
    }
  }
}

template <typename T>
void depthwise_block(const T* __restrict x, int channels, int length,
                     const T* __restrict kernels, int taps, const T* __restrict bias,
                     int dilation, T* __restrict y) {
  if (taps % 2 == 0) throw ConfigError("depthwise kernel length must be odd");
  if (dilation < 1) throw ConfigError("dilation must be >= 1");
  const int half = (taps - 1) / 2;
  for (int c = 0; c < channels; ++c) {
    const T* xr = x + static_cast<std::size_t>(c) * length;
    T* yr = y + static_cast<std::size_t>(c) * length;
    const T b = bias ? bias[c] : T{0};
    for (int t = 0; t < length; ++t) yr[t] = b;
    for (int k = 0; k < taps; ++k) {
      const T w = kernels[static_cast<std::size_t>(c) * taps + k];
      const int shift = (k - half) * dilation;
      const int lo = std::max(0, -shift);
      const int hi = std::min(length, length - shift);
      for (int t = lo; t < hi; ++t) yr[t] += w * xr[t + shift];
    }
  }
}

template <typename T>
void glu_block(T* x, int channels_out, int length) {
  const std::size_t n = static_cast<std::size_t>(channels_out) * length;
  T* a = x;
  const T* b = x + n;
  for (std::size_t i = 0; i < n; ++i) a[i] = a[i] * sigmoid(b[i]);
}

template <typename T>
void silu_inplace(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] * sigmoid(x[i]);
}

template <typename T>
void rope_block(T* x, int channels, int length, int head_dim, int position) {
  if (head_dim <= 0 || head_dim % 2 != 0)
    throw ConfigError("rotary encoding needs an even head dimension");
  if (channels % head_dim != 0) throw ShapeError("channels not divisible by head_dim");
  if (position == 0) return;
  for (int h0 = 0; h0 < channels; h0 += head_dim) {
    for (int j = 0; j < head_dim / 2; ++j) {
      const double theta = std::pow(kRopeBase, -2.0 * j / head_dim);
      const double angle = position * theta;
      const T cs = static_cast<T>(std::cos(angle));
      const T sn = static_cast<T>(std::sin(angle));
      T* a = x + static_cast<std::size_t>(h0 + 2 * j) * length;
      T* b = a + length;
      for (int t = 0; t < length; ++t) {
        const T u = a[t], v = b[t];
        a[t] = u * cs - v * sn;
        b[t] = u * sn + v * cs;
      }
    }
  }
}

template <typename T>
void attention_core_raw(const T* q, const T* k, const T* v, int groups, int channels,
                        int length, int heads, T* out, AttentionProbe<T>* probe) {
  if (heads < 1 || channels % heads != 0)
    throw ShapeError("channels must be divisible by heads");
  const int dh = channels / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  const std::size_t block = static_cast<std::size_t>(channels) * length;
  if (probe)
    probe->probs.assign(static_cast<std::size_t>(heads) * groups * groups * length, T{0});

#pragma omp parallel
  {
    std::vector<T> scores(static_cast<std::size_t>(groups) * length);
    std::vector<T> row_max(length), row_sum(length);
#pragma omp for collapse(2) schedule(static)
    for (int h = 0; h < heads; ++h) {
      for (int i = 0; i < groups; ++i) {
        const T* qi = q + i * block + static_cast<std::size_t>(h) * dh * length;
        for (int j = 0; j < groups; ++j) {
          const T* kj = k + j * block + static_cast<std::size_t>(h) * dh * length;
          T* s = scores.data() + static_cast<std::size_t>(j) * length;
          for (int t = 0; t < length; ++t) s[t] = T{0};
          for (int d = 0; d < dh; ++d) {
            const T* qr = qi + static_cast<std::size_t>(d) * length;
            const T* kr = kj + static_cast<std::size_t>(d) * length;
            for (int t = 0; t < length; ++t) s[t] += qr[t] * kr[t];
          }
          for (int t = 0; t < length; ++t) s[t] *= scale;
        }
        std::copy(scores.begin(), scores.begin() + length, row_max.begin());
        for (int j = 1; j < groups; ++j) {
          const T* s = scores.data() + static_cast<std::size_t>(j) * length;
          for (int t = 0; t < length; ++t) row_max[t] = std::max(row_max[t], s[t]);
        }
        std::fill(row_sum.begin(), row_sum.end(), T{0});
        for (int j = 0; j < groups; ++j) {
          T* s = scores.data() + static_cast<std::size_t>(j) * length;
          for (int t = 0; t < length; ++t) {
            s[t] = std::exp(s[t] - row_max[t]);
            row_sum[t] += s[t];
          }
        }
        for (int t = 0; t < length; ++t) row_sum[t] = T{1} / row_sum[t];
        for (int j = 0; j < groups; ++j) {
          T* s = scores.data() + static_cast<std::size_t>(j) * length;
          for (int t = 0; t < length; ++t) s[t] *= row_sum[t];
        }
        if (probe) {
          T* dst = probe->probs.data() +
                   (static_cast<std::size_t>(h) * groups + i) * groups * length;
          std::copy(scores.begin(), scores.end(), dst);
        }
        T* oi = out + i * block + static_cast<std::size_t>(h) * dh * length;
        for (int d = 0; d < dh; ++d) {
          T* orow = oi + static_cast<std::size_t>(d) * length;
          for (int t = 0; t < length; ++t) orow[t] = T{0};
          for (int j = 0; j < groups; ++j) {
            const T* vr = v + j * block + static_cast<std::size_t>(h) * dh * length +
                          static_cast<std::size_t>(d) * length;
            const T* s = scores.data() + static_cast<std::size_t>(j) * length;
            for (int t = 0; t < length; ++t) orow[t] += s[t] * vr[t];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Tensor-level wrappers

template <typename T>
BasicTensor3<T> rmsnorm(const BasicTensor3<T>& x, std::span<const T> gain) {
  require(static_cast<int>(gain.size()) == x.channels(), "rmsnorm gain length mismatch");
  BasicTensor3<T> y(x.groups(), x.channels(), x.length());
  for (int g = 0; g < x.groups(); ++g)
    rmsnorm_block(x.group(g), x.channels(), x.length(), gain.data(), y.group(g));
  return y;
}

template <typename T>
BasicTensor3<T> pointwise_conv(const BasicTensor3<T>& x, MatrixRef<T> weight,
                               std::span<const T> bias) {
  require(weight.cols == x.channels(),
          "pointwise_conv expects " + std::to_string(weight.cols) + " input channels, got " +
              std::to_string(x.channels()));
  require(weight.data.size() == static_cast<std::size_t>(weight.rows) * weight.cols,
          "pointwise_conv weight size mismatch");
  require(bias.empty() || static_cast<int>(bias.size()) == weight.rows,
          "pointwise_conv bias length mismatch");
  BasicTensor3<T> y(x.groups(), weight.rows, x.length());
  for (int g = 0; g < x.groups(); ++g)
    pointwise_block(x.group(g), x.channels(), x.length(), weight.data.data(), weight.rows,
                    bias.empty() ? nullptr : bias.data(), y.group(g));
  return y;
}

template <typename T>
BasicTensor3<T> depthwise_conv1d(const BasicTensor3<T>& x, MatrixRef<T> kernels,
                                 std::span<const T> bias, int dilation) {
  if (kernels.cols % 2 == 0) throw ConfigError("depthwise kernel length must be odd");
  require(kernels.rows == x.channels(), "depthwise kernel count mismatch");
  require(bias.empty() || static_cast<int>(bias.size()) == x.channels(),
          "depthwise bias length mismatch");
  BasicTensor3<T> y(x.groups(), x.channels(), x.length());
  for (int g = 0; g < x.groups(); ++g)
    depthwise_block(x.group(g), x.channels(), x.length(), kernels.data.data(), kernels.cols,
                    bias.empty() ? nullptr : bias.data(), dilation, y.group(g));
  return y;
}

template <typename T>
BasicTensor3<T> silu(const BasicTensor3<T>& x) {
  BasicTensor3<T> y = x;
  silu_inplace(y.values().data(), y.size());
  return y;
}

template <typename T>
BasicTensor3<T> glu(const BasicTensor3<T>& x) {
  require(x.channels() % 2 == 0, "glu needs an even channel count");
  const int half = x.channels() / 2;
  BasicTensor3<T> y(x.groups(), half, x.length());
  std::vector<T> tmp(static_cast<std::size_t>(x.channels()) * x.length());
  for (int g = 0; g < x.groups(); ++g) {
    std::copy(x.group(g), x.group(g) + tmp.size(), tmp.begin());
    glu_block(tmp.data(), half, x.length());
    std::copy(tmp.begin(), tmp.begin() + static_cast<std::size_t>(half) * x.length(),
              y.group(g));
  }
  return y;
}

template <typename T>
BasicTensor3<T> swiglu(const BasicTensor3<T>& x, MatrixRef<T> w_in, MatrixRef<T> w_gate,
                       MatrixRef<T> w_out) {
  require(w_in.rows == w_gate.rows && w_in.cols == w_gate.cols,
          "swiglu in/gate projections differ in shape");
  require(w_out.cols == w_in.rows, "swiglu output projection shape mismatch");
  auto a = pointwise_conv(x, w_in);
  auto b = silu(pointwise_conv(x, w_gate));
  for (std::size_t i = 0; i < a.size(); ++i) a.values()[i] *= b.values()[i];
  return pointwise_conv(a, w_out);
}

template <typename T>
BasicTensor3<T> rope_rotate(const BasicTensor3<T>& x, int head_dim, int position) {
  BasicTensor3<T> y = x;
  for (int g = 0; g < y.groups(); ++g)
    rope_block(y.group(g), y.channels(), y.length(), head_dim, position);
  return y;
}

template <typename T>
BasicTensor3<T> layer_scale(const BasicTensor3<T>& x, std::span<const T> gamma) {
  require(static_cast<int>(gamma.size()) == x.channels(), "layer_scale gamma length mismatch");
  BasicTensor3<T> y = x;
  for (int g = 0; g < y.groups(); ++g)
    for (int c = 0; c < y.channels(); ++c) {
      T* row = y.group(g) + static_cast<std::size_t>(c) * y.length();
      for (int t = 0; t < y.length(); ++t) row[t] *= gamma[c];
    }
  return y;
}

template <typename T>
BasicTensor3<T> attention_core(const BasicTensor3<T>& q, const BasicTensor3<T>& k,
                               const BasicTensor3<T>& v, int heads, AttentionProbe<T>* probe) {
  require(q.same_shape(k) && q.same_shape(v), "attention q/k/v shapes differ");
  BasicTensor3<T> out(q.groups(), q.channels(), q.length());
  attention_core_raw(q.values().data(), k.values().data(), v.values().data(), q.groups(),
                     q.channels(), q.length(), heads, out.values().data(), probe);
  return out;
}

template <typename T>
BasicTensor3<T> multi_head_attention(const BasicTensor3<T>& x, const AttentionWeights<T>& w,
                                     int heads, bool use_rope, AttentionProbe<T>* probe) {
  if (heads < 1 || w.w_q.rows % heads != 0)
    throw ShapeError("attention width must be divisible by heads");
  auto q = pointwise_conv(x, w.w_q, w.b_q);
  auto k = pointwise_conv(x, w.w_k, w.b_k);
  auto v = pointwise_conv(x, w.w_v, w.b_v);
  if (use_rope) {
    const int dh = q.channels() / heads;
    for (int g = 0; g < q.groups(); ++g) {
      rope_block(q.group(g), q.channels(), q.length(), dh, g);
      rope_block(k.group(g), k.channels(), k.length(), dh, g);
    }
  }
  return pointwise_conv(attention_core(q, k, v, heads, probe), w.w_o, w.b_o);
}

#define VR_INSTANTIATE(T)                                                                  \
  template void rmsnorm_block<T>(const T*, int, int, const T*, T*);                        \
  template void pointwise_block<T>(const T*, int, int, const T*, int, const T*, T*);       \
  template void depthwise_block<T>(const T*, int, int, const T*, int, const T*, int, T*);  \
  template void glu_block<T>(T*, int, int);                                                \
  template void silu_inplace<T>(T*, std::size_t);                                          \
  template void rope_block<T>(T*, int, int, int, int);                                     \
  template void attention_core_raw<T>(const T*, const T*, const T*, int, int, int, int, T*, \
                                      AttentionProbe<T>*);                                 \
  template BasicTensor3<T> rmsnorm<T>(const BasicTensor3<T>&, std::span<const T>);         \
  template BasicTensor3<T> pointwise_conv<T>(const BasicTensor3<T>&, MatrixRef<T>,         \
                                             std::span<const T>);                          \
  template BasicTensor3<T> depthwise_conv1d<T>(const BasicTensor3<T>&, MatrixRef<T>,       \
                                               std::span<const T>, int);                   \
  template BasicTensor3<T> silu<T>(const BasicTensor3<T>&);                                \
  template BasicTensor3<T> glu<T>(const BasicTensor3<T>&);                                 \
  template BasicTensor3<T> swiglu<T>(const BasicTensor3<T>&, MatrixRef<T>, MatrixRef<T>,   \
                                     MatrixRef<T>);                                        \
  template BasicTensor3<T> rope_rotate<T>(const BasicTensor3<T>&, int, int);               \
  template BasicTensor3<T> layer_scale<T>(const BasicTensor3<T>&, std::span<const T>);     \
  template BasicTensor3<T> attention_core<T>(const BasicTensor3<T>&, const BasicTensor3<T>&, \
                                             const BasicTensor3<T>&, int,                 \
                                             AttentionProbe<T>*);                          \
  template BasicTensor3<T> multi_head_attention<T>(const BasicTensor3<T>&,                 \
                                                   const AttentionWeights<T>&, int, bool,  \
                                                   AttentionProbe<T>*);

VR_INSTANTIATE(float)
VR_INSTANTIATE(double)

#undef VR_INSTANTIATE

}  // namespace vr::nn
