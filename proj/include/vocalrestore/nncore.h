#pragma once

#include <span>

#include "vocalrestore/tensor.h"

namespace vr::nn {

inline constexpr double kRmsNormDelta = 1e-6;
inline constexpr double kRopeBase = 10000.0;

// ---- Tensor-level kernels. Instantiated for float and double. ----

// x / sqrt(mean_c(x^2) + delta) * gain, at every (group, time).
template <typename T>
BasicTensor3<T> rmsnorm(const BasicTensor3<T>& x, std::span<const T> gain);

// y[g, o, t] = bias[o] + sum_c W[o, c] x[g, c, t]. Empty bias means zero.
template <typename T>
BasicTensor3<T> pointwise_conv(const BasicTensor3<T>& x, MatrixRef<T> weight,
                               std::span<const T> bias = {});

// Per-channel correlation along time with `kernels` (C x K, K odd), taps spaced
// by `dilation`, zero padded to the input length.
template <typename T>
BasicTensor3<T> depthwise_conv1d(const BasicTensor3<T>& x, MatrixRef<T> kernels,
                                 std::span<const T> bias, int dilation);

template <typename T>
BasicTensor3<T> silu(const BasicTensor3<T>& x);

// First half of the channels gated by the sigmoid of the second half.
template <typename T>
BasicTensor3<T> glu(const BasicTensor3<T>& x);

// W_out (SiLU(W_gate x) * (W_in x)); no biases.
template <typename T>
BasicTensor3<T> swiglu(const BasicTensor3<T>& x, MatrixRef<T> w_in, MatrixRef<T> w_gate,
                       MatrixRef<T> w_out);

// Rotates channel pairs (2j, 2j+1) inside each head of width head_dim by
// position * base^(-2j/head_dim).
template <typename T>
BasicTensor3<T> rope_rotate(const BasicTensor3<T>& x, int head_dim, int position);

template <typename T>
BasicTensor3<T> layer_scale(const BasicTensor3<T>& x, std::span<const T> gamma);

template <typename T>
struct AttentionWeights {
  MatrixRef<T> w_q, w_k, w_v, w_o;
  std::span<const T> b_q, b_k, b_v, b_o;
};

// Optional capture of softmax rows: probs[(((h * G) + i) * G + j) * L + t].
template <typename T>
struct AttentionProbe {
  std::vector<T> probs;
};

// Self-attention across the group axis, independently at every time step.
// Q/K/V/output projections are pointwise convolutions; with `use_rope` the
// queries and keys are rotated by their group index.
template <typename T>
BasicTensor3<T> multi_head_attention(const BasicTensor3<T>& x, const AttentionWeights<T>& w,
                                     int heads, bool use_rope = true,
                                     AttentionProbe<T>* probe = nullptr);

// softmax(Q K^T / sqrt(d)) V over the group axis for already projected (and
// rotated) q, k, v. This is the part whose cost is quadratic in the group count.
template <typename T>
BasicTensor3<T> attention_core(const BasicTensor3<T>& q, const BasicTensor3<T>& k,
                               const BasicTensor3<T>& v, int heads,
                               AttentionProbe<T>* probe = nullptr);

// ---- Raw kernels on one (channels x length) block, used by the generator to
// avoid temporaries. `y` must not alias `x` unless stated. ----

template <typename T>
void rmsnorm_block(const T* x, int channels, int length, const T* gain, T* y);

template <typename T>
void pointwise_block(const T* x, int cin, int length, const T* weight, int cout,
                     const T* bias, T* y);

template <typename T>
void depthwise_block(const T* x, int channels, int length, const T* kernels, int taps,
                     const T* bias, int dilation, T* y);

// In place on a 2C x L block: rows [0, C) become a * sigmoid(b).
template <typename T>
void glu_block(T* x, int channels_out, int length);

template <typename T>
void silu_inplace(T* x, std::size_t n);

// In place, one group at `position`.
template <typename T>
void rope_block(T* x, int channels, int length, int head_dim, int position);

// attention over G groups; q/k/v/out are (G, C, L). Scratch needs G * L.
template <typename T>
void attention_core_raw(const T* q, const T* k, const T* v, int groups, int channels,
                        int length, int heads, T* out, AttentionProbe<T>* probe);

}  // namespace vr::nn
