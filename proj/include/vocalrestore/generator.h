#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vocalrestore/audio_io.h"
#include "vocalrestore/bandsplit.h"
#include "vocalrestore/spectral.h"
#include "vocalrestore/tensor.h"
#include "vocalrestore/weights.h"

namespace vr {

struct ModelConfig {
  int sample_rate = 48000;
  int n_fft = 4096;
  int hop = 2048;
  int n_band = 64;
  int dim = 128;          // shared latent width N
  int layers = 6;         // band-sequence blocks L
  int heads = 4;
  int conv_kernel = 3;    // depthwise taps
  int dilation_cap = 8;   // d_max
  int ff_expansion = 2;
  double eps = 1e-8;
  // Hidden width of each synthesis head; 0 means `dim`.
  int head_hidden = 0;
  // One temporal stack per layer shared by all bands, or one per band.
  bool share_temporal_weights = true;
  // false: H + attn(H) + temporal(H). true: A = H + attn(H); A + temporal(A).
  bool sequential_paths = false;

  StftParams stft() const { return {n_fft, hop, WindowKind::kHann, true}; }
  int bins() const { return n_fft / 2 + 1; }
  int ff_dim() const { return ff_expansion * dim; }
  int head_width() const { return head_hidden > 0 ? head_hidden : dim; }
  // d = min(2^l, d_max) for block l = 1..L.
  int dilation(int layer) const;

  // Small configuration used throughout the tests.
  static ModelConfig toy();
  static ModelConfig full();
};

// Throws ConfigError.
void validate(const ModelConfig& config);

// Flat "key = value" text, one entry per line, '#' comments.
std::string format_config(const ModelConfig& config);
ModelConfig parse_config(const std::string& text);
ModelConfig load_config(const std::filesystem::path& path);
void save_config(const ModelConfig& config, const std::filesystem::path& path);

// Every parameter name and shape implied by the config.
Manifest generator_manifest(const ModelConfig& config);

// Projection and convolution weights ~ U(+-sqrt(1/fan_in)), norm gains 1,
// biases 0, layer-scale gammas 1e-6.
WeightStore init_weights(const ModelConfig& config, uint64_t seed);

WeightStore load_weights(const std::filesystem::path& path, const ModelConfig& config);

// H: (n_band, N, T_s).
using BandedHidden = Tensor3;

class Generator {
 public:
  // Validates the store against the config (ManifestError / ShapeError).
  Generator(ModelConfig config, WeightStore weights);

  const ModelConfig& config() const { return config_; }
  const BandLayout& layout() const { return layout_; }
  const WeightStore& weights() const { return weights_; }

  BandedHidden stem(const PackedBandFeatures& packed) const;
  BandedHidden block(const BandedHidden& h, int layer) const;
  // Per-band pathway outputs (deltas, residual excluded).
  BandedHidden attention_path(const BandedHidden& h, int layer) const;
  BandedHidden temporal_path(const BandedHidden& h, int layer) const;
  // Latent N x T_s of one band -> bw_i x T_s complex slice.
  BandSlice synthesis_head(const float* latent, int frames, int band) const;
  ComplexSpectrogram forward(const ComplexSpectrogram& x) const;
  Waveform restore(const Waveform& wave) const;

 private:
  std::string temporal_prefix(int layer, int band) const;

  ModelConfig config_;
  WeightStore weights_;
  BandLayout layout_;
};

ComplexSpectrogram generator_forward(const ComplexSpectrogram& x, const WeightStore& weights,
                                     const ModelConfig& config);

// Throws SampleRateError when the waveform rate differs from the model's.
Waveform restore(const Waveform& wave, const WeightStore& weights, const ModelConfig& config);

// Long inputs are restored in segments of `segment_s` seconds overlapping by
// `overlap_s`, joined with a linear crossfade. Inputs no longer than one
// segment go through a single restore call.
Waveform restore_chunked(const Generator& gen, const Waveform& wave, double segment_s = 30.0,
                         double overlap_s = 1.0);

}  // namespace vr
