#pragma once

#include <map>
#include <string>
#include <vector>

#include "vocalrestore/audio_io.h"
#include "vocalrestore/spectral.h"
#include "vocalrestore/tensor.h"
#include "vocalrestore/weights.h"

namespace vr {

struct DiscriminatorConfig {
  std::vector<int> periods = {2, 3, 5, 7, 11};
  std::vector<StftParams> stft_resolutions = {
      {2048, 512, WindowKind::kHann, true},
      {1024, 256, WindowKind::kHann, true},
      {512, 128, WindowKind::kHann, true}};
  // Output channels of the strided layers of each period branch.
  std::vector<int> period_channels = {8, 16, 32};
  int stft_channels = 8;
  // Optional branch over band-sliced magnitudes; each slice is a [lo, hi)
  // fraction of the one-sided bins.
  bool multi_band = false;
  StftParams multi_band_stft = {2048, 512, WindowKind::kHann, true};
  std::vector<std::pair<double, double>> band_slices = {{0.0, 0.25}, {0.25, 0.5}, {0.5, 1.0}};
  double leaky_slope = 0.1;
  int power_iterations = 1;
  // Power iterations run once when a weight's state vector is first created.
  int warmup_iterations = 100;

  int num_branches() const {
    return static_cast<int>(periods.size() + stft_resolutions.size()) + (multi_band ? 1 : 0);
  }
};

// Throws ConfigError.
void validate(const DiscriminatorConfig& config);

// Largest-singular-value estimate by power iteration. `u` (length rows) is the
// persistent left vector; it is initialized from `init_seed` when empty.
struct PowerIterationResult {
  std::vector<float> normalized;
  double sigma = 0.0;
};

PowerIterationResult spectral_normalize(MatrixRef<float> weight, int iterations,
                                        std::vector<double>& u, uint64_t init_seed = 0);

// Power-iteration vectors for every convolution, keyed by parameter name.
// discriminator_forward updates it; give each concurrent caller its own copy.
struct SpectralNormState {
  std::map<std::string, std::vector<double>> u;
};

struct BranchOutput {
  std::string name;
  std::vector<double> scores;  // every element of the final map
  std::vector<FeatureMap> features;

  double score() const;
};

Manifest discriminator_manifest(const DiscriminatorConfig& config);
WeightStore init_discriminator_weights(const DiscriminatorConfig& config, uint64_t seed);

// One output per branch: periods first, then STFT resolutions, then the
// optional multi-band branch. Throws InputTooShortError when the waveform is
// shorter than the largest period or STFT window.
std::vector<BranchOutput> discriminator_forward(const Waveform& wave, const WeightStore& weights,
                                                const DiscriminatorConfig& config,
                                                SpectralNormState& state);

// Zero-padded 2-D cross-correlation on a (C, H, W) map; weight is
// (Cout, Cin, kh, kw).
struct Conv2dSpec {
  int stride_h = 1, stride_w = 1;
  int dilation_h = 1, dilation_w = 1;
  int pad_h = 0, pad_w = 0;
};

FeatureMap conv2d(const FeatureMap& x, const std::vector<float>& weight,
                  const std::vector<int>& weight_shape, std::span<const float> bias,
                  const Conv2dSpec& spec);

}  // namespace vr
