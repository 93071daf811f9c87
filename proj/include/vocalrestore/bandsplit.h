#pragma once

#include <complex>
#include <vector>

#include "vocalrestore/spectral.h"

namespace vr {

// Partition of the F one-sided bins into contiguous bands.
struct BandLayout {
  std::vector<int> widths;
  std::vector<int> boundaries;  // size n_band + 1, boundaries[0] == 0, back() == F
  int bins = 0;

  int num_bands() const { return static_cast<int>(widths.size()); }
  static BandLayout from_widths(std::vector<int> widths);
};

// Throws LayoutError unless widths are positive and sum to `bins`.
void validate(const BandLayout& layout);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_band + 1 points equally spaced on the HTK mel scale over [0, sr/2], mapped
// to bin positions and rounded. Widths are then forced to >= 1 from the low end
// and made nondecreasing by pooling adjacent violators; they always sum to F.
BandLayout mel_band_layout(int bins, int num_bands, int sample_rate);

// p_i(t) = sqrt(sum_{f in band i} |X_{f,t}|^2 + eps), n_band x T_s.
struct BandEnvelope {
  RealGrid values;
  double eps = 1e-8;
};

BandEnvelope band_envelope(const ComplexSpectrogram& spec, const BandLayout& layout,
                           double eps = 1e-8);

// Per band: (2*bw_i + 1) x T_s. Row 2k is Re(bin k)/p, row 2k+1 is Im(bin k)/p,
// the last row is log p.
struct PackedBandFeatures {
  std::vector<RealGrid> bands;
};

PackedBandFeatures pack_band_features(const ComplexSpectrogram& spec,
                                      const BandLayout& layout, double eps = 1e-8);

// A bw x T_s complex slice of a spectrogram, frequency-major like the parent.
struct BandSlice {
  int width = 0;
  int frames = 0;
  std::vector<std::complex<double>> data;

  BandSlice() = default;
  BandSlice(int w, int t) : width(w), frames(t), data(static_cast<std::size_t>(w) * t) {}
  std::complex<double>& at(int f, int t) { return data[static_cast<std::size_t>(f) * frames + t]; }
  const std::complex<double>& at(int f, int t) const {
    return data[static_cast<std::size_t>(f) * frames + t];
  }
};

std::vector<BandSlice> slice_bands(const ComplexSpectrogram& spec, const BandLayout& layout);

// Concatenates band slices along frequency in layout order.
ComplexSpectrogram reassemble(const std::vector<BandSlice>& bands,
                              const BandLayout& layout, const StftParams& params);

}  // namespace vr
