#pragma once

#include <complex>
#include <vector>

#include "vocalrestore/audio_io.h"

namespace vr {

enum class WindowKind { kHann, kHamming, kRectangular };

struct StftParams {
  int n_fft = 4096;
  int hop = 2048;
  WindowKind window = WindowKind::kHann;
  // Reflect-pad n_fft/2 on both sides so frame t is centred on sample t*hop.
  bool center = true;

  int bins() const { return n_fft / 2 + 1; }
  friend bool operator==(const StftParams&, const StftParams&) = default;
};

// ConfigError unless 0 < hop <= n_fft and n_fft is even; NonInvertibleError
// unless the squared window overlap-adds to more than 1e-8 everywhere.
void validate(const StftParams& params);

// Periodic window of length n.
std::vector<double> make_window(WindowKind kind, int n);

// One-sided complex spectrogram, F = n_fft/2+1 rows by `frames` columns,
// stored frequency-major: at(f, t) = data[f * frames + t].
struct ComplexSpectrogram {
  StftParams params;
  int frames = 0;
  std::vector<std::complex<double>> data;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(const StftParams& p, int num_frames)
      : params(p),
        frames(num_frames),
        data(static_cast<std::size_t>(p.bins()) * num_frames) {}

  int bins() const { return params.bins(); }
  std::complex<double>& at(int f, int t) {
    return data[static_cast<std::size_t>(f) * frames + t];
  }
  const std::complex<double>& at(int f, int t) const {
    return data[static_cast<std::size_t>(f) * frames + t];
  }
};

// Dense real grid, row-major rows x cols.
struct RealGrid {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  RealGrid() = default;
  RealGrid(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c) {}
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Number of frames stft() emits for `length` samples.
int stft_frame_count(std::size_t length, const StftParams& params);

// Throws EmptyInputError for an empty waveform.
ComplexSpectrogram stft(const Waveform& wave, const StftParams& params);

// Weighted overlap-add with squared-window normalization. Throws
// NonInvertibleError when the normalizer falls to 1e-8 or below on an output
// sample, InvalidInputError when `length` exceeds the synthesizable span.
Waveform istft(const ComplexSpectrogram& spec, std::size_t length, int sample_rate);

RealGrid magnitude(const ComplexSpectrogram& spec);

}  // namespace vr
