#include "vocalrestore/spectral.h"

#include <cmath>
#include <numbers>
#include <string>

#include "vocalrestore/error.h"
#include "vocalrestore/fft.h"

namespace vr {
namespace {

constexpr double kColaFloor = 1e-8;

// Reflect index into [0, n) without repeating the edge sample ("reflect" mode).
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * static_cast<long long>(n) - 2;
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

std::vector<double> make_window(WindowKind kind, int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    double phase = 2.0 * std::numbers::pi * i / n;
    switch (kind) {
      case WindowKind::kHann:
        w[i] = 0.5 - 0.5 * std::cos(phase);
        break;
      case WindowKind::kHamming:
        w[i] = 0.54 - 0.46 * std::cos(phase);
        break;
      case WindowKind::kRectangular:
        w[i] = 1.0;
        break;
    }
  }
  return w;
}

void validate(const StftParams& params) {
  if (params.n_fft <= 0 || params.n_fft % 2 != 0)
    throw ConfigError("n_fft must be positive and even, got " +
                      std::to_string(params.n_fft));
  if (params.hop <= 0 || params.hop > params.n_fft)
    throw ConfigError("hop must satisfy 0 < hop <= n_fft");
  auto w = make_window(params.window, params.n_fft);
  for (int r = 0; r < params.hop; ++r) {
    double acc = 0.0;
    for (int m = r; m < params.n_fft; m += params.hop) acc += w[m] * w[m];
    if (acc <= kColaFloor)
      throw NonInvertibleError("window/hop pair is not invertible (n_fft=" +
                        std::to_string(params.n_fft) +
                        ", hop=" + std::to_string(params.hop) + ")");
  }
}

int stft_frame_count(std::size_t length, const StftParams& params) {
  if (params.center) return 1 + static_cast<int>(length / params.hop);
  if (length < static_cast<std::size_t>(params.n_fft)) return 0;
  return 1 + static_cast<int>((length - params.n_fft) / params.hop);
}

ComplexSpectrogram stft(const Waveform& wave, const StftParams& params) {
  validate(params);
  if (wave.samples.empty()) throw EmptyInputError("stft of an empty waveform");
  const int n = params.n_fft;
  const int frames = stft_frame_count(wave.size(), params);
  if (frames <= 0)
    throw InvalidInputError("waveform shorter than n_fft without center padding");
  const long long offset = params.center ? n / 2 : 0;
  const auto window = make_window(params.window, n);
  const FftPlan plan(n);
  const int bins = params.bins();
  const auto& x = wave.samples;

  ComplexSpectrogram spec(params, frames);
#pragma omp parallel
  {
    std::vector<std::complex<double>> buf(n);
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      const long long start = static_cast<long long>(t) * params.hop - offset;
      for (int m = 0; m < n; ++m) {
        long long i = start + m;
        double s = params.center ? x[reflect_index(i, x.size())]
                                 : x[static_cast<std::size_t>(i)];
        buf[m] = {s * window[m], 0.0};
      }
      plan.forward(buf);
      for (int f = 0; f < bins; ++f)
        spec.at(f, t) = buf[f];
    }
  }
  return spec;
}

Waveform istft(const ComplexSpectrogram& spec, std::size_t length, int sample_rate) {
  const auto& params = spec.params;
  validate(params);
  const int n = params.n_fft;
  const int bins = params.bins();
  const int frames = spec.frames;
  const std::size_t offset = params.center ? n / 2 : 0;
  const std::size_t total =
      frames > 0 ? static_cast<std::size_t>(frames - 1) * params.hop + n : 0;
  if (length + offset > total)
    throw InvalidInputError("requested length " + std::to_string(length) +
                            " exceeds the synthesizable span");

  const auto window = make_window(params.window, n);
  const FftPlan plan(n);

  // Frames are synthesized independently, then accumulated in frame order so
  // the sum is identical to a sequential pass.
  std::vector<double> frames_td(static_cast<std::size_t>(frames) * n);
#pragma omp parallel
  {
    std::vector<std::complex<double>> buf(n);
#pragma omp for schedule(static)
    for (int t = 0; t < frames; ++t) {
      for (int f = 0; f < bins; ++f) {
        auto v = spec.at(f, t);
        buf[f] = {v.real(), v.imag()};
      }
      // Hermitian completion; DC and Nyquist are taken as real.
      buf[0] = {buf[0].real(), 0.0};
      buf[n / 2] = {buf[n / 2].real(), 0.0};
      for (int f = n / 2 + 1; f < n; ++f) buf[f] = std::conj(buf[n - f]);
      plan.inverse(buf);
      double* out = &frames_td[static_cast<std::size_t>(t) * n];
      for (int m = 0; m < n; ++m) out[m] = buf[m].real() / n * window[m];
    }
  }

  std::vector<double> acc(total, 0.0), norm(total, 0.0);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * params.hop;
    const double* fr = &frames_td[static_cast<std::size_t>(t) * n];
    for (int m = 0; m < n; ++m) {
      acc[start + m] += fr[m];
      norm[start + m] += window[m] * window[m];
    }
  }

  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    const double d = norm[i + offset];
    if (d <= kColaFloor)
      throw NonInvertibleError("overlap-add normalizer vanishes at sample " +
                               std::to_string(i));
    out.samples[i] = acc[i + offset] / d;
  }
  return out;
}

RealGrid magnitude(const ComplexSpectrogram& spec) {
  RealGrid g(spec.bins(), spec.frames);
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    const double re = spec.data[i].real(), im = spec.data[i].imag();
    g.data[i] = std::sqrt(re * re + im * im);
  }
  return g;
}

}  // namespace vr
