#include "vocalrestore/bandsplit.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "vocalrestore/error.h"

namespace vr {
namespace {

void check_matches(const ComplexSpectrogram& spec, const BandLayout& layout) {
  validate(layout);
  if (layout.bins != spec.bins())
    throw LayoutError("layout covers " + std::to_string(layout.bins) +
                      " bins, spectrogram has " + std::to_string(spec.bins()));
}

// Integer pool-adjacent-violators: merges neighbouring blocks until every block,
// spread as floor/ceil with the larger values last, continues nondecreasing.
std::vector<int> make_nondecreasing(const std::vector<int>& widths) {
  struct Block {
    long long sum;
    int count;
    int first() const { return static_cast<int>(sum / count); }
    int last() const { return static_cast<int>((sum + count - 1) / count); }
  };
  std::vector<Block> blocks;
  for (int w : widths) {
    blocks.push_back({w, 1});
    while (blocks.size() > 1 &&
           blocks[blocks.size() - 2].last() > blocks.back().first()) {
      Block b = blocks.back();
      blocks.pop_back();
      blocks.back().sum += b.sum;
      blocks.back().count += b.count;
    }
  }
  std::vector<int> out;
  out.reserve(widths.size());
  for (const auto& b : blocks) {
    const long long base = b.sum / b.count;
    const long long extra = b.sum % b.count;
    for (int i = 0; i < b.count; ++i)
      out.push_back(static_cast<int>(base + (i >= b.count - extra ? 1 : 0)));
  }
  return out;
}

}  // namespace

BandLayout BandLayout::from_widths(std::vector<int> w) {
  BandLayout layout;
  layout.boundaries.assign(1, 0);
  for (int x : w) layout.boundaries.push_back(layout.boundaries.back() + x);
  layout.bins = layout.boundaries.back();
  layout.widths = std::move(w);
  return layout;
}

void validate(const BandLayout& layout) {
  if (layout.widths.empty()) throw LayoutError("layout has no bands");
  if (layout.boundaries.size() != layout.widths.size() + 1 || layout.boundaries[0] != 0)
    throw LayoutError("layout boundaries inconsistent with widths");
  for (std::size_t i = 0; i < layout.widths.size(); ++i) {
    if (layout.widths[i] < 1) throw LayoutError("band width must be >= 1");
    if (layout.boundaries[i + 1] - layout.boundaries[i] != layout.widths[i])
      throw LayoutError("layout boundaries inconsistent with widths");
  }
  if (layout.boundaries.back() != layout.bins)
    throw LayoutError("band widths do not sum to the bin count");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

BandLayout mel_band_layout(int bins, int num_bands, int sample_rate) {
  if (num_bands < 1 || bins < 1 || num_bands > bins)
    throw LayoutError("need 1 <= n_band <= F, got n_band=" + std::to_string(num_bands) +
                      ", F=" + std::to_string(bins));
  if (sample_rate <= 0) throw LayoutError("sample rate must be positive");
  const double nyquist = sample_rate / 2.0;
  const double top = hz_to_mel(nyquist);
  std::vector<int> b(num_bands + 1);
  b[0] = 0;
  b[num_bands] = bins;
  for (int k = 1; k < num_bands; ++k) {
    double hz = mel_to_hz(top * k / num_bands);
    b[k] = static_cast<int>(std::lround(hz / nyquist * bins));
  }
  // Collisions: every band keeps at least one bin, resolved from the low end.
  for (int k = 1; k < num_bands; ++k) {
    b[k] = std::max(b[k], b[k - 1] + 1);
    b[k] = std::min(b[k], bins - (num_bands - k));
  }
  std::vector<int> widths(num_bands);
  for (int k = 0; k < num_bands; ++k) widths[k] = b[k + 1] - b[k];
  return BandLayout::from_widths(make_nondecreasing(widths));
}

BandEnvelope band_envelope(const ComplexSpectrogram& spec, const BandLayout& layout,
                           double eps) {
  check_matches(spec, layout);
  if (!(eps >= 0.0)) throw LayoutError("eps must be nonnegative");
  const int frames = spec.frames;
  BandEnvelope env{RealGrid(layout.num_bands(), frames), eps};
  for (int i = 0; i < layout.num_bands(); ++i) {
    for (int t = 0; t < frames; ++t) {
      double acc = 0.0;
      for (int f = layout.boundaries[i]; f < layout.boundaries[i + 1]; ++f)
        acc += std::norm(spec.at(f, t));
      env.values.at(i, t) = std::sqrt(acc + eps);
    }
  }
  return env;
}

PackedBandFeatures pack_band_features(const ComplexSpectrogram& spec,
                                      const BandLayout& layout, double eps) {
  const BandEnvelope env = band_envelope(spec, layout, eps);
  const int frames = spec.frames;
  PackedBandFeatures packed;
  packed.bands.reserve(layout.num_bands());
  for (int i = 0; i < layout.num_bands(); ++i) {
    const int bw = layout.widths[i];
    RealGrid g(2 * bw + 1, frames);
    for (int t = 0; t < frames; ++t) {
      const double p = env.values.at(i, t);
      // p == 0 only when eps == 0 and the band is silent; the band is then all zeros.
      const double inv = p > 0.0 ? 1.0 / p : 0.0;
      for (int k = 0; k < bw; ++k) {
        const auto v = spec.at(layout.boundaries[i] + k, t);
        g.at(2 * k, t) = v.real() * inv;
        g.at(2 * k + 1, t) = v.imag() * inv;
      }
      g.at(2 * bw, t) = std::log(p);
    }
    packed.bands.push_back(std::move(g));
  }
  return packed;
}

std::vector<BandSlice> slice_bands(const ComplexSpectrogram& spec, const BandLayout& layout) {
  check_matches(spec, layout);
  std::vector<BandSlice> out;
  out.reserve(layout.num_bands());
  for (int i = 0; i < layout.num_bands(); ++i) {
    BandSlice s(layout.widths[i], spec.frames);
    for (int k = 0; k < s.width; ++k)
      for (int t = 0; t < spec.frames; ++t) s.at(k, t) = spec.at(layout.boundaries[i] + k, t);
    out.push_back(std::move(s));
  }
  return out;
}

ComplexSpectrogram reassemble(const std::vector<BandSlice>& bands,
                              const BandLayout& layout, const StftParams& params) {
  validate(layout);
  if (layout.bins != params.bins())
    throw LayoutError("layout does not cover n_fft/2+1 bins");
  if (bands.size() != layout.widths.size())
    throw LayoutError("expected " + std::to_string(layout.widths.size()) + " bands, got " +
                      std::to_string(bands.size()));
  const int frames = bands.empty() ? 0 : bands[0].frames;
  ComplexSpectrogram spec(params, frames);
  for (std::size_t i = 0; i < bands.size(); ++i) {
    const auto& b = bands[i];
    if (b.width != layout.widths[i] || b.frames != frames ||
        b.data.size() != static_cast<std::size_t>(b.width) * b.frames)
      throw LayoutError("band " + std::to_string(i) + " has shape " +
                        std::to_string(b.width) + "x" + std::to_string(b.frames) +
                        ", layout expects " + std::to_string(layout.widths[i]) + "x" +
                        std::to_string(frames));
    for (int k = 0; k < b.width; ++k)
      for (int t = 0; t < frames; ++t) spec.at(layout.boundaries[i] + k, t) = b.at(k, t);
  }
  return spec;
}

}  // namespace vr
