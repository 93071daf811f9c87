#include "vocalrestore/discriminator.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vocalrestore/error.h"
#include "vocalrestore/rng.h"

namespace vr {
namespace {

struct LayerDef {
  std::string name;
  int cin, cout, kh, kw;
  Conv2dSpec spec;
  bool activate;
};

uint64_t name_seed(const std::string& name) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<LayerDef> period_layers(const DiscriminatorConfig& c, const std::string& prefix) {
  std::vector<LayerDef> layers;
  int cin = 1;
  for (std::size_t j = 0; j < c.period_channels.size(); ++j) {
    const int cout = c.period_channels[j];
    layers.push_back({prefix + "conv" + std::to_string(j), cin, cout, 5, 1, {3, 1, 1, 1, 2, 0}, true});
    cin = cout;
  }
  layers.push_back({prefix + "convf", cin, cin, 5, 1, {1, 1, 1, 1, 2, 0}, true});
  layers.push_back({prefix + "post", cin, 1, 3, 1, {1, 1, 1, 1, 1, 0}, false});
  return layers;
}

std::vector<LayerDef> stft_layers(const DiscriminatorConfig& c, const std::string& prefix) {
  const int ch = c.stft_channels;
  std::vector<LayerDef> layers;
  layers.push_back({prefix + "conv0", 1, ch, 3, 9, {1, 1, 1, 1, 1, 4}, true});
  for (int j = 1; j <= 3; ++j) {
    const int dil = 1 << (j - 1);
    layers.push_back({prefix + "conv" + std::to_string(j), ch, ch, 3, 9, {2, 1, 1, dil, 1, 4 * dil}, true});
  }
  layers.push_back({prefix + "conv4", ch, ch, 3, 3, {1, 1, 1, 1, 1, 1}, true});
  layers.push_back({prefix + "post", ch, 1, 3, 3, {1, 1, 1, 1, 1, 1}, false});
  return layers;
}

std::vector<std::pair<std::string, std::vector<LayerDef>>> all_branches(
    const DiscriminatorConfig& c) {
  std::vector<std::pair<std::string, std::vector<LayerDef>>> out;
  for (int p : c.periods) {
    const std::string name = "period" + std::to_string(p);
    out.emplace_back(name, period_layers(c, name + "."));
  }
  for (std::size_t r = 0; r < c.stft_resolutions.size(); ++r) {
    const std::string name = "stft" + std::to_string(r);
    out.emplace_back(name, stft_layers(c, name + "."));
  }
  if (c.multi_band) out.emplace_back("multiband", stft_layers(c, "multiband."));
  return out;
}

FeatureMap run_stack(FeatureMap x, const std::vector<LayerDef>& layers, const WeightStore& weights,
                     const DiscriminatorConfig& config, SpectralNormState& state,
                     std::vector<FeatureMap>& features) {
  for (const auto& layer : layers) {
    const std::string wname = layer.name + ".weight";
    const Param& w = weights.get(wname);
    const int cols = layer.cin * layer.kh * layer.kw;
    MatrixRef<float> mat{w.values, layer.cout, cols};
    auto& u = state.u[wname];
    if (u.empty()) spectral_normalize(mat, config.warmup_iterations, u, name_seed(wname));
    const auto sn = spectral_normalize(mat, config.power_iterations, u, name_seed(wname));
    x = conv2d(x, sn.normalized, w.shape, weights.vector(layer.name + ".bias"), layer.spec);
    if (layer.activate) {
      const float slope = static_cast<float>(config.leaky_slope);
      for (auto& v : x.values) v = v >= 0.0f ? v : slope * v;
    }
    features.push_back(x);
  }
  return x;
}

FeatureMap magnitude_map(const RealGrid& mag, int lo, int hi) {
  FeatureMap m{{1, hi - lo, mag.cols}, {}};
  m.values.reserve(static_cast<std::size_t>(hi - lo) * mag.cols);
  for (int f = lo; f < hi; ++f)
    for (int t = 0; t < mag.cols; ++t) m.values.push_back(static_cast<float>(mag.at(f, t)));
  return m;
}

}  // namespace

void validate(const DiscriminatorConfig& c) {
  std::set<int> seen;
  for (int p : c.periods) {
    if (p < 2) throw ConfigError("discriminator periods must be >= 2");
    if (!seen.insert(p).second) throw ConfigError("discriminator periods must be distinct");
  }
  for (const auto& r : c.stft_resolutions) validate(r);
  if (c.multi_band) {
    validate(c.multi_band_stft);
    if (c.band_slices.empty()) throw ConfigError("multi-band branch needs band slices");
    for (auto [lo, hi] : c.band_slices)
      if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) throw ConfigError("band slice out of [0, 1]");
  }
  if (c.period_channels.empty()) throw ConfigError("period branch needs at least one layer");
  for (int ch : c.period_channels)
    if (ch < 1) throw ConfigError("channel widths must be positive");
  if (c.stft_channels < 1) throw ConfigError("channel widths must be positive");
  if (c.power_iterations < 1 || c.warmup_iterations < 1)
    throw ConfigError("power iterations must be >= 1");
  if (c.num_branches() < 1) throw ConfigError("discriminator has no branches");
}

PowerIterationResult spectral_normalize(MatrixRef<float> weight, int iterations,
                                        std::vector<double>& u, uint64_t init_seed) {
  if (iterations < 1) throw ConfigError("spectral_normalize needs iterations >= 1");
  const int m = weight.rows, n = weight.cols;
  if (weight.data.size() != static_cast<std::size_t>(m) * n)
    throw ShapeError("spectral_normalize weight size mismatch");
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::max(std::sqrt(s), 1e-12);
    for (double& v : x) v /= s;
  };
  if (u.size() != static_cast<std::size_t>(m)) {
    CounterRng rng(init_seed);
    u.resize(m);
    for (double& x : u) x = rng.normal();
    normalize(u);
  }
  std::vector<double> v(n);
  for (int it = 0; it < iterations; ++it) {
    std::fill(v.begin(), v.end(), 0.0);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) v[c] += weight(r, c) * u[r];
    normalize(v);
    for (int r = 0; r < m; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) acc += weight(r, c) * v[c];
      u[r] = acc;
    }
    normalize(u);
  }
  double sigma = 0.0;
  for (int r = 0; r < m; ++r) {
    double acc = 0.0;
    for (int c = 0; c < n; ++c) acc += weight(r, c) * v[c];
    sigma += u[r] * acc;
  }
  sigma = std::max(sigma, 1e-12);
  PowerIterationResult out;
  out.sigma = sigma;
  out.normalized.resize(weight.data.size());
  for (std::size_t i = 0; i < weight.data.size(); ++i)
    out.normalized[i] = static_cast<float>(weight.data[i] / sigma);
  return out;
}

double BranchOutput::score() const {
  if (scores.empty()) return 0.0;
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

FeatureMap conv2d(const FeatureMap& x, const std::vector<float>& weight,
                  const std::vector<int>& wshape, std::span<const float> bias,
                  const Conv2dSpec& s) {
  if (x.shape.size() != 3 || wshape.size() != 4 || wshape[1] != x.shape[0])
    throw ShapeError("conv2d shape mismatch");
  const int cin = x.shape[0], h = x.shape[1], w = x.shape[2];
  const int cout = wshape[0], kh = wshape[2], kw = wshape[3];
  if (bias.size() != static_cast<std::size_t>(cout)) throw ShapeError("conv2d bias mismatch");
  const int ho = (h + 2 * s.pad_h - s.dilation_h * (kh - 1) - 1) / s.stride_h + 1;
  const int wo = (w + 2 * s.pad_w - s.dilation_w * (kw - 1) - 1) / s.stride_w + 1;
  if (ho < 1 || wo < 1) throw InputTooShortError("input too small for convolution");
  FeatureMap y{{cout, ho, wo}, std::vector<float>(static_cast<std::size_t>(cout) * ho * wo)};
  for (int co = 0; co < cout; ++co) {
    float* yc = y.values.data() + static_cast<std::size_t>(co) * ho * wo;
    std::fill(yc, yc + static_cast<std::size_t>(ho) * wo, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const float* xc = x.values.data() + static_cast<std::size_t>(ci) * h * w;
      for (int i = 0; i < kh; ++i) {
        for (int j = 0; j < kw; ++j) {
          const float wt = weight[((static_cast<std::size_t>(co) * cin + ci) * kh + i) * kw + j];
          if (wt == 0.0f) continue;
          const int col_off = j * s.dilation_w - s.pad_w;
          // Output columns whose input column lies inside [0, w).
          int ow_lo = 0;
          while (ow_lo < wo && ow_lo * s.stride_w + col_off < 0) ++ow_lo;
          int ow_hi = wo;
          while (ow_hi > ow_lo && (ow_hi - 1) * s.stride_w + col_off >= w) --ow_hi;
          for (int oh = 0; oh < ho; ++oh) {
            const int ih = oh * s.stride_h + i * s.dilation_h - s.pad_h;
            if (ih < 0 || ih >= h) continue;
            const float* xr = xc + static_cast<std::size_t>(ih) * w + col_off;
            float* yr = yc + static_cast<std::size_t>(oh) * wo;
            if (s.stride_w == 1) {
              for (int ow = ow_lo; ow < ow_hi; ++ow) yr[ow] += wt * xr[ow];
            } else {
              for (int ow = ow_lo; ow < ow_hi; ++ow) yr[ow] += wt * xr[ow * s.stride_w];
            }
          }
        }
      }
    }
  }
  return y;
}

Manifest discriminator_manifest(const DiscriminatorConfig& config) {
  validate(config);
  Manifest m;
  for (const auto& [branch, layers] : all_branches(config))
    for (const auto& l : layers) {
      m[l.name + ".weight"] = {l.cout, l.cin, l.kh, l.kw};
      m[l.name + ".bias"] = {l.cout};
    }
  return m;
}

WeightStore init_discriminator_weights(const DiscriminatorConfig& config, uint64_t seed) {
  const CounterRng root(seed);
  WeightStore store;
  for (const auto& [name, shape] : discriminator_manifest(config)) {
    Param p;
    p.shape = shape;
    p.values.assign(p.count(), 0.0f);
    if (shape.size() == 4) {
      const double bound = std::sqrt(1.0 / (shape[1] * shape[2] * shape[3]));
      CounterRng rng = root.derive(name);
      for (auto& v : p.values) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    store.set(name, std::move(p));
  }
  return store;
}

std::vector<BranchOutput> discriminator_forward(const Waveform& wave, const WeightStore& weights,
                                                const DiscriminatorConfig& config,
                                                SpectralNormState& state) {
  validate(config);
  validate(wave);
  std::size_t need = 1;
  for (int p : config.periods) need = std::max<std::size_t>(need, p);
  for (const auto& r : config.stft_resolutions) need = std::max<std::size_t>(need, r.n_fft);
  if (config.multi_band) need = std::max<std::size_t>(need, config.multi_band_stft.n_fft);
  if (wave.size() < need)
    throw InputTooShortError("discriminator needs at least " + std::to_string(need) +
                             " samples, got " + std::to_string(wave.size()));

  std::vector<BranchOutput> outputs;
  const auto branches = all_branches(config);
  std::size_t b = 0;
  auto finish = [&](BranchOutput& out, const FeatureMap& last) {
    out.scores.assign(last.values.begin(), last.values.end());
    outputs.push_back(std::move(out));
  };

  const auto& x = wave.samples;
  for (int p : config.periods) {
    const auto& [name, layers] = branches[b++];
    // Fold into (1, ceil(T/p), p), reflect-padding the tail.
    const std::size_t rows = (x.size() + p - 1) / p;
    FeatureMap folded{{1, static_cast<int>(rows), p}, std::vector<float>(rows * p)};
    for (std::size_t i = 0; i < rows * p; ++i) {
      std::size_t src = i;
      if (src >= x.size()) src = 2 * (x.size() - 1) - src;
      folded.values[i] = static_cast<float>(x[std::min(src, x.size() - 1)]);
    }
    BranchOutput out{name, {}, {}};
    const FeatureMap last = run_stack(std::move(folded), layers, weights, config, state, out.features);
    finish(out, last);
  }
  for (const auto& res : config.stft_resolutions) {
    const auto& [name, layers] = branches[b++];
    const RealGrid mag = magnitude(stft(wave, res));
    BranchOutput out{name, {}, {}};
    const FeatureMap last = run_stack(magnitude_map(mag, 0, mag.rows), layers, weights, config,
                                      state, out.features);
    finish(out, last);
  }
  if (config.multi_band) {
    const auto& [name, layers] = branches[b++];
    const RealGrid mag = magnitude(stft(wave, config.multi_band_stft));
    BranchOutput out{name, {}, {}};
    for (auto [lo_f, hi_f] : config.band_slices) {
      const int lo = static_cast<int>(std::floor(lo_f * mag.rows));
      const int hi = std::max(lo + 1, static_cast<int>(std::floor(hi_f * mag.rows)));
      const FeatureMap last =
          run_stack(magnitude_map(mag, lo, std::min(hi, mag.rows)), layers, weights, config,
                    state, out.features);
      out.scores.insert(out.scores.end(), last.values.begin(), last.values.end());
    }
    outputs.push_back(std::move(out));
  }
  return outputs;
}

}  // namespace vr
