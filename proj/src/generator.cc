#include "vocalrestore/generator.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vocalrestore/error.h"
#include "vocalrestore/file_util.h"
#include "vocalrestore/nncore.h"
#include "vocalrestore/rng.h"

namespace vr {
namespace {

constexpr int kTemporalStack = 3;  // dilations {1, d, 1}
constexpr float kLayerScaleInit = 1e-6f;

std::string idx(const std::string& prefix, int i) { return prefix + std::to_string(i) + "."; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false for " + key + ", got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("expected an integer for " + key + ", got '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("expected a number for " + key + ", got '" + v + "'");
  }
}

void add_norm(Manifest& m, const std::string& prefix, int width) {
  m[prefix + "norm.gain"] = {width};
}

void add_linear(Manifest& m, const std::string& prefix, int out, int in, bool bias = true) {
  m[prefix + "weight"] = {out, in};
  if (bias) m[prefix + "bias"] = {out};
}

void add_temporal(Manifest& m, const std::string& prefix, const ModelConfig& c) {
  for (int j = 0; j < kTemporalStack; ++j) {
    const std::string p = idx(prefix, j);
    m[p + "dw.weight"] = {c.dim, c.conv_kernel};
    m[p + "dw.bias"] = {c.dim};
    add_norm(m, p, c.dim);
    add_linear(m, p + "pw1.", 2 * c.ff_dim(), c.dim);
    add_linear(m, p + "pw2.", c.dim, c.ff_dim());
    m[p + "gamma"] = {c.dim};
  }
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

int ModelConfig::dilation(int layer) const {
  long long d = 1;
  for (int i = 0; i < layer && d < dilation_cap; ++i) d *= 2;
  return static_cast<int>(std::min<long long>(d, dilation_cap));
}

ModelConfig ModelConfig::toy() {
  ModelConfig c;
  c.n_fft = 256;
  c.hop = 128;
  c.n_band = 8;
  c.dim = 16;
  c.layers = 2;
  c.heads = 2;
  return c;
}

ModelConfig ModelConfig::full() { return ModelConfig{}; }

void validate(const ModelConfig& c) {
  if (c.sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  validate(c.stft());
  if (c.n_band < 1 || c.n_band > c.bins())
    throw ConfigError("n_band must be in [1, n_fft/2+1]");
  if (c.dim < 1 || c.heads < 1 || c.dim % c.heads != 0)
    throw ConfigError("dim must be a positive multiple of heads");
  if ((c.dim / c.heads) % 2 != 0)
    throw ConfigError("head dimension must be even for rotary encoding");
  if (c.layers < 1) throw ConfigError("layers must be >= 1");
  if (c.dilation_cap < 1) throw ConfigError("dilation_cap must be >= 1");
  if (c.conv_kernel < 1 || c.conv_kernel % 2 == 0)
    throw ConfigError("conv_kernel must be odd");
  if (c.ff_expansion < 1) throw ConfigError("ff_expansion must be >= 1");
  if (c.head_hidden < 0) throw ConfigError("head_hidden must be >= 0");
  if (!(c.eps >= 0.0)) throw ConfigError("eps must be >= 0");
}

std::string format_config(const ModelConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "sample_rate = " << c.sample_rate << "\n"
     << "n_fft = " << c.n_fft << "\n"
     << "hop = " << c.hop << "\n"
     << "n_band = " << c.n_band << "\n"
     << "dim = " << c.dim << "\n"
     << "layers = " << c.layers << "\n"
     << "heads = " << c.heads << "\n"
     << "conv_kernel = " << c.conv_kernel << "\n"
     << "dilation_cap = " << c.dilation_cap << "\n"
     << "ff_expansion = " << c.ff_expansion << "\n"
     << "eps = " << c.eps << "\n"
     << "head_hidden = " << c.head_hidden << "\n"
     << "share_temporal_weights = " << (c.share_temporal_weights ? "true" : "false") << "\n"
     << "sequential_paths = " << (c.sequential_paths ? "true" : "false") << "\n";
  return os.str();
}

ModelConfig parse_config(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (key == "sample_rate") c.sample_rate = parse_int(key, v);
    else if (key == "n_fft") c.n_fft = parse_int(key, v);
    else if (key == "hop") c.hop = parse_int(key, v);
    else if (key == "n_band") c.n_band = parse_int(key, v);
    else if (key == "dim") c.dim = parse_int(key, v);
    else if (key == "layers") c.layers = parse_int(key, v);
    else if (key == "heads") c.heads = parse_int(key, v);
    else if (key == "conv_kernel") c.conv_kernel = parse_int(key, v);
    else if (key == "dilation_cap") c.dilation_cap = parse_int(key, v);
    else if (key == "ff_expansion") c.ff_expansion = parse_int(key, v);
    else if (key == "eps") c.eps = parse_double(key, v);
    else if (key == "head_hidden") c.head_hidden = parse_int(key, v);
    else if (key == "share_temporal_weights") c.share_temporal_weights = parse_bool(key, v);
    else if (key == "sequential_paths") c.sequential_paths = parse_bool(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  validate(c);
  return c;
}

ModelConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file_text(path));
}

void save_config(const ModelConfig& config, const std::filesystem::path& path) {
  write_file_atomic(path, format_config(config));
}

// ---------------------------------------------------------------------------
// Parameters

Manifest generator_manifest(const ModelConfig& c) {
  validate(c);
  const BandLayout layout = mel_band_layout(c.bins(), c.n_band, c.sample_rate);
  Manifest m;
  for (int i = 0; i < c.n_band; ++i) {
    const std::string p = idx("stem.", i);
    const int in = 2 * layout.widths[i] + 1;
    add_norm(m, p, in);
    add_linear(m, p + "proj.", c.dim, in);
  }
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = idx("blocks.", l);
    add_norm(m, p + "attn.", c.dim);
    for (const char* proj : {"q.", "k.", "v.", "o."})
      add_linear(m, p + "attn." + proj, c.dim, c.dim);
    add_norm(m, p + "ffn.", c.dim);
    m[p + "ffn.w_in"] = {c.ff_dim(), c.dim};
    m[p + "ffn.w_gate"] = {c.ff_dim(), c.dim};
    m[p + "ffn.w_out"] = {c.dim, c.ff_dim()};
    if (c.share_temporal_weights) {
      add_temporal(m, p + "temporal.", c);
    } else {
      for (int i = 0; i < c.n_band; ++i)
        add_temporal(m, p + "temporal.band" + std::to_string(i) + ".", c);
    }
  }
  for (int i = 0; i < c.n_band; ++i) {
    const std::string p = idx("heads.", i);
    add_norm(m, p, c.dim);
    add_linear(m, p + "fc1.", c.head_width(), c.dim);
    // GLU halves 4*bw_i channels to the 2*bw_i real/imaginary outputs.
    add_linear(m, p + "fc2.", 4 * layout.widths[i], c.head_width());
  }
  return m;
}

WeightStore init_weights(const ModelConfig& config, uint64_t seed) {
  const Manifest m = generator_manifest(config);
  const CounterRng root(seed);
  WeightStore store;
  for (const auto& [name, shape] : m) {
    Param p;
    p.shape = shape;
    p.values.resize(p.count());
    if (ends_with(name, ".gain")) {
      std::fill(p.values.begin(), p.values.end(), 1.0f);
    } else if (ends_with(name, ".bias")) {
      std::fill(p.values.begin(), p.values.end(), 0.0f);
    } else if (ends_with(name, ".gamma")) {
      std::fill(p.values.begin(), p.values.end(), kLayerScaleInit);
    } else {
      const double bound = std::sqrt(1.0 / shape.back());
      CounterRng rng = root.derive(name);
      for (auto& v : p.values) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    store.set(name, std::move(p));
  }
  return store;
}

WeightStore load_weights(const std::filesystem::path& path, const ModelConfig& config) {
  WeightStore store = load_weights(path);
  check_manifest(store, generator_manifest(config));
  return store;
}

// ---------------------------------------------------------------------------
// Forward pass

Generator::Generator(ModelConfig config, WeightStore weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  validate(config_);
  check_manifest(weights_, generator_manifest(config_));
  layout_ = mel_band_layout(config_.bins(), config_.n_band, config_.sample_rate);
}

std::string Generator::temporal_prefix(int layer, int band) const {
  std::string p = idx("blocks.", layer) + "temporal.";
  if (!config_.share_temporal_weights) p += "band" + std::to_string(band) + ".";
  return p;
}

BandedHidden Generator::stem(const PackedBandFeatures& packed) const {
  const int nb = layout_.num_bands();
  if (static_cast<int>(packed.bands.size()) != nb)
    throw ShapeError("packed features have " + std::to_string(packed.bands.size()) +
                     " bands, layout has " + std::to_string(nb));
  const int frames = packed.bands.empty() ? 0 : packed.bands[0].cols;
  for (int i = 0; i < nb; ++i)
    if (packed.bands[i].rows != 2 * layout_.widths[i] + 1 || packed.bands[i].cols != frames)
      throw ShapeError("packed band " + std::to_string(i) + " has the wrong shape");

  BandedHidden h(nb, config_.dim, frames);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nb; ++i) {
    const std::string p = idx("stem.", i);
    const auto& g = packed.bands[i];
    std::vector<float> x(g.data.begin(), g.data.end());
    std::vector<float> xn(x.size());
    nn::rmsnorm_block(x.data(), g.rows, frames, weights_.vector(p + "norm.gain").data(),
                      xn.data());
    nn::pointwise_block(xn.data(), g.rows, frames, weights_.vector(p + "proj.weight").data(),
                        config_.dim, weights_.vector(p + "proj.bias").data(), h.group(i));
  }
  return h;
}

BandedHidden Generator::attention_path(const BandedHidden& h, int layer) const {
  const int nb = h.groups(), dim = h.channels(), frames = h.length();
  if (nb != layout_.num_bands() || dim != config_.dim)
    throw ShapeError("hidden state shape does not match the config");
  const std::string p = idx("blocks.", layer);
  const std::size_t block = static_cast<std::size_t>(dim) * frames;
  const int dh = dim / config_.heads;
  const auto attn_gain = weights_.vector(p + "attn.norm.gain");
  const auto ffn_gain = weights_.vector(p + "ffn.norm.gain");

  Tensor3 q(nb, dim, frames), k(nb, dim, frames), v(nb, dim, frames);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nb; ++i) {
    std::vector<float> xn(block);
    nn::rmsnorm_block(h.group(i), dim, frames, attn_gain.data(), xn.data());
    nn::pointwise_block(xn.data(), dim, frames, weights_.vector(p + "attn.q.weight").data(), dim,
                        weights_.vector(p + "attn.q.bias").data(), q.group(i));
    nn::pointwise_block(xn.data(), dim, frames, weights_.vector(p + "attn.k.weight").data(), dim,
                        weights_.vector(p + "attn.k.bias").data(), k.group(i));
    nn::pointwise_block(xn.data(), dim, frames, weights_.vector(p + "attn.v.weight").data(), dim,
                        weights_.vector(p + "attn.v.bias").data(), v.group(i));
    nn::rope_block(q.group(i), dim, frames, dh, i);
    nn::rope_block(k.group(i), dim, frames, dh, i);
  }
  Tensor3 mixed(nb, dim, frames);
  nn::attention_core_raw<float>(q.values().data(), k.values().data(), v.values().data(), nb, dim,
                                frames, config_.heads, mixed.values().data(), nullptr);

  Tensor3 delta(nb, dim, frames);
  const int ff = config_.ff_dim();
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nb; ++i) {
    float* d = delta.group(i);
    nn::pointwise_block(mixed.group(i), dim, frames, weights_.vector(p + "attn.o.weight").data(),
                        dim, weights_.vector(p + "attn.o.bias").data(), d);
    std::vector<float> a(block), an(block);
    const float* hi = h.group(i);
    for (std::size_t j = 0; j < block; ++j) a[j] = hi[j] + d[j];
    nn::rmsnorm_block(a.data(), dim, frames, ffn_gain.data(), an.data());
    std::vector<float> gate(static_cast<std::size_t>(ff) * frames), lin(gate.size());
    nn::pointwise_block<float>(an.data(), dim, frames, weights_.vector(p + "ffn.w_gate").data(),
                               ff, nullptr, gate.data());
    nn::pointwise_block<float>(an.data(), dim, frames, weights_.vector(p + "ffn.w_in").data(), ff,
                               nullptr, lin.data());
    nn::silu_inplace(gate.data(), gate.size());
    for (std::size_t j = 0; j < gate.size(); ++j) gate[j] *= lin[j];
    std::vector<float> ffn_out(block);
    nn::pointwise_block<float>(gate.data(), ff, frames, weights_.vector(p + "ffn.w_out").data(),
                               dim, nullptr, ffn_out.data());
    for (std::size_t j = 0; j < block; ++j) d[j] += ffn_out[j];
  }
  return delta;
}

BandedHidden Generator::temporal_path(const BandedHidden& h, int layer) const {
  const int nb = h.groups(), dim = h.channels(), frames = h.length();
  if (nb != layout_.num_bands() || dim != config_.dim)
    throw ShapeError("hidden state shape does not match the config");
  const std::size_t block = static_cast<std::size_t>(dim) * frames;
  const int ff = config_.ff_dim();
  const int d = config_.dilation(layer + 1);
  Tensor3 delta(nb, dim, frames);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < nb; ++i) {
    const std::string base = temporal_prefix(layer, i);
    std::vector<float> z(h.group(i), h.group(i) + block);
    std::vector<float> conv(block), normed(block), q(block);
    std::vector<float> expand(2 * static_cast<std::size_t>(ff) * frames);
    float* acc = delta.group(i);
    for (int j = 0; j < kTemporalStack; ++j) {
      const std::string p = idx(base, j);
      const int dilation = (j == 1) ? d : 1;
      nn::depthwise_block(z.data(), dim, frames, weights_.vector(p + "dw.weight").data(),
                          config_.conv_kernel, weights_.vector(p + "dw.bias").data(), dilation,
                          conv.data());
      nn::rmsnorm_block(conv.data(), dim, frames, weights_.vector(p + "norm.gain").data(),
                        normed.data());
      nn::pointwise_block(normed.data(), dim, frames, weights_.vector(p + "pw1.weight").data(),
                          2 * ff, weights_.vector(p + "pw1.bias").data(), expand.data());
      nn::glu_block(expand.data(), ff, frames);
      nn::pointwise_block(expand.data(), ff, frames, weights_.vector(p + "pw2.weight").data(),
                          dim, weights_.vector(p + "pw2.bias").data(), q.data());
      const auto gamma = weights_.vector(p + "gamma");
      for (int c = 0; c < dim; ++c) {
        const float g = gamma[c];
        float* qr = q.data() + static_cast<std::size_t>(c) * frames;
        float* zr = z.data() + static_cast<std::size_t>(c) * frames;
        float* ar = acc + static_cast<std::size_t>(c) * frames;
        for (int t = 0; t < frames; ++t) {
          const float s = g * qr[t];
          zr[t] += s;
          ar[t] += s;
        }
      }
    }
  }
  return delta;
}

BandedHidden Generator::block(const BandedHidden& h, int layer) const {
  if (layer < 0 || layer >= config_.layers) throw ShapeError("layer index out of range");
  if (!config_.sequential_paths) {
    const Tensor3 a = attention_path(h, layer);
    const Tensor3 t = temporal_path(h, layer);
    Tensor3 out = h;
    auto& o = out.values();
    for (std::size_t j = 0; j < o.size(); ++j) o[j] = (o[j] + a.values()[j]) + t.values()[j];
    return out;
  }
  Tensor3 mid = h;
  const Tensor3 a = attention_path(h, layer);
  for (std::size_t j = 0; j < mid.size(); ++j) mid.values()[j] += a.values()[j];
  const Tensor3 t = temporal_path(mid, layer);
  for (std::size_t j = 0; j < mid.size(); ++j) mid.values()[j] += t.values()[j];
  return mid;
}

BandSlice Generator::synthesis_head(const float* latent, int frames, int band) const {
  const std::string p = idx("heads.", band);
  const int dim = config_.dim, hidden = config_.head_width();
  const int bw = layout_.widths[band];
  const auto fc2 = weights_.matrix(p + "fc2.weight");
  if (fc2.rows != 4 * bw) throw ShapeError("head " + std::to_string(band) + " must emit 4*bw channels");
  std::vector<float> xn(static_cast<std::size_t>(dim) * frames);
  std::vector<float> mid(static_cast<std::size_t>(hidden) * frames);
  std::vector<float> out(static_cast<std::size_t>(4 * bw) * frames);
  nn::rmsnorm_block(latent, dim, frames, weights_.vector(p + "norm.gain").data(), xn.data());
  nn::pointwise_block(xn.data(), dim, frames, weights_.vector(p + "fc1.weight").data(), hidden,
                      weights_.vector(p + "fc1.bias").data(), mid.data());
  nn::silu_inplace(mid.data(), mid.size());
  nn::pointwise_block(mid.data(), hidden, frames, fc2.data.data(), 4 * bw,
                      weights_.vector(p + "fc2.bias").data(), out.data());
  nn::glu_block(out.data(), 2 * bw, frames);
  BandSlice slice(bw, frames);
  for (int k = 0; k < bw; ++k) {
    const float* re = out.data() + static_cast<std::size_t>(2 * k) * frames;
    const float* im = re + frames;
    for (int t = 0; t < frames; ++t) slice.at(k, t) = {re[t], im[t]};
  }
  return slice;
}

ComplexSpectrogram Generator::forward(const ComplexSpectrogram& x) const {
  if (x.bins() != config_.bins() || x.params.n_fft != config_.n_fft)
    throw ShapeError("spectrogram has " + std::to_string(x.bins()) + " bins, model expects " +
                     std::to_string(config_.bins()));
  const PackedBandFeatures packed = pack_band_features(x, layout_, config_.eps);
  BandedHidden h = stem(packed);
  for (int l = 0; l < config_.layers; ++l) h = block(h, l);
  std::vector<BandSlice> bands(layout_.num_bands());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < layout_.num_bands(); ++i)
    bands[i] = synthesis_head(h.group(i), h.length(), i);
  return reassemble(bands, layout_, x.params);
}

Waveform Generator::restore(const Waveform& wave) const {
  validate(wave);
  if (wave.sample_rate != config_.sample_rate)
    throw SampleRateError("input is " + std::to_string(wave.sample_rate) + " Hz, model expects " +
                          std::to_string(config_.sample_rate) + " Hz");
  const ComplexSpectrogram x = stft(wave, config_.stft());
  return istft(forward(x), wave.size(), wave.sample_rate);
}

ComplexSpectrogram generator_forward(const ComplexSpectrogram& x, const WeightStore& weights,
                                     const ModelConfig& config) {
  return Generator(config, weights).forward(x);
}

Waveform restore(const Waveform& wave, const WeightStore& weights, const ModelConfig& config) {
  return Generator(config, weights).restore(wave);
}

Waveform restore_chunked(const Generator& gen, const Waveform& wave, double segment_s,
                         double overlap_s) {
  const int sr = wave.sample_rate;
  const std::size_t seg = static_cast<std::size_t>(std::llround(segment_s * sr));
  const std::size_t overlap = static_cast<std::size_t>(std::llround(overlap_s * sr));
  if (seg == 0 || overlap >= seg) throw ConfigError("segment must be longer than the overlap");
  if (wave.size() <= seg) return gen.restore(wave);

  Waveform out;
  out.sample_rate = sr;
  out.samples.assign(wave.size(), 0.0);
  std::size_t start = 0;
  bool first = true;
  while (true) {
    const std::size_t end = std::min(start + seg, wave.size());
    const bool last = end == wave.size();
    Waveform piece;
    piece.sample_rate = sr;
    piece.samples.assign(wave.samples.begin() + start, wave.samples.begin() + end);
    const Waveform restored = gen.restore(piece);
    for (std::size_t i = 0; i < restored.size(); ++i) {
      double w = 1.0;
      if (!first && i < overlap) w = (i + 0.5) / overlap;
      if (!last && i >= restored.size() - overlap)
        w = 1.0 - (i - (restored.size() - overlap) + 0.5) / overlap;
      out.samples[start + i] += w * restored.samples[i];
    }
    if (last) break;
    start += seg - overlap;
    first = false;
  }
  return out;
}

}  // namespace vr
