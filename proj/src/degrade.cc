#include "vocalrestore/degrade.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "vocalrestore/error.h"
#include "vocalrestore/fft.h"
#include "vocalrestore/file_util.h"
#include "vocalrestore/rng.h"

namespace vr {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const StftParams kShapeStft{2048, 512, WindowKind::kHann, true};

const std::set<std::string>& known_stages() {
  static const std::set<std::string> s = {"freq_shape",  "reverb",           "clip",
                                          "add_noise",   "spectral_corrupt", "time_varying_gain"};
  return s;
}

double energy(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError("bad number for " + key + ": '" + s + "'");
  return v;
}

Range parse_range(const std::string& key, const std::string& s) {
  const auto pos = s.find("..");
  if (pos == std::string::npos) {
    const double v = parse_number(key, s);
    return {v, v};
  }
  return {parse_number(key, s.substr(0, pos)), parse_number(key, s.substr(pos + 2))};
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_range(Range r) { return format_number(r.lo) + ".." + format_number(r.hi); }

void check_range(const std::string& name, Range r, double min, double max) {
  if (!(r.lo <= r.hi)) throw ConfigError(name + " range must satisfy lo <= hi");
  if (r.lo < min || r.hi > max)
    throw ConfigError(name + " range must lie within [" + format_number(min) + ", " +
                      format_number(max) + "]");
}

double draw(CounterRng& rng, Range r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

Waveform with_samples(const Waveform& like, std::vector<double> samples) {
  Waveform w;
  w.sample_rate = like.sample_rate;
  w.samples = std::move(samples);
  return w;
}

}  // namespace

std::string to_string(ClipCurve curve) {
  switch (curve) {
    case ClipCurve::kHard: return "hard";
    case ClipCurve::kTanh: return "tanh";
    case ClipCurve::kCubic: return "cubic";
  }
  return "hard";
}

ClipCurve parse_clip_curve(const std::string& name) {
  if (name == "hard") return ClipCurve::kHard;
  if (name == "tanh") return ClipCurve::kTanh;
  if (name == "cubic") return ClipCurve::kCubic;
  throw ConfigError("unknown clip curve: " + name);
}

double curve_gain_db(const std::vector<GainPoint>& curve, double hz) {
  if (curve.empty()) return 0.0;
  if (hz <= curve.front().hz) return curve.front().db;
  if (hz >= curve.back().hz) return curve.back().db;
  auto hi = std::upper_bound(curve.begin(), curve.end(), hz,
                             [](double f, const GainPoint& p) { return f < p.hz; });
  auto lo = hi - 1;
  const double a = std::log(lo->hz), b = std::log(hi->hz);
  const double frac = b > a ? (std::log(hz) - a) / (b - a) : 1.0;
  return lo->db + frac * (hi->db - lo->db);
}

Waveform freq_shape(const Waveform& wave, const std::vector<GainPoint>& curve) {
  validate(wave);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (!(curve[i].hz > 0.0)) throw ConfigError("gain curve frequencies must be positive");
    if (curve[i].db < -60.0 || curve[i].db > 12.0)
      throw ConfigError("gain curve values must lie in [-60, 12] dB");
    if (i > 0 && curve[i].hz <= curve[i - 1].hz)
      throw ConfigError("gain curve frequencies must increase");
  }
  if (wave.size() == 0) return wave;
  ComplexSpectrogram spec = stft(wave, kShapeStft);
  const int bins = spec.bins();
  const double bin_hz = static_cast<double>(wave.sample_rate) / kShapeStft.n_fft;
  for (int f = 0; f < bins; ++f) {
    const double g = std::pow(10.0, curve_gain_db(curve, f * bin_hz) / 20.0);
    for (int t = 0; t < spec.frames; ++t) spec.at(f, t) *= g;
  }
  return istft(spec, wave.size(), wave.sample_rate);
}

double reverb_envelope(double t, double rt60) { return std::exp(-6.91 * t / rt60); }

std::vector<double> impulse_response(double rt60, int sample_rate, uint64_t seed) {
  if (!(rt60 >= 0.1 && rt60 <= 3.0)) throw ConfigError("rt60 must lie in [0.1, 3.0] s");
  const std::size_t len = static_cast<std::size_t>(std::ceil(rt60 * sample_rate)) + 1;
  std::vector<double> ir(len, 0.0);
  CounterRng rng(seed);
  for (std::size_t n = 1; n < len; ++n)
    ir[n] = rng.normal() * reverb_envelope(static_cast<double>(n) / sample_rate, rt60);
  const double tail = energy(ir);
  if (tail > 0.0) {
    const double s = 1.0 / std::sqrt(tail);
    for (std::size_t n = 1; n < len; ++n) ir[n] *= s;
  }
  ir[0] = 1.0;
  return ir;
}

Waveform reverb(const Waveform& wave, double rt60, double wet, uint64_t seed) {
  validate(wave);
  if (!(wet >= 0.0 && wet <= 1.0)) throw ConfigError("wet must lie in [0, 1]");
  const auto ir = impulse_response(rt60, wave.sample_rate, seed);
  const std::size_t n = wave.size();
  if (n == 0 || wet == 0.0) return wave;
  const std::size_t size = next_power_of_two(n + ir.size() - 1);
  std::vector<std::complex<double>> a(size), b(size);
  for (std::size_t i = 0; i < n; ++i) a[i] = wave.samples[i];
  for (std::size_t i = 0; i < ir.size(); ++i) b[i] = ir[i];
  const FftPlan plan(size);
  plan.forward(a);
  plan.forward(b);
  for (std::size_t i = 0; i < size; ++i) a[i] *= b[i];
  plan.inverse(a);
  std::vector<double> out(n);
  const double scale = 1.0 / static_cast<double>(size);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = (1.0 - wet) * wave.samples[i] + wet * a[i].real() * scale;
  return with_samples(wave, std::move(out));
}

double clip_sample(double x, ClipCurve curve) {
  switch (curve) {
    case ClipCurve::kHard: return std::clamp(x, -1.0, 1.0);
    case ClipCurve::kTanh: return std::tanh(x);
    case ClipCurve::kCubic:
      if (x >= 1.0) return 1.0;
      if (x <= -1.0) return -1.0;
      return 1.5 * (x - x * x * x / 3.0);
  }
  return x;
}

Waveform clip(const Waveform& wave, ClipCurve curve, double drive) {
  validate(wave);
  if (!(drive >= 1.0)) throw ConfigError("clip drive must be >= 1");
  std::vector<double> out(wave.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = clip_sample(drive * wave.samples[i], curve);
  return with_samples(wave, std::move(out));
}

Waveform add_noise(const Waveform& wave, const Waveform& noise, double snr) {
  validate(wave);
  validate(noise);
  if (!std::isfinite(snr)) throw ConfigError("snr must be finite");
  const std::size_t n = wave.size();
  const double ps = energy(wave.samples);
  if (!(ps > 0.0)) throw SilentInputError("cannot set an SNR against a silent signal");
  if (noise.size() == 0) throw SilentInputError("empty noise signal");
  std::vector<double> seg(n);
  for (std::size_t i = 0; i < n; ++i) seg[i] = noise.samples[i % noise.size()];
  const double pn = energy(seg);
  if (!(pn > 0.0)) throw SilentInputError("noise segment has zero energy");
  const double scale = std::sqrt(ps / (pn * std::pow(10.0, snr / 10.0)));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = wave.samples[i] + scale * seg[i];
  return with_samples(wave, std::move(out));
}

Waveform pink_noise(std::size_t length, int sample_rate, uint64_t seed) {
  CounterRng rng(seed);
  double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
  std::vector<double> out(length);
  for (auto& v : out) {
    const double w = rng.normal();
    b0 = 0.99886 * b0 + w * 0.0555179;
    b1 = 0.99332 * b1 + w * 0.0750759;
    b2 = 0.96900 * b2 + w * 0.1538520;
    b3 = 0.86650 * b3 + w * 0.3104856;
    b4 = 0.55000 * b4 + w * 0.5329522;
    b5 = -0.7616 * b5 - w * 0.0168980;
    v = (b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362) * 0.11;
    b6 = w * 0.115926;
  }
  Waveform wave;
  wave.sample_rate = sample_rate;
  wave.samples = std::move(out);
  return wave;
}

double snr_db(const Waveform& clean, const Waveform& mixture) {
  if (clean.size() != mixture.size()) throw LengthMismatchError("snr_db length mismatch");
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    ps += clean.samples[i] * clean.samples[i];
    const double d = mixture.samples[i] - clean.samples[i];
    pn += d * d;
  }
  return 10.0 * std::log10(ps / pn);
}

std::vector<std::pair<int, int>> corrupt_grids() {
  std::vector<std::pair<int, int>> out;
  for (int w : {512, 1024, 2048})
    for (int h : {256, 512, 1024})
      if (2 * h <= w) out.emplace_back(w, h);
  return out;
}

void corrupt_spectrogram(ComplexSpectrogram& spec, double mask_fraction, double phase_noise_std,
                         uint64_t seed) {
  if (!(mask_fraction >= 0.0 && mask_fraction <= 1.0))
    throw ConfigError("mask_fraction must lie in [0, 1]");
  if (!(phase_noise_std >= 0.0)) throw ConfigError("phase_noise_std must be >= 0");
  const CounterRng root(seed);
  CounterRng mask = root.derive("mask");
  CounterRng phase = root.derive("phase");
  for (auto& z : spec.data) {
    if (mask_fraction > 0.0 && mask.uniform() < mask_fraction) z = 0.0;
    if (phase_noise_std > 0.0) z *= std::polar(1.0, phase_noise_std * phase.normal());
  }
}

Waveform spectral_corrupt(const Waveform& wave, int window, int hop, double mask_fraction,
                          double phase_noise_std, uint64_t seed) {
  validate(wave);
  const StftParams p{window, hop, WindowKind::kHann, true};
  validate(p);
  if (wave.size() == 0) return wave;
  ComplexSpectrogram spec = stft(wave, p);
  corrupt_spectrogram(spec, mask_fraction, phase_noise_std, seed);
  return istft(spec, wave.size(), wave.sample_rate);
}

std::vector<double> gain_envelope(std::size_t length, int sample_rate, double cutoff_hz,
                                  double depth, uint64_t seed) {
  if (!(cutoff_hz > 0.0 && cutoff_hz <= 20.0)) throw ConfigError("cutoff_hz must lie in (0, 20]");
  if (!(depth >= 0.0 && depth <= 1.0)) throw ConfigError("depth must lie in [0, 1]");
  const double a = std::exp(-kTwoPi * cutoff_hz / sample_rate);
  const std::size_t warmup =
      static_cast<std::size_t>(std::ceil(5.0 * sample_rate / (kTwoPi * cutoff_hz)));
  CounterRng rng(seed);
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::vector<double> lp(length);
  for (std::size_t i = 0; i < warmup + length; ++i) {
    s1 = (1.0 - a) * rng.normal() + a * s1;
    s2 = (1.0 - a) * s1 + a * s2;
    s3 = (1.0 - a) * s2 + a * s3;
    if (i >= warmup) lp[i - warmup] = s3;
  }
  double peak = 0.0;
  for (double v : lp) peak = std::max(peak, std::abs(v));
  std::vector<double> g(length, 1.0);
  if (peak > 0.0)
    for (std::size_t i = 0; i < length; ++i) g[i] = 1.0 + depth * (lp[i] / peak);
  return g;
}

Waveform time_varying_gain(const Waveform& wave, double cutoff_hz, double depth, uint64_t seed) {
  validate(wave);
  const auto g = gain_envelope(wave.size(), wave.sample_rate, cutoff_hz, depth, seed);
  std::vector<double> out(wave.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * wave.samples[i];
  return with_samples(wave, std::move(out));
}

void validate(const DegradationSpec& s) {
  if (s.order.empty()) throw ConfigError("degradation order is empty");
  for (const auto& name : s.order)
    if (!known_stages().contains(name)) throw ConfigError("unknown degradation stage: " + name);
  for (const auto& [name, p] : s.probability) {
    if (!known_stages().contains(name)) throw ConfigError("unknown degradation stage: " + name);
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(name + " probability must lie in [0, 1]");
  }
  check_range("freq_shape.gain_db", s.shape_gain_db, -60.0, 12.0);
  if (s.shape_points < 2) throw ConfigError("freq_shape.points must be >= 2");
  check_range("reverb.rt60", s.reverb_rt60, 0.1, 3.0);
  check_range("reverb.wet", s.reverb_wet, 0.0, 1.0);
  if (s.clip_curves.empty()) throw ConfigError("clip.curves is empty");
  check_range("clip.drive", s.clip_drive, 1.0, 1e6);
  check_range("add_noise.snr_db", s.snr_db, -100.0, 200.0);
  check_range("spectral_corrupt.mask_fraction", s.mask_fraction, 0.0, 1.0);
  check_range("spectral_corrupt.phase_noise_std", s.phase_noise_std, 0.0, 1e3);
  check_range("time_varying_gain.cutoff_hz", s.tvg_cutoff_hz, 1e-6, 20.0);
  check_range("time_varying_gain.depth", s.tvg_depth, 0.0, 1.0);
}

DegradationSpec parse_degradation_spec(const std::string& text) {
  DegradationSpec s;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto dot = key.find('.');
    if (key == "seed") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), s.seed);
      if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("bad seed: " + value);
    } else if (key == "order") {
      s.order = split_list(value);
    } else if (dot != std::string::npos && key.substr(dot) == ".p") {
      const std::string stage = key.substr(0, dot);
      if (!known_stages().contains(stage)) throw ConfigError("unknown degradation stage: " + stage);
      s.probability[stage] = parse_number(key, value);
    } else if (key == "freq_shape.gain_db") {
      s.shape_gain_db = parse_range(key, value);
    } else if (key == "freq_shape.points") {
      s.shape_points = static_cast<int>(parse_number(key, value));
    } else if (key == "reverb.rt60") {
      s.reverb_rt60 = parse_range(key, value);
    } else if (key == "reverb.wet") {
      s.reverb_wet = parse_range(key, value);
    } else if (key == "clip.curves") {
      s.clip_curves.clear();
      for (const auto& c : split_list(value)) s.clip_curves.push_back(parse_clip_curve(c));
    } else if (key == "clip.drive") {
      s.clip_drive = parse_range(key, value);
    } else if (key == "add_noise.snr_db") {
      s.snr_db = parse_range(key, value);
    } else if (key == "add_noise.files") {
      s.noise_files = split_list(value);
    } else if (key == "spectral_corrupt.mask_fraction") {
      s.mask_fraction = parse_range(key, value);
    } else if (key == "spectral_corrupt.phase_noise_std") {
      s.phase_noise_std = parse_range(key, value);
    } else if (key == "time_varying_gain.cutoff_hz") {
      s.tvg_cutoff_hz = parse_range(key, value);
    } else if (key == "time_varying_gain.depth") {
      s.tvg_depth = parse_range(key, value);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  validate(s);
  return s;
}

std::string format_degradation_spec(const DegradationSpec& s) {
  std::ostringstream os;
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out;
  };
  os << "seed = " << s.seed << "\n";
  os << "order = " << join(s.order) << "\n";
  for (const auto& [name, p] : s.probability) os << name << ".p = " << format_number(p) << "\n";
  os << "freq_shape.gain_db = " << format_range(s.shape_gain_db) << "\n";
  os << "freq_shape.points = " << s.shape_points << "\n";
  os << "reverb.rt60 = " << format_range(s.reverb_rt60) << "\n";
  os << "reverb.wet = " << format_range(s.reverb_wet) << "\n";
  std::vector<std::string> curves;
  for (auto c : s.clip_curves) curves.push_back(to_string(c));
  os << "clip.curves = " << join(curves) << "\n";
  os << "clip.drive = " << format_range(s.clip_drive) << "\n";
  os << "add_noise.snr_db = " << format_range(s.snr_db) << "\n";
  if (!s.noise_files.empty()) os << "add_noise.files = " << join(s.noise_files) << "\n";
  os << "spectral_corrupt.mask_fraction = " << format_range(s.mask_fraction) << "\n";
  os << "spectral_corrupt.phase_noise_std = " << format_range(s.phase_noise_std) << "\n";
  os << "time_varying_gain.cutoff_hz = " << format_range(s.tvg_cutoff_hz) << "\n";
  os << "time_varying_gain.depth = " << format_range(s.tvg_depth) << "\n";
  return os.str();
}

DegradationSpec load_degradation_spec(const std::string& path) {
  return parse_degradation_spec(read_file_text(path));
}

std::string trace_to_jsonl(const StageTrace& trace) {
  std::string out;
  for (const auto& r : trace.records) {
    nlohmann::ordered_json line;
    line["stage"] = r.stage;
    for (const auto& [k, v] : r.params.items()) line[k] = v;
    out += line.dump() + "\n";
  }
  return out;
}

StageTrace trace_from_jsonl(const std::string& text) {
  StageTrace trace;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    nlohmann::ordered_json j;
    try {
      j = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad trace line: ") + e.what());
    }
    if (!j.is_object() || !j.contains("stage") || !j["stage"].is_string())
      throw FormatError("trace line lacks a stage name");
    StageRecord r;
    r.stage = j["stage"].get<std::string>();
    j.erase("stage");
    r.params = std::move(j);
    trace.records.push_back(std::move(r));
  }
  return trace;
}

Waveform apply_stage(const Waveform& wave, const StageRecord& r, const NoiseBank& noise) {
  const auto& p = r.params;
  try {
    if (r.stage == "freq_shape") {
      std::vector<GainPoint> curve;
      for (const auto& pt : p.at("points")) curve.push_back({pt.at(0).get<double>(), pt.at(1).get<double>()});
      return freq_shape(wave, curve);
    }
    if (r.stage == "reverb")
      return reverb(wave, p.at("rt60").get<double>(), p.at("wet").get<double>(),
                    p.at("seed").get<uint64_t>());
    if (r.stage == "clip")
      return clip(wave, parse_clip_curve(p.at("curve").get<std::string>()),
                  p.at("drive").get<double>());
    if (r.stage == "add_noise") {
      const double snr = p.at("snr_db").get<double>();
      const std::string source = p.at("source").get<std::string>();
      if (source == "pink") return add_noise(wave, pink_noise(wave.size(), wave.sample_rate, p.at("seed").get<uint64_t>()), snr);
      if (source != "file") throw ConfigError("unknown noise source: " + source);
      const auto index = p.at("index").get<std::size_t>();
      if (index >= noise.size())
        throw ConfigError("noise file index " + std::to_string(index) + " not loaded");
      const Waveform& src = noise[index];
      if (src.size() == 0) throw SilentInputError("empty noise file");
      const auto offset = p.at("offset").get<std::size_t>();
      Waveform seg;
      seg.sample_rate = src.sample_rate;
      seg.samples.resize(wave.size());
      for (std::size_t i = 0; i < wave.size(); ++i) seg.samples[i] = src.samples[(offset + i) % src.size()];
      return add_noise(wave, seg, snr);
    }
    if (r.stage == "spectral_corrupt")
      return spectral_corrupt(wave, p.at("window").get<int>(), p.at("hop").get<int>(),
                              p.at("mask_fraction").get<double>(),
                              p.at("phase_noise_std").get<double>(), p.at("seed").get<uint64_t>());
    if (r.stage == "time_varying_gain")
      return time_varying_gain(wave, p.at("cutoff_hz").get<double>(), p.at("depth").get<double>(),
                               p.at("seed").get<uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("stage " + r.stage + " has malformed parameters: " + e.what());
  }
  throw ConfigError("unknown degradation stage: " + r.stage);
}

ChainResult apply_chain(const Waveform& wave, const DegradationSpec& spec, const NoiseBank& noise) {
  validate(spec);
  validate(wave);
  if (!spec.noise_files.empty() && noise.size() != spec.noise_files.size())
    throw ConfigError("noise files listed in the spec were not loaded");
  const CounterRng root(spec.seed);
  ChainResult result{wave, {}};
  const double nyquist = wave.sample_rate / 2.0;
  for (std::size_t pos = 0; pos < spec.order.size(); ++pos) {
    const std::string& name = spec.order[pos];
    CounterRng rng = root.derive(name).derive(static_cast<uint64_t>(pos));
    const auto it = spec.probability.find(name);
    const double prob = it == spec.probability.end() ? 0.0 : it->second;
    if (!(rng.uniform() < prob)) continue;

    StageRecord r;
    r.stage = name;
    if (name == "freq_shape") {
      const double lo_hz = 100.0, hi_hz = 0.95 * nyquist;
      nlohmann::ordered_json pts = nlohmann::ordered_json::array();
      for (int i = 0; i < spec.shape_points; ++i) {
        const double hz = lo_hz * std::pow(hi_hz / lo_hz, static_cast<double>(i) / (spec.shape_points - 1));
        pts.push_back({hz, draw(rng, spec.shape_gain_db)});
      }
      r.params["points"] = pts;
    } else if (name == "reverb") {
      r.params["rt60"] = draw(rng, spec.reverb_rt60);
      r.params["wet"] = draw(rng, spec.reverb_wet);
      r.params["seed"] = rng.next_u64();
    } else if (name == "clip") {
      r.params["curve"] = to_string(spec.clip_curves[rng.below(spec.clip_curves.size())]);
      r.params["drive"] = draw(rng, spec.clip_drive);
    } else if (name == "add_noise") {
      r.params["snr_db"] = draw(rng, spec.snr_db);
      const uint64_t pick = rng.below(noise.size() + 1);
      if (pick == noise.size()) {
        r.params["source"] = "pink";
        r.params["seed"] = rng.next_u64();
      } else {
        r.params["source"] = "file";
        r.params["index"] = pick;
        r.params["offset"] = noise[pick].size() ? rng.below(noise[pick].size()) : 0;
      }
    } else if (name == "spectral_corrupt") {
      const auto grids = corrupt_grids();
      const auto [w, h] = grids[rng.below(grids.size())];
      r.params["window"] = w;
      r.params["hop"] = h;
      r.params["mask_fraction"] = draw(rng, spec.mask_fraction);
      r.params["phase_noise_std"] = draw(rng, spec.phase_noise_std);
      r.params["seed"] = rng.next_u64();
    } else if (name == "time_varying_gain") {
      r.params["cutoff_hz"] = draw(rng, spec.tvg_cutoff_hz);
      r.params["depth"] = draw(rng, spec.tvg_depth);
      r.params["seed"] = rng.next_u64();
    }
    result.degraded = apply_stage(result.degraded, r, noise);
    result.trace.records.push_back(std::move(r));
  }
  return result;
}

Waveform replay_trace(const Waveform& wave, const StageTrace& trace, const NoiseBank& noise) {
  Waveform out = wave;
  for (const auto& r : trace.records) out = apply_stage(out, r, noise);
  return out;
}

}  // namespace vr
