// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.h"
#include "vocalrestore/bandsplit.h"
#include "vocalrestore/cli.h"
#include "vocalrestore/degrade.h"
#include "vocalrestore/generator.h"
#include "vocalrestore/losses.h"
#include "vocalrestore/nncore.h"
#include "vocalrestore/ranking.h"
#include "vocalrestore/spectral.h"

using namespace vr;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

Waveform noise(std::size_t n, uint64_t seed, double scale = 0.3) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Waveform w;
  w.samples.resize(n);
  for (auto& s : w.samples) s = nd(gen);
  return w;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

Verdict stft_correctness() {
  double worst_rel = 0.0;
  for (int n_fft : {8, 16, 512}) {
    const int hop = n_fft / 4;
    const Waveform x = noise(static_cast<std::size_t>(n_fft) * 6 + 3, n_fft);
    const ComplexSpectrogram s = stft(x, {n_fft, hop, WindowKind::kHann, true});
    for (int t = 0; t < s.frames; ++t) {
      const auto ref = oracle::dft(oracle::centered_frame(x.samples, n_fft, hop, t));
      double num = 0.0, den = 0.0;
      for (int f = 0; f < s.bins(); ++f) {
        num = std::max(num, std::abs(s.at(f, t) - ref[f]));
        den = std::max(den, std::abs(ref[f]));
      }
      worst_rel = std::max(worst_rel, num / den);
    }
  }
  double worst_rt = 0.0;
  const StftParams p{4096, 2048, WindowKind::kHann, true};
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Waveform x = noise(48000, 100 + seed, 0.5);
    const Waveform y = istft(stft(x, p), x.size(), x.sample_rate);
    for (std::size_t i = 0; i < x.size(); ++i) worst_rt = std::max(worst_rt, std::abs(x.samples[i] - y.samples[i]));
  }
  return {worst_rel < 1e-9 && worst_rt < 1e-6, "frame rel err " + fmt(worst_rel) + ", round trip " + fmt(worst_rt)};
}

Verdict band_partition() {
  std::mt19937_64 gen(7);
  const int rates[] = {16000, 22050, 44100, 48000};
  int bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int bins = std::uniform_int_distribution<int>(2, 4097)(gen);
    const int bands = std::uniform_int_distribution<int>(1, std::min(bins, 256))(gen);
    const BandLayout l = mel_band_layout(bins, bands, rates[trial % 4]);
    int sum = 0;
    for (int w : l.widths) {
      sum += w;
      bad += w < 1;
    }
    bad += sum != bins || l.num_bands() != bands;
  }
  for (int bins : {2, 33, 257, 2049}) {
    const BandLayout one = mel_band_layout(bins, 1, 48000);
    bad += one.widths != std::vector<int>{bins};
    const BandLayout all = mel_band_layout(bins, bins, 48000);
    bad += all.widths != std::vector<int>(bins, 1);
  }
  return {bad == 0, std::to_string(bad) + " violations"};
}

Verdict envelope() {
  const double eps = 1e-8, root = std::sqrt(eps);
  const StftParams p{512, 128, WindowKind::kHann, true};
  const BandLayout l = mel_band_layout(p.bins(), 16, 48000);
  ComplexSpectrogram zero(p, 20);
  double zero_err = 0.0;
  for (double v : band_envelope(zero, l, eps).values.data) zero_err = std::max(zero_err, std::abs(v - root));

  double worst = 0.0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ComplexSpectrogram s = stft(noise(8000, seed, 0.3), p);
    ComplexSpectrogram s10 = s;
    for (auto& z : s10.data) z *= 10.0;
    const auto a = band_envelope(s, l, eps), b = band_envelope(s10, l, eps);
    for (std::size_t i = 0; i < a.values.data.size(); ++i)
      worst = std::max(worst, std::abs(b.values.data[i] / a.values.data[i] - 10.0));
  }
  return {zero_err == 0.0 && worst <= root,
          "zero-input deviation " + fmt(zero_err) + ", max |ratio - 10| " + fmt(worst)};
}

Verdict generator_shape() {
  const ModelConfig c = ModelConfig::toy();
  const Generator g(c, init_weights(c, 1));
  std::mt19937_64 gen(3);
  int bad = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int frames = std::uniform_int_distribution<int>(1, 64)(gen);
    ComplexSpectrogram x(c.stft(), frames);
    const double scale = std::pow(10.0, std::uniform_real_distribution<double>(-4.0, 2.0)(gen));
    std::normal_distribution<double> nd(0.0, scale);
    for (auto& z : x.data) z = {nd(gen), nd(gen)};
    const ComplexSpectrogram y = g.forward(x);
    bad += y.bins() != x.bins() || y.frames != x.frames || !(y.params == x.params);
    for (const auto& z : y.data) bad += !std::isfinite(z.real()) || !std::isfinite(z.imag());
    bad += g.forward(x).data != y.data;
  }
  return {bad == 0, std::to_string(bad) + " violations over 50 inputs"};
}

Verdict attention_scaling() {
  const int dim = 128, heads = 4;
  const std::vector<int> bands = {8, 16, 32}, frames = {32, 64, 128};
  std::vector<double> lb, lt, ly;
  std::mt19937_64 gen(5);
  std::normal_distribution<float> nd;
  for (int nb : bands)
    for (int ts : frames) {
      Tensor3 q(nb, dim, ts), k(nb, dim, ts), v(nb, dim, ts);
      for (auto* t : {&q, &k, &v})
        for (auto& x : t->values()) x = nd(gen);
      // Best of several batches, each long enough to dwarf timer overhead.
      double best = 1e30;
      for (int rep = 0; rep < 5; ++rep) {
        int calls = 0;
        const auto t0 = Clock::now();
        double elapsed = 0.0;
        do {
          const Tensor3 out = nn::attention_core<float>(q, k, v, heads);
          if (out.size() == 0) std::abort();
          ++calls;
          elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
        } while (elapsed < 0.05);
        best = std::min(best, elapsed / calls);
      }
      lb.push_back(std::log(nb));
      lt.push_back(std::log(ts));
      ly.push_back(std::log(best));
    }
  // Least squares y = a + b log nb + c log ts.
  double m[3][4] = {};
  for (std::size_t i = 0; i < ly.size(); ++i) {
    const double r[3] = {1.0, lb[i], lt[i]};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) m[a][b] += r[a] * r[b];
      m[a][3] += r[a] * ly[i];
    }
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  const double eb = m[1][3] / m[1][1], et = m[2][3] / m[2][2];
  return {std::abs(eb - 2.0) <= 0.3 && std::abs(et - 1.0) <= 0.3,
          "n_band exponent " + fmt(eb) + ", T_s exponent " + fmt(et)};
}

Verdict loss_identities() {
  std::vector<std::string> fails;
  const LossWeights w;
  for (uint64_t seed = 0; seed < 5; ++seed) {
    const Waveform y = noise(12000, seed);
    const LossReport r = reconstruction_report(y, y, w);
    if (r.wav != 0.0 || r.spec != 0.0 || r.omni != 0.0 || r.recon != 0.0) fails.push_back("identity");
  }
  if (hinge_d_loss(std::vector<double>{1.0, 1.0}, std::vector<double>{-1.0, -1.0}) != 0.0) fails.push_back("hinge margin");
  if (hinge_d_loss(std::vector<double>{0.0}, std::vector<double>{0.0}) != 2.0) fails.push_back("hinge zero");

  // Features large enough that eps is negligible and exactly representable
  // before and after scaling, so the check isolates the normalized form.
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> ud(100, 1000);
  std::bernoulli_distribution sign(0.5);
  FeatureSet real(2), fake(2);
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 3; ++l) {
      FeatureMap a{{1, 1, 16}, {}}, b{{1, 1, 16}, {}};
      for (int i = 0; i < 16; ++i) {
        a.values.push_back(static_cast<float>((sign(gen) ? 10 : -10) * ud(gen)));
        b.values.push_back(static_cast<float>((sign(gen) ? 10 : -10) * ud(gen)));
      }
      real[k].push_back(a);
      fake[k].push_back(b);
    }
  if (feature_matching(real, real) != 0.0) fails.push_back("fm identity");
  const double base = feature_matching(real, fake);
  double fm_dev = 0.0;
  for (float c : {0.1f, 10.0f}) {
    FeatureSet rs = real, fs = fake;
    for (auto& v : rs[1][1].values) v *= c;
    for (auto& v : fs[1][1].values) v *= c;
    fm_dev = std::max(fm_dev, std::abs(feature_matching(rs, fs) - base));
  }
  if (fm_dev > 1e-9) fails.push_back("fm scale " + fmt(fm_dev));

  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double comp_dev = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    LossWeights lw;
    lw.lambda_wav = std::abs(u(gen));
    lw.lambda_spec = std::abs(u(gen));
    lw.lambda_omni = std::abs(u(gen));
    lw.lambda_adv = std::abs(u(gen));
    lw.lambda_fm = std::abs(u(gen));
    LossReport r;
    r.wav = std::abs(u(gen));
    r.spec = std::abs(u(gen));
    r.omni = std::abs(u(gen));
    r.adv = u(gen);
    r.fm = std::abs(u(gen));
    const double recon = lw.lambda_wav * r.wav + lw.lambda_spec * r.spec + lw.lambda_omni * r.omni;
    const double hand = recon + lw.lambda_adv * r.adv + lw.lambda_fm * r.fm;
    comp_dev = std::max(comp_dev, std::abs(generator_total(r, lw) - hand));
    comp_dev = std::max(comp_dev, std::abs(r.recon - recon));
  }
  if (comp_dev > 1e-12) fails.push_back("L_G composition " + fmt(comp_dev));
  std::string detail = "fm scale deviation " + fmt(fm_dev) + ", L_G deviation " + fmt(comp_dev);
  for (const auto& f : fails) detail += "; failed: " + f;
  return {fails.empty(), detail};
}

Verdict degradation() {
  const Waveform x = noise(48000, 99, 0.2);
  int bad = 0;
  double snr_err = 0.0, clip_peak = 0.0;
  std::size_t stages = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    DegradationSpec spec;
    spec.seed = seed;
    const ChainResult a = apply_chain(x, spec), b = apply_chain(x, spec);
    bad += encode_wav(a.degraded, WavEncoding::kFloat32) != encode_wav(b.degraded, WavEncoding::kFloat32);
    bad += a.degraded.samples != b.degraded.samples;
    bad += trace_to_jsonl(a.trace) != trace_to_jsonl(b.trace);
    bad += replay_trace(x, trace_from_jsonl(trace_to_jsonl(a.trace))).samples != a.degraded.samples;
    Waveform cur = x;
    for (const auto& rec : a.trace.records) {
      const Waveform next = apply_stage(cur, rec);
      ++stages;
      bad += next.size() != cur.size();
      for (double v : next.samples) bad += !std::isfinite(v);
      if (rec.stage == "add_noise")
        snr_err = std::max(snr_err, std::abs(snr_db(cur, next) - rec.params.at("snr_db").get<double>()));
      if (rec.stage == "clip")
        for (double v : next.samples) clip_peak = std::max(clip_peak, std::abs(v));
      cur = next;
    }
    bad += cur.samples != a.degraded.samples;
  }
  return {bad == 0 && snr_err <= 0.01 && clip_peak <= 1.0,
          std::to_string(bad) + " violations over " + std::to_string(stages) + " stages, SNR error " + fmt(snr_err) +
              " dB, clip peak " + fmt(clip_peak)};
}

Verdict bradley_terry() {
  ComparisonSet two;
  for (int i = 0; i < 3; ++i) two.push_back({"A", "B", Outcome::kA, ""});
  two.push_back({"A", "B", Outcome::kB, ""});
  const StrengthTable t2 = fit_bradley_terry(two);
  const double ratio_err = std::abs(t2.strength("A") / t2.strength("B") - oracle::two_system_ratio(3, 1));

  std::vector<double> truth(7);
  for (int i = 0; i < 7; ++i) truth[i] = -1.5 + 0.5 * i;
  int good = 0;
  double min_r2 = 1.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const ComparisonSet d = sample_comparisons(truth, 40, seed);
    const FitMetrics m = goodness_of_fit(fit_bradley_terry(d), d);
    good += m.r2 >= 0.9;
    min_r2 = std::min(min_r2, m.r2);
  }

  // Counts matching strengths 1 : 2 : 4 exactly.
  ComparisonSet exact;
  auto add = [&](const char* a, const char* b, int wa, int wb) {
    for (int i = 0; i < wa; ++i) exact.push_back({a, b, Outcome::kA, ""});
    for (int i = 0; i < wb; ++i) exact.push_back({a, b, Outcome::kB, ""});
  };
  add("x", "y", 1, 2);
  add("x", "z", 1, 4);
  add("y", "z", 1, 2);
  const FitMetrics perfect = goodness_of_fit(fit_bradley_terry(exact), exact);
  const bool perfect_ok = std::abs(perfect.r2 - 1.0) < 1e-9 && perfect.mae < 1e-9 && perfect.rmse < 1e-9;
  return {ratio_err < 1e-6 && good >= 95 && perfect_ok,
          "ratio error " + fmt(ratio_err) + ", R2 >= 0.9 in " + std::to_string(good) + "/100 (min " + fmt(min_r2) +
              "), perfect fit (" + fmt(perfect.r2) + ", " + fmt(perfect.mae) + ", " + fmt(perfect.rmse) + ")"};
}

Verdict benchmark() {
  cli::BenchOptions o;
  o.seconds = 10.0;
  o.runs = 30;
  o.warmup = 3;
  o.threads = 4;
  std::ostringstream out, err;
  const int code = cli::cmd_bench(o, out, err);
  if (code != 0) return {false, "exit " + std::to_string(code) + ": " + err.str()};
  const auto j = nlohmann::json::parse(out.str());
  const double median = j.at("median_s"), p90 = j.at("p90_s"), mean = j.at("mean_s"), rtf = j.at("rtf");
  const bool formed = j.at("runs") == 30 && j.at("times_s").size() == 30 && median > 0.0 && median <= p90 &&
                      mean > 0.0 && j.at("audio_s") == 10.0;
  return {formed && rtf > 1.0, "median " + fmt(median) + " s, p90 " + fmt(p90) + " s, mean " + fmt(mean) +
                                   " s, RTF " + fmt(rtf) + " (threads 4)"};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict metric_disclaimer() {
  const std::filesystem::path root = VR_SOURCE_DIR;
  const std::string readme = slurp(root / "README.md");
  bool declared = false;
  {
    std::istringstream in(readme);
    std::string line;
    while (std::getline(in, line))
      if (line.find("DNSMOS") != std::string::npos && line.find("UTMOS") != std::string::npos &&
          line.find("DNS 5") != std::string::npos && line.find("out of scope") != std::string::npos)
        declared = true;
  }
  std::vector<std::string> offenders;
  for (const char* dir : {"src", "include", "tools"})
    for (const auto& e : std::filesystem::recursive_directory_iterator(root / dir)) {
      if (!e.is_regular_file()) continue;
      std::string text = slurp(e.path());
      std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
      for (const char* token : {"dnsmos", "utmos", "dns 5", "dns5"})
        if (text.find(token) != std::string::npos) offenders.push_back(e.path().filename().string());
    }
  std::string detail = declared ? "README declares them out of scope" : "README lacks the out-of-scope line";
  detail += ", " + std::to_string(offenders.size()) + " source files mention them";
  return {declared && offenders.empty(), detail};
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"stft correctness", 30, stft_correctness},
      {"band partition", 5, band_partition},
      {"band envelope", 5, envelope},
      {"generator shape contract", 60, generator_shape},
      {"attention scaling law", 300, attention_scaling},
      {"loss identities", 10, loss_identities},
      {"degradation determinism", 120, degradation},
      {"bradley-terry", 60, bradley_terry},
      {"benchmark harness", 600, benchmark},
      {"external-metric disclaimer", 5, metric_disclaimer},
  };
  std::vector<bool> selected(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const int n = std::atoi(argv[a]);
    if (n >= 1 && n <= static_cast<int>(criteria.size())) selected[n - 1] = true;
  }
  int failed = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) continue;
    ++ran;
    const auto& c = criteria[i];
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool ok = v.ok && secs < c.limit_s;
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << c.name << ": " << v.detail << " ["
              << fmt(secs) << " s / " << c.limit_s << " s]" << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
