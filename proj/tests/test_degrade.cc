#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "test_util.h"
#include "vocalrestore/degrade.h"
#include "vocalrestore/error.h"
#include "vocalrestore/fft.h"

using namespace vr;

namespace {

double energy(const Waveform& w) {
  double e = 0.0;
  for (double s : w.samples) e += s * s;
  return e;
}

double rms(const Waveform& w) { return std::sqrt(energy(w) / static_cast<double>(w.size())); }

double max_abs_diff(const Waveform& a, const Waveform& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.samples[i] - b.samples[i]));
  return m;
}

// Energy in [lo, hi) Hz of the whole signal via one zero-padded FFT.
double band_energy(const Waveform& w, double lo, double hi) {
  const std::size_t n = next_power_of_two(w.size());
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < w.size(); ++i) buf[i] = w.samples[i];
  FftPlan(n).forward(buf);
  double e = 0.0;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const double hz = static_cast<double>(k) * w.sample_rate / n;
    if (hz >= lo && hz < hi) e += std::norm(buf[k]);
  }
  return e;
}

DegradationSpec all_on(uint64_t seed) {
  DegradationSpec s;
  s.seed = seed;
  for (auto& [name, p] : s.probability) p = 1.0;
  return s;
}

}  // namespace

TEST_CASE("flat frequency shaping is the identity") {
  const Waveform x = testutil::noise(20000, 1, 0.3);
  const Waveform y = freq_shape(x, {{100.0, 0.0}, {10000.0, 0.0}});
  REQUIRE(y.size() == x.size());
  CHECK(max_abs_diff(x, y) < 1e-5);
}

TEST_CASE("frequency shaping stop band") {
  const Waveform x = testutil::noise(48000, 2, 0.3);
  const std::vector<GainPoint> curve = {{3800.0, 0.0}, {4000.0, -60.0}};
  CHECK(curve_gain_db(curve, 100.0) == 0.0);
  CHECK(curve_gain_db(curve, 20000.0) == -60.0);
  CHECK(curve_gain_db(curve, std::sqrt(3800.0 * 4000.0)) == Catch::Approx(-30.0));
  const Waveform y = freq_shape(x, curve);
  const double att = 10.0 * std::log10(band_energy(x, 4500.0, 24001.0) / band_energy(y, 4500.0, 24001.0));
  CHECK(att >= 55.0);
  const double ratio = band_energy(y, 4500.0, 24001.0) / band_energy(y, 0.0, 3800.0);
  CHECK(ratio < 1e-3);
}

TEST_CASE("reverb") {
  const Waveform x = testutil::noise(12000, 3, 0.3);
  CHECK(reverb(x, 0.5, 0.0, 1).samples == x.samples);
  const double db = 20.0 * std::log10(reverb_envelope(0.8, 0.8) / reverb_envelope(0.0, 0.8));
  CHECK(db == Catch::Approx(-60.0).margin(0.05));

  const auto ir = impulse_response(0.3, 48000, 4);
  CHECK(ir.size() == static_cast<std::size_t>(std::ceil(0.3 * 48000)) + 1);
  CHECK(ir[0] == 1.0);
  CHECK(impulse_response(0.3, 48000, 4) == ir);

  for (uint64_t seed = 0; seed < 10; ++seed)
    for (double wet : {0.1, 0.5, 0.9}) {
      const Waveform y = reverb(x, 0.4, wet, seed);
      REQUIRE(y.size() == x.size());
      CHECK(energy(y) >= (1.0 - wet) * (1.0 - wet) * energy(x));
    }
  CHECK_THROWS_AS(reverb(x, 0.05, 0.5, 1), ConfigError);
}

TEST_CASE("clipping curves") {
  const Waveform x = testutil::noise(5000, 5, 0.8);
  for (ClipCurve c : {ClipCurve::kHard, ClipCurve::kTanh, ClipCurve::kCubic}) {
    CHECK(parse_clip_curve(to_string(c)) == c);
    for (double drive : {1.0, 3.0, 8.0}) {
      const Waveform y = clip(x, c, drive);
      Waveform neg = x;
      for (auto& s : neg.samples) s = -s;
      const Waveform yn = clip(neg, c, drive);
      for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(y.samples[i]) <= 1.0);
        CHECK(yn.samples[i] == -y.samples[i]);
      }
    }
  }
  Waveform small = testutil::noise(1000, 6, 0.05);
  for (auto& s : small.samples) s = std::clamp(s, -0.24, 0.24);
  const Waveform h = clip(small, ClipCurve::kHard, 4.0);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(h.samples[i] == 4.0 * small.samples[i]);
  CHECK(clip_sample(1.0, ClipCurve::kCubic) == 1.0);
  CHECK(clip_sample(0.5, ClipCurve::kCubic) == Catch::Approx(1.5 * (0.5 - 0.125 / 3.0)));
  CHECK_THROWS_AS(clip(x, ClipCurve::kHard, 0.5), ConfigError);
  CHECK_THROWS_AS(parse_clip_curve("soft"), ConfigError);
}

TEST_CASE("additive noise at a target SNR") {
  const Waveform x = testutil::noise(30000, 7, 0.3);
  const Waveform n = testutil::noise(30000, 8, 1.0);
  const Waveform y0 = add_noise(x, n, 0.0);
  Waveform residual = y0;
  for (std::size_t i = 0; i < x.size(); ++i) residual.samples[i] -= x.samples[i];
  CHECK(std::abs(energy(residual) / energy(x) - 1.0) < 1e-6);

  const Waveform y60 = add_noise(x, n, 60.0);
  Waveform d = y60;
  for (std::size_t i = 0; i < x.size(); ++i) d.samples[i] -= x.samples[i];
  CHECK(rms(d) / rms(x) < 0.002);

  for (double snr : {-5.0, 3.3, 17.0, 30.0}) CHECK(std::abs(snr_db(x, add_noise(x, n, snr)) - snr) < 0.01);

  // Short noise is looped.
  const Waveform short_noise = testutil::noise(1000, 9, 1.0);
  const Waveform ys = add_noise(x, short_noise, 10.0);
  CHECK(ys.size() == x.size());
  CHECK(std::abs(snr_db(x, ys) - 10.0) < 0.01);

  Waveform silent = x;
  std::fill(silent.samples.begin(), silent.samples.end(), 0.0);
  CHECK_THROWS_AS(add_noise(silent, n, 0.0), SilentInputError);
  CHECK_THROWS_AS(add_noise(x, silent, 0.0), SilentInputError);

  const Waveform pink = pink_noise(48000, 48000, 1);
  CHECK(pink.size() == 48000);
  CHECK(pink_noise(48000, 48000, 1).samples == pink.samples);
  CHECK(band_energy(pink, 100, 1000) > 3.0 * band_energy(pink, 10000, 19000));
}

TEST_CASE("spectral corruption") {
  const auto grids = corrupt_grids();
  CHECK(grids.size() == 6);
  for (auto [win, hop] : grids) {
    CHECK(2 * hop <= win);
    const Waveform x = testutil::noise(9000, 10, 0.3);
    const Waveform y = spectral_corrupt(x, win, hop, 0.0, 0.0, 1);
    REQUIRE(y.size() == x.size());
    CHECK(max_abs_diff(x, y) < 1e-5);
    CHECK(rms(spectral_corrupt(x, win, hop, 1.0, 0.0, 1)) < 1e-4);
  }

  const StftParams p{1024, 256, WindowKind::kHann, true};
  const ComplexSpectrogram s = stft(testutil::noise(8000, 11, 0.3), p);
  ComplexSpectrogram c = s;
  corrupt_spectrogram(c, 0.0, 0.5, 3);
  bool phase_moved = false;
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    CHECK(std::abs(std::abs(c.data[i]) - std::abs(s.data[i])) <= 1e-6 * std::max(1.0, std::abs(s.data[i])));
    phase_moved |= c.data[i] != s.data[i];
  }
  CHECK(phase_moved);

  ComplexSpectrogram m = s;
  corrupt_spectrogram(m, 0.3, 0.0, 4);
  std::size_t zeros = 0;
  for (const auto& z : m.data) zeros += z == std::complex<double>(0.0, 0.0);
  const double frac = static_cast<double>(zeros) / static_cast<double>(m.data.size());
  CHECK(frac == Catch::Approx(0.3).margin(0.03));
}

TEST_CASE("time-varying gain") {
  const Waveform x = testutil::noise(48000, 12, 0.3);
  CHECK(time_varying_gain(x, 5.0, 0.0, 1).samples == x.samples);
  const double fc = 20.0, depth = 0.5;
  const double bound = 2.0 * std::numbers::pi * fc / 48000.0 * depth * 10.0;
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = gain_envelope(48000, 48000, fc, depth, seed);
    REQUIRE(g.size() == 48000);
    for (std::size_t t = 0; t < g.size(); ++t) {
      REQUIRE(g[t] >= 1.0 - depth - 1e-12);
      REQUIRE(g[t] <= 1.0 + depth + 1e-12);
      if (t > 0) worst = std::max(worst, std::abs(g[t] - g[t - 1]));
    }
  }
  CHECK(worst <= bound);
  const auto g = gain_envelope(48000, 48000, 3.0, 0.25, 7);
  const Waveform y = time_varying_gain(x, 3.0, 0.25, 7);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(y.samples[t] == g[t] * x.samples[t]);
}

TEST_CASE("chain with all probabilities at zero is the identity") {
  DegradationSpec s;
  for (auto& [name, p] : s.probability) p = 0.0;
  const Waveform x = testutil::noise(6000, 13, 0.3);
  const ChainResult r = apply_chain(x, s);
  CHECK(r.degraded.samples == x.samples);
  CHECK(r.trace.records.empty());
}

TEST_CASE("chain determinism, replay and length over many seeds") {
  const Waveform x = testutil::noise(12000, 14, 0.3);
  std::size_t applied = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    DegradationSpec s;
    s.seed = seed;
    const ChainResult a = apply_chain(x, s);
    const ChainResult b = apply_chain(x, s);
    REQUIRE(a.degraded.size() == x.size());
    CHECK(a.degraded.samples == b.degraded.samples);
    CHECK(trace_to_jsonl(a.trace) == trace_to_jsonl(b.trace));
    const StageTrace parsed = trace_from_jsonl(trace_to_jsonl(a.trace));
    CHECK(replay_trace(x, parsed).samples == a.degraded.samples);
    for (double v : a.degraded.samples) REQUIRE(std::isfinite(v));
    applied += a.trace.records.size();
  }
  CHECK(applied > 150);
  CHECK(applied < 450);
}

TEST_CASE("every stage at the range extremes stays finite") {
  const Waveform x = testutil::noise(9000, 15, 0.3);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    DegradationSpec s = all_on(seed);
    s.shape_gain_db = {-60.0, 12.0};
    s.reverb_rt60 = {0.1, 3.0};
    s.reverb_wet = {0.0, 1.0};
    s.clip_drive = {1.0, 50.0};
    s.snr_db = {-20.0, 80.0};
    s.mask_fraction = {0.0, 1.0};
    s.phase_noise_std = {0.0, 3.0};
    s.tvg_depth = {0.0, 1.0};
    const ChainResult r = apply_chain(x, s);
    CHECK(r.trace.records.size() == 6);
    CHECK(r.degraded.size() == x.size());
    for (double v : r.degraded.samples) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("file noise sources are drawn from the bank") {
  DegradationSpec s = all_on(3);
  s.order = {"add_noise"};
  s.noise_files = {"a.wav", "b.wav"};
  const NoiseBank bank = {testutil::noise(3000, 1, 1.0), testutil::noise(5000, 2, 1.0)};
  const Waveform x = testutil::noise(8000, 16, 0.3);
  std::set<std::string> sources;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    s.seed = seed;
    const ChainResult r = apply_chain(x, s, bank);
    REQUIRE(r.trace.records.size() == 1);
    sources.insert(r.trace.records[0].params.at("source").get<std::string>());
    CHECK(replay_trace(x, r.trace, bank).samples == r.degraded.samples);
  }
  CHECK(sources.count("pink") == 1);
  CHECK(sources.count("file") == 1);
  CHECK_THROWS_AS(apply_chain(x, s), ConfigError);
}

TEST_CASE("degradation spec text round trip and validation") {
  DegradationSpec s;
  s.seed = 99;
  s.order = {"clip", "reverb"};
  s.probability["clip"] = 0.25;
  s.clip_curves = {ClipCurve::kTanh};
  s.snr_db = {0.0, 10.0};
  const std::string text = format_degradation_spec(s);
  const DegradationSpec back = parse_degradation_spec(text);
  CHECK(format_degradation_spec(back) == text);
  CHECK(back.seed == 99);
  CHECK(back.order == s.order);
  CHECK(back.snr_db.hi == 10.0);

  const DegradationSpec p = parse_degradation_spec("seed = 5\nadd_noise.snr_db = 3..12\nclip.p = 1\n");
  CHECK(p.seed == 5);
  CHECK(p.snr_db.lo == 3.0);
  CHECK(p.probability.at("clip") == 1.0);

  CHECK_THROWS_AS(parse_degradation_spec("clip.p = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_degradation_spec("add_noise.snr_db = 10..3\n"), ConfigError);
  CHECK_THROWS_AS(parse_degradation_spec("bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_degradation_spec("order = clip,warp\n"), ConfigError);
}

TEST_CASE("malformed trace records") {
  const Waveform x = testutil::noise(3000, 17, 0.3);
  CHECK_THROWS_AS(apply_stage(x, {"warp", {}}), ConfigError);
  CHECK_THROWS_AS(apply_stage(x, {"clip", {{"drive", 2.0}}}), FormatError);
  CHECK_THROWS_AS(trace_from_jsonl("{not json}\n"), FormatError);
}
