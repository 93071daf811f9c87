#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "test_util.h"
#include "vocalrestore/audio_io.h"
#include "vocalrestore/cli.h"
#include "vocalrestore/file_util.h"
#include "vocalrestore/generator.h"

using namespace vr;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "vocalrestore");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Toy weights and config in `dir`.
void make_toy(const testutil::TempDir& dir) {
  const Result r = invoke({"init", "--preset", "toy", "--seed", "3", "--out", dir.file("w.bin"),
                           "--config-out", dir.file("toy.cfg")});
  REQUIRE(r.code == 0);
}

}  // namespace

TEST_CASE("restore writes a file of the input length") {
  testutil::TempDir dir;
  make_toy(dir);
  write_wav(testutil::noise(48000 * 10, 1, 0.2), dir.file("in.wav"));
  const Result r = invoke({"restore", "--in", dir.file("in.wav"), "--out", dir.file("out.wav"), "--weights",
                           dir.file("w.bin"), "--config", dir.file("toy.cfg")});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("rtf") != std::string::npos);
  const Waveform y = read_wav(dir.file("out.wav"));
  CHECK(y.size() == 480000);
  CHECK(y.sample_rate == 48000);
  const ModelConfig c = load_config(dir.file("toy.cfg"));
  const Waveform direct = restore(testutil::noise(48000 * 10, 1, 0.2), load_weights(dir.file("w.bin"), c), c);
  double err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) err = std::max(err, std::abs(y.samples[i] - direct.samples[i]));
  CHECK(err < 1e-6);
}

TEST_CASE("restore error exit codes") {
  testutil::TempDir dir;
  make_toy(dir);
  write_wav(testutil::noise(4000, 1, 0.2), dir.file("in.wav"));
  const Result missing = invoke({"restore", "--in", dir.file("in.wav"), "--out", dir.file("o.wav"), "--weights",
                                 dir.file("nope.bin"), "--config", dir.file("toy.cfg")});
  CHECK(missing.code == cli::kMissingWeights);
  CHECK(missing.err.find(dir.file("nope.bin")) != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir.file("o.wav")));

  write_wav(testutil::noise(4000, 1, 0.2, 44100), dir.file("in44.wav"));
  const Result rate = invoke({"restore", "--in", dir.file("in44.wav"), "--out", dir.file("o.wav"), "--weights",
                              dir.file("w.bin"), "--config", dir.file("toy.cfg")});
  CHECK(rate.code == cli::kSampleRateMismatch);
  CHECK_FALSE(std::filesystem::exists(dir.file("o.wav")));

  const Result bad_in = invoke({"restore", "--in", dir.file("absent.wav"), "--out", dir.file("o.wav"),
                                "--weights", dir.file("w.bin"), "--config", dir.file("toy.cfg")});
  CHECK(bad_in.code == cli::kFailure);
}

TEST_CASE("degrade is reproducible and traces the chain") {
  testutil::TempDir dir;
  write_wav(testutil::noise(20000, 2, 0.2), dir.file("clean.wav"));
  const std::vector<std::string> base = {"degrade", "--in", dir.file("clean.wav"), "--seed", "11"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return invoke(a);
  };
  REQUIRE(with({"--out", dir.file("a.wav"), "--trace-out", dir.file("a.jsonl")}).code == 0);
  REQUIRE(with({"--out", dir.file("b.wav"), "--trace-out", dir.file("b.jsonl")}).code == 0);
  CHECK(read_file_bytes(dir.file("a.wav")) == read_file_bytes(dir.file("b.wav")));
  CHECK(read_file_text(dir.file("a.jsonl")) == read_file_text(dir.file("b.jsonl")));

  const Result to_stdout = with({"--out", dir.file("c.wav")});
  REQUIRE(to_stdout.code == 0);
  CHECK(to_stdout.out == read_file_text(dir.file("a.jsonl")));

  write_file_atomic(dir.file("off.spec"), std::string("freq_shape.p = 0\nreverb.p = 0\nclip.p = 0\nadd_noise.p = 0\n"
                                                      "spectral_corrupt.p = 0\ntime_varying_gain.p = 0\n"));
  const Result off = invoke({"degrade", "--in", dir.file("clean.wav"), "--out", dir.file("d.wav"), "--spec",
                             dir.file("off.spec"), "--trace-out", dir.file("d.jsonl")});
  REQUIRE(off.code == 0);
  const Waveform clean = read_wav(dir.file("clean.wav")), same = read_wav(dir.file("d.wav"));
  REQUIRE(same.size() == clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) CHECK(std::abs(same.samples[i] - clean.samples[i]) < 1e-5);
  CHECK(read_file_text(dir.file("d.jsonl")).empty());
}

TEST_CASE("eval reports the reconstruction family") {
  testutil::TempDir dir;
  write_wav(testutil::noise(9000, 3, 0.2), dir.file("a.wav"));
  write_wav(testutil::noise(9000, 4, 0.2), dir.file("b.wav"));
  write_wav(testutil::noise(8000, 4, 0.2), dir.file("short.wav"));

  const Result same = invoke({"eval", "--ref", dir.file("a.wav"), "--est", dir.file("a.wav")});
  REQUIRE(same.code == 0);
  const json j = json::parse(same.out);
  std::set<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"wav", "spec", "omni", "recon"});
  for (const auto& [k, v] : j.items()) CHECK(v.get<double>() == 0.0);

  const Result diff = invoke({"eval", "--ref", dir.file("a.wav"), "--est", dir.file("b.wav")});
  REQUIRE(diff.code == 0);
  CHECK(json::parse(diff.out).at("recon").get<double>() > 0.0);

  CHECK(invoke({"eval", "--ref", dir.file("a.wav"), "--est", dir.file("short.wav")}).code == cli::kLengthMismatch);

  const StftParams p{512, 128, WindowKind::kHann, true};
  const auto sx = stft(read_wav(dir.file("b.wav")), p), sy = stft(read_wav(dir.file("a.wav")), p);
  cli::save_spectrogram(sx, dir.file("x.spec"));
  cli::save_spectrogram(sy, dir.file("y.spec"));
  const ComplexSpectrogram back = cli::load_spectrogram(dir.file("x.spec"));
  CHECK(back.params == sx.params);
  CHECK(back.frames == sx.frames);
  const Result spec = invoke({"eval", "--ref", dir.file("a.wav"), "--est", dir.file("b.wav"), "--spec-x",
                              dir.file("x.spec"), "--spec-y", dir.file("y.spec"), "--out", dir.file("r.json")});
  REQUIRE(spec.code == 0);
  CHECK(json::parse(read_file_text(dir.file("r.json"))).at("omni").get<double>() > 0.0);
}

TEST_CASE("rank fits the comparison CSV") {
  testutil::TempDir dir;
  write_file_atomic(dir.file("two.csv"), std::string("system_a,system_b,outcome,category\n"
                                                     "A,B,a,speech\nA,B,a,speech\nA,B,a,singing\nA,B,b,singing\n"));
  const Result r = invoke({"rank", "--csv", dir.file("two.csv")});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  const auto& overall = j.at("categories").at("overall");
  double sa = 0, sb = 0;
  for (const auto& s : overall.at("systems")) (s.at("id") == "A" ? sa : sb) = s.at("strength").get<double>();
  CHECK(std::abs(sa / sb - 3.0) < 1e-6);

  // The singing subset alone is one win each.
  const Result cat = invoke({"rank", "--csv", dir.file("two.csv"), "--category", "singing"});
  REQUIRE(cat.code == 0);
  const json jc = json::parse(cat.out);
  CHECK(jc.at("categories").size() == 1);
  const auto& sys = jc.at("categories").at("singing").at("systems");
  CHECK(sys[0].at("strength").get<double>() == Catch::Approx(sys[1].at("strength").get<double>()));

  write_file_atomic(dir.file("split.csv"), std::string("system_a,system_b,outcome\nA,B,a\nA,B,b\nC,D,a\nC,D,b\n"));
  const Result split = invoke({"rank", "--csv", dir.file("split.csv")});
  CHECK(split.code == cli::kDisconnected);
  CHECK(split.err.find("C") != std::string::npos);
}

TEST_CASE("bench report") {
  testutil::TempDir dir;
  make_toy(dir);
  const Result r = invoke({"bench", "--config", dir.file("toy.cfg"), "--weights", dir.file("w.bin"), "--seconds",
                           "1", "--runs", "5", "--warmup", "1", "--threads", "1", "--out", dir.file("b.json")});
  REQUIRE(r.code == 0);
  const json j = json::parse(read_file_text(dir.file("b.json")));
  CHECK(j.at("runs") == 5);
  CHECK(j.at("times_s").size() == 5);
  CHECK(j.at("median_s").get<double>() <= j.at("p90_s").get<double>());
  CHECK(j.at("median_s").get<double>() > 0.0);
  CHECK(j.at("audio_s").get<double>() == Catch::Approx(1.0));
  CHECK(j.at("rtf").get<double>() == Catch::Approx(1.0 / j.at("median_s").get<double>()));
  CHECK(j.at("threads") == 1);
}

TEST_CASE("help lists every flag") {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"restore", {"--in", "--out", "--weights", "--config", "--segment", "--overlap", "--pcm16"}},
      {"degrade", {"--in", "--out", "--spec", "--seed", "--trace-out"}},
      {"eval", {"--ref", "--est", "--spec-x", "--spec-y", "--out"}},
      {"rank", {"--csv", "--category", "--out"}},
      {"bench", {"--weights", "--config", "--seconds", "--runs", "--warmup", "--threads", "--seed"}},
      {"init", {"--preset", "--config", "--seed", "--out", "--config-out"}}};
  for (const auto& [cmd, list] : flags) {
    const Result r = invoke({cmd, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : list) CHECK(r.out.find(f) != std::string::npos);
  }
  const Result bench = invoke({"bench", "--help"});
  CHECK(bench.out.find("30") != std::string::npos);
  CHECK(invoke({"frobnicate"}).code != 0);
  CHECK(invoke({}).code != 0);
}
