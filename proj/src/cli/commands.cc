#include "vocalrestore/cli.h"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "json.hpp"
#include "vocalrestore/audio_io.h"
#include "vocalrestore/degrade.h"
#include "vocalrestore/error.h"
#include "vocalrestore/file_util.h"
#include "vocalrestore/generator.h"
#include "vocalrestore/losses.h"
#include "vocalrestore/ranking.h"
#include "vocalrestore/rng.h"
#include "vocalrestore/weights.h"

namespace vr::cli {
namespace {

using Json = nlohmann::json;

WavEncoding encoding(bool pcm16) { return pcm16 ? WavEncoding::kPcm16 : WavEncoding::kFloat32; }

ModelConfig config_or_default(const std::string& path) {
  return path.empty() ? ModelConfig::full() : load_config(path);
}

void emit_json(const Json& j, const std::string& path, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

// Maps module errors onto exit codes and prints the message.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const SampleRateError& e) {
    err << "error: " << e.what() << "\n";
    return kSampleRateMismatch;
  } catch (const LengthMismatchError& e) {
    err << "error: " << e.what() << "\n";
    return kLengthMismatch;
  } catch (const ConnectivityError& e) {
    err << "error: " << e.what() << "\n";
    return kDisconnected;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

bool require_weights(const std::string& path, std::ostream& err) {
  if (path.empty()) {
    err << "error: no weights file given\n";
    return false;
  }
  if (!std::filesystem::is_regular_file(path)) {
    err << "error: weights file not found: " << path << "\n";
    return false;
  }
  return true;
}

Json table_json(const StrengthTable& t, const ComparisonSet& data) {
  Json systems = Json::array();
  for (std::size_t i = 0; i < t.systems.size(); ++i)
    systems.push_back({{"id", t.systems[i]},
                       {"strength", t.strengths[i]},
                       {"log_strength", std::log(t.strengths[i])},
                       {"elo", t.elo[i]}});
  Json j = {{"systems", systems}, {"iterations", t.iterations}, {"comparisons", data.size()}};
  try {
    const FitMetrics f = goodness_of_fit(t, data);
    j["fit"] = {{"r2", f.r2}, {"mae", f.mae}, {"rmse", f.rmse}, {"pairs", f.pairs}};
  } catch (const InsufficientDataError& e) {
    j["fit"] = {{"error", e.what()}};
  }
  return j;
}

}  // namespace

void save_spectrogram(const ComplexSpectrogram& spec, const std::filesystem::path& path) {
  WeightStore store;
  const int bins = spec.bins();
  store.set("spec.params", {{4},
                            {static_cast<float>(spec.params.n_fft), static_cast<float>(spec.params.hop),
                             static_cast<float>(static_cast<int>(spec.params.window)),
                             spec.params.center ? 1.0f : 0.0f}});
  Param re{{bins, spec.frames}, std::vector<float>(spec.data.size())};
  Param im = re;
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    re.values[i] = static_cast<float>(spec.data[i].real());
    im.values[i] = static_cast<float>(spec.data[i].imag());
  }
  store.set("spec.real", std::move(re));
  store.set("spec.imag", std::move(im));
  save_weights(store, path);
}

ComplexSpectrogram load_spectrogram(const std::filesystem::path& path) {
  const WeightStore store = load_weights(path);
  const auto p = store.vector("spec.params");
  if (p.size() != 4) throw FormatError("spec.params must hold 4 values");
  StftParams params{static_cast<int>(p[0]), static_cast<int>(p[1]),
                    static_cast<WindowKind>(static_cast<int>(p[2])), p[3] != 0.0f};
  validate(params);
  const Param& re = store.get("spec.real");
  const Param& im = store.get("spec.imag");
  if (re.shape.size() != 2 || re.shape != im.shape || re.shape[0] != params.bins())
    throw ShapeError("spectrogram tensors do not match spec.params");
  ComplexSpectrogram spec(params, re.shape[1]);
  for (std::size_t i = 0; i < spec.data.size(); ++i) spec.data[i] = {re.values[i], im.values[i]};
  return spec;
}

int cmd_restore(const RestoreOptions& o, std::ostream& out, std::ostream& err) {
  if (!require_weights(o.weights, err)) return kMissingWeights;
  return guarded(err, [&] {
    const ModelConfig config = config_or_default(o.config);
    const Generator gen(config, load_weights(o.weights, config));
    const Waveform in = read_wav(o.in);
    const auto t0 = std::chrono::steady_clock::now();
    const Waveform restored = restore_chunked(gen, in, o.segment_s, o.overlap_s);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_wav(restored, o.out, encoding(o.pcm16));
    if (!o.spec_out.empty()) save_spectrogram(stft(restored, config.stft()), o.spec_out);
    out << "duration_s " << in.duration_s() << " elapsed_s " << elapsed << " rtf "
        << (elapsed > 0.0 ? in.duration_s() / elapsed : 0.0) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_degrade(const DegradeOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    DegradationSpec spec = o.spec.empty() ? DegradationSpec{} : load_degradation_spec(o.spec);
    if (o.seed) spec.seed = *o.seed;
    NoiseBank bank;
    for (const auto& f : spec.noise_files) bank.push_back(read_wav(f));
    const Waveform in = read_wav(o.in);
    for (const auto& n : bank)
      if (n.sample_rate != in.sample_rate)
        throw SampleRateError("noise file rate " + std::to_string(n.sample_rate) +
                              " differs from input rate " + std::to_string(in.sample_rate));
    const ChainResult r = apply_chain(in, spec, bank);
    write_wav(r.degraded, o.out, encoding(o.pcm16));
    const std::string trace = trace_to_jsonl(r.trace);
    if (o.trace_out.empty()) {
      out << trace;
    } else {
      write_file_atomic(o.trace_out, trace);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Waveform ref = read_wav(o.ref);
    const Waveform est = read_wav(o.est);
    if (ref.sample_rate != est.sample_rate)
      throw SampleRateError("sample rates differ: " + std::to_string(ref.sample_rate) + " vs " +
                            std::to_string(est.sample_rate));
    if (o.spec_x.empty() != o.spec_y.empty())
      throw ConfigError("--spec-x and --spec-y must be given together");
    const LossWeights weights;
    LossReport r = reconstruction_report(est, ref, weights);
    if (!o.spec_x.empty()) {
      r.omni = omni_phase_loss(load_spectrogram(o.spec_x), load_spectrogram(o.spec_y));
      r.recon = reconstruction_total(r, weights);
    }
    emit_json({{"wav", r.wav}, {"spec", r.spec}, {"omni", r.omni}, {"recon", r.recon}}, o.out, out);
    return static_cast<int>(kOk);
  });
}

int cmd_rank(const RankOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ComparisonSet all = load_comparisons_csv(o.csv);
    Json report = {{"tie_mode", "half-win"},
                   {"pairing", "unordered pairs, both orientations"},
                   {"elo", {{"anchor", kEloAnchor}, {"scale", kEloScale}}}};
    if (!o.category.empty()) {
      const ComparisonSet subset = category_split(all, o.category);
      report["categories"][o.category] = table_json(fit_bradley_terry(subset), subset);
    } else {
      report["categories"]["overall"] = table_json(fit_bradley_terry(all), all);
      for (const auto& cat : categories(all)) {
        const ComparisonSet subset = category_split(all, cat);
        try {
          report["categories"][cat] = table_json(fit_bradley_terry(subset), subset);
        } catch (const Error& e) {
          report["categories"][cat] = {{"error", e.what()}};
        }
      }
    }
    emit_json(report, o.out, out);
    return static_cast<int>(kOk);
  });
}

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  if (!o.weights.empty() && !require_weights(o.weights, err)) return kMissingWeights;
  return guarded(err, [&] {
    if (o.runs < 1 || o.warmup < 0 || !(o.seconds > 0.0))
      throw ConfigError("bench needs runs >= 1, warmup >= 0 and seconds > 0");
    if (o.threads > 0) omp_set_num_threads(o.threads);
    const ModelConfig config = config_or_default(o.config);
    const Generator gen(config, o.weights.empty() ? init_weights(config, o.seed)
                                                  : load_weights(o.weights, config));
    Waveform in;
    in.sample_rate = config.sample_rate;
    in.samples.resize(static_cast<std::size_t>(std::llround(o.seconds * config.sample_rate)));
    CounterRng rng(CounterRng(o.seed).derive("bench-input"));
    for (auto& s : in.samples) s = 0.1 * rng.normal();

    for (int i = 0; i < o.warmup; ++i) (void)gen.restore(in);
    std::vector<double> times;
    for (int i = 0; i < o.runs; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const Waveform y = gen.restore(in);
      times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      if (y.size() != in.size()) throw ShapeError("restore changed the signal length");
    }
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const std::size_t rank90 = static_cast<std::size_t>(std::ceil(0.9 * n));
    const double p90 = sorted[std::max<std::size_t>(rank90, 1) - 1];
    const double mean = std::accumulate(times.begin(), times.end(), 0.0) / n;
    const int threads = o.threads > 0 ? o.threads : omp_get_max_threads();
    emit_json({{"runs", o.runs},
               {"warmup", o.warmup},
               {"median_s", median},
               {"p90_s", p90},
               {"mean_s", mean},
               {"audio_s", in.duration_s()},
               {"rtf", in.duration_s() / median},
               {"threads", threads},
               {"seed", o.seed},
               {"times_s", times}},
              o.out, out);
    return static_cast<int>(kOk);
  });
}

int cmd_init(const InitOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    ModelConfig config;
    if (!o.config.empty()) {
      config = load_config(o.config);
    } else if (o.preset == "toy") {
      config = ModelConfig::toy();
    } else if (o.preset == "full") {
      config = ModelConfig::full();
    } else {
      throw ConfigError("unknown preset: " + o.preset);
    }
    save_weights(init_weights(config, o.seed), o.out);
    if (!o.config_out.empty()) save_config(config, o.config_out);
    out << "wrote " << generator_manifest(config).size() << " tensors to " << o.out << "\n";
    return static_cast<int>(kOk);
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Band-split vocal restoration toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  RestoreOptions ro;
  auto* restore = app.add_subcommand("restore", "Restore a degraded vocal recording");
  restore->add_option("--in", ro.in, "Input WAV")->required();
  restore->add_option("--out", ro.out, "Output WAV")->required();
  restore->add_option("--weights", ro.weights, "Weight file")->required();
  restore->add_option("--config", ro.config, "Model config (default: full model)");
  restore->add_option("--spec-out", ro.spec_out, "Also write the output spectrogram");
  restore->add_option("--segment", ro.segment_s, "Chunk length in seconds");
  restore->add_option("--overlap", ro.overlap_s, "Chunk crossfade in seconds");
  restore->add_flag("--pcm16", ro.pcm16, "Write 16-bit PCM instead of float32");

  DegradeOptions dg;
  uint64_t seed = 0;
  auto* degrade = app.add_subcommand("degrade", "Apply the seeded degradation chain");
  degrade->add_option("--in", dg.in, "Clean input WAV")->required();
  degrade->add_option("--out", dg.out, "Degraded output WAV")->required();
  degrade->add_option("--spec", dg.spec, "Degradation spec (default: built-in)");
  auto* seed_opt = degrade->add_option("--seed", seed, "Master seed (overrides the spec)");
  degrade->add_option("--trace-out", dg.trace_out, "Trace JSON lines (default: stdout)");
  degrade->add_flag("--pcm16", dg.pcm16, "Write 16-bit PCM instead of float32");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "Reconstruction losses between two signals");
  eval->add_option("--ref", ev.ref, "Reference WAV")->required();
  eval->add_option("--est", ev.est, "Estimate WAV")->required();
  eval->add_option("--spec-x", ev.spec_x, "Estimate spectrogram for the phase term");
  eval->add_option("--spec-y", ev.spec_y, "Reference spectrogram for the phase term");
  eval->add_option("--out", ev.out, "Write JSON here instead of stdout");

  RankOptions rk;
  auto* rank = app.add_subcommand("rank", "Fit Bradley-Terry strengths to pairwise preferences");
  rank->add_option("--csv", rk.csv, "Comparison CSV")->required();
  rank->add_option("--category", rk.category, "Only fit this category");
  rank->add_option("--out", rk.out, "Write JSON here instead of stdout");

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Measure restore latency and real-time factor");
  bench->add_option("--weights", bo.weights, "Weight file (default: random init from --seed)");
  bench->add_option("--config", bo.config, "Model config (default: full model)");
  bench->add_option("--seconds", bo.seconds, "Input duration");
  bench->add_option("--runs", bo.runs, "Timed runs");
  bench->add_option("--warmup", bo.warmup, "Untimed warmup runs");
  bench->add_option("--threads", bo.threads, "OpenMP threads (0: runtime default)");
  bench->add_option("--seed", bo.seed, "Input and init seed");
  bench->add_option("--out", bo.out, "Write JSON here instead of stdout");

  InitOptions io;
  auto* init = app.add_subcommand("init", "Write randomly initialized weights");
  init->add_option("--preset", io.preset, "toy or full")->check(CLI::IsMember({"toy", "full"}));
  init->add_option("--config", io.config, "Model config (overrides --preset)");
  init->add_option("--seed", io.seed, "Init seed");
  init->add_option("--out", io.out, "Weight file")->required();
  init->add_option("--config-out", io.config_out, "Also write the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  if (*restore) return cmd_restore(ro, out, err);
  if (*degrade) {
    if (*seed_opt) dg.seed = seed;
    return cmd_degrade(dg, out, err);
  }
  if (*eval) return cmd_eval(ev, out, err);
  if (*rank) return cmd_rank(rk, out, err);
  if (*bench) return cmd_bench(bo, out, err);
  if (*init) return cmd_init(io, out, err);
  return kFailure;
}

}  // namespace vr::cli
