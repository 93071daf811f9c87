#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "vocalrestore/spectral.h"

namespace vr::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMissingWeights = 2,
  kSampleRateMismatch = 3,
  kLengthMismatch = 4,
  kDisconnected = 5,
};

struct RestoreOptions {
  std::string in, out, weights, config;
  std::string spec_out;
  double segment_s = 30.0;
  double overlap_s = 1.0;
  bool pcm16 = false;
};

struct DegradeOptions {
  std::string in, out, spec, trace_out;
  std::optional<uint64_t> seed;
  bool pcm16 = false;
};

struct EvalOptions {
  std::string ref, est, spec_x, spec_y, out;
};

struct RankOptions {
  std::string csv, category, out;
};

struct BenchOptions {
  std::string weights, config, out;
  double seconds = 10.0;
  int runs = 30;
  int warmup = 3;
  int threads = 0;  // 0 keeps the OpenMP default
  uint64_t seed = 0;
};

struct InitOptions {
  std::string preset = "toy";
  std::string config, out, config_out;
  uint64_t seed = 0;
};

int cmd_restore(const RestoreOptions& opts, std::ostream& out, std::ostream& err);
int cmd_degrade(const DegradeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& opts, std::ostream& out, std::ostream& err);
int cmd_rank(const RankOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);
int cmd_init(const InitOptions& opts, std::ostream& out, std::ostream& err);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Complex spectrograms in the weight container: spec.params holds
// (n_fft, hop, window, center), spec.real / spec.imag are bins x frames.
void save_spectrogram(const ComplexSpectrogram& spec, const std::filesystem::path& path);
ComplexSpectrogram load_spectrogram(const std::filesystem::path& path);

}  // namespace vr::cli
