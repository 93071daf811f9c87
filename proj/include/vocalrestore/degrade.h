#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "vocalrestore/audio_io.h"
#include "vocalrestore/spectral.h"

namespace vr {

// Control point of a gain curve: frequency in Hz, gain in dB.
struct GainPoint {
  double hz = 0.0;
  double db = 0.0;
};

enum class ClipCurve { kHard, kTanh, kCubic };

std::string to_string(ClipCurve curve);
ClipCurve parse_clip_curve(const std::string& name);

// STFT (2048/512 Hann) magnitude multiply by a curve
// interpolated linearly in log-frequency; constant beyond the end points.
Waveform freq_shape(const Waveform& wave, const std::vector<GainPoint>& curve);
double curve_gain_db(const std::vector<GainPoint>& curve, double hz);

// Exponential noise-burst impulse response: unit tap at 0, tail of unit energy.
double reverb_envelope(double t, double rt60);
std::vector<double> impulse_response(double rt60, int sample_rate, uint64_t seed);
Waveform reverb(const Waveform& wave, double rt60, double wet, uint64_t seed);

double clip_sample(double x, ClipCurve curve);
Waveform clip(const Waveform& wave, ClipCurve curve, double drive);

// Throws SilentInputError when the signal or the noise has zero energy.
Waveform add_noise(const Waveform& wave, const Waveform& noise, double snr_db);
Waveform pink_noise(std::size_t length, int sample_rate, uint64_t seed);
double snr_db(const Waveform& clean, const Waveform& mixture);

// STFT grids eligible for spectral_corrupt.
std::vector<std::pair<int, int>> corrupt_grids();
void corrupt_spectrogram(ComplexSpectrogram& spec, double mask_fraction, double phase_noise_std,
                         uint64_t seed);
Waveform spectral_corrupt(const Waveform& wave, int window, int hop, double mask_fraction,
                          double phase_noise_std, uint64_t seed);

std::vector<double> gain_envelope(std::size_t length, int sample_rate, double cutoff_hz,
                                  double depth, uint64_t seed);
Waveform time_varying_gain(const Waveform& wave, double cutoff_hz, double depth, uint64_t seed);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct DegradationSpec {
  uint64_t seed = 0;
  std::vector<std::string> order = {"freq_shape",  "reverb",           "clip",
                                    "add_noise",   "spectral_corrupt", "time_varying_gain"};
  std::map<std::string, double> probability = {
      {"freq_shape", 0.5}, {"reverb", 0.5},           {"clip", 0.5},
      {"add_noise", 0.5},  {"spectral_corrupt", 0.5}, {"time_varying_gain", 0.5}};

  Range shape_gain_db{-24.0, 6.0};
  int shape_points = 4;
  Range reverb_rt60{0.1, 1.5};
  Range reverb_wet{0.1, 0.6};
  std::vector<ClipCurve> clip_curves = {ClipCurve::kHard, ClipCurve::kTanh, ClipCurve::kCubic};
  Range clip_drive{1.0, 8.0};
  Range snr_db{-5.0, 30.0};
  std::vector<std::string> noise_files;
  Range mask_fraction{0.0, 0.3};
  Range phase_noise_std{0.0, 0.8};
  Range tvg_cutoff_hz{0.5, 20.0};
  Range tvg_depth{0.0, 0.5};
};

// Throws ConfigError.
void validate(const DegradationSpec& spec);
DegradationSpec parse_degradation_spec(const std::string& text);
std::string format_degradation_spec(const DegradationSpec& spec);
DegradationSpec load_degradation_spec(const std::string& path);

// One applied stage: its name and the exact parameters used.
struct StageRecord {
  std::string stage;
  nlohmann::ordered_json params;
};

struct StageTrace {
  std::vector<StageRecord> records;
};

std::string trace_to_jsonl(const StageTrace& trace);
StageTrace trace_from_jsonl(const std::string& text);

// Noise files already decoded, indexed as in DegradationSpec::noise_files.
using NoiseBank = std::vector<Waveform>;

Waveform apply_stage(const Waveform& wave, const StageRecord& record, const NoiseBank& noise = {});

struct ChainResult {
  Waveform degraded;
  StageTrace trace;
};

ChainResult apply_chain(const Waveform& wave, const DegradationSpec& spec,
                        const NoiseBank& noise = {});
Waveform replay_trace(const Waveform& wave, const StageTrace& trace, const NoiseBank& noise = {});

}  // namespace vr
