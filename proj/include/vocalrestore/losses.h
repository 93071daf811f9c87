#pragma once

#include <vector>

#include "vocalrestore/audio_io.h"
#include "vocalrestore/discriminator.h"
#include "vocalrestore/spectral.h"
#include "vocalrestore/tensor.h"

namespace vr {

struct LossWeights {
  double lambda_wav = 1.0;
  double lambda_spec = 1.0;
  double lambda_omni = 1.0;
  double lambda_adv = 0.1;
  double lambda_fm = 2.0;
  std::vector<StftParams> spec_resolutions = {
      {2048, 512, WindowKind::kHann, true},
      {1024, 256, WindowKind::kHann, true},
      {512, 128, WindowKind::kHann, true}};
};

// Throws ConfigError on a negative weight or invalid resolution.
void validate(const LossWeights& weights);

struct LossReport {
  double wav = 0.0;
  double spec = 0.0;
  double omni = 0.0;
  double recon = 0.0;
  double d_loss = 0.0;
  double adv = 0.0;
  double fm = 0.0;
  double g_total = 0.0;
};

double wav_l1(const Waveform& estimate, const Waveform& target);
double multi_res_spec_l1(const Waveform& estimate, const Waveform& target,
                         const std::vector<StftParams>& resolutions);

// Anti-wrapped phase distance: instantaneous phase, group delay and
// instantaneous frequency, each weighted by |Y| scaled to mean 1.
double omni_phase_loss(const ComplexSpectrogram& estimate, const ComplexSpectrogram& target);
double anti_wrap(double delta);

// Scores are given per branch as every emitted element; each branch is
// averaged over its elements, then over branches.
using BranchScores = std::vector<std::vector<double>>;
double hinge_d_loss(const BranchScores& real, const BranchScores& fake);
double adv_loss(const BranchScores& fake);

// One scalar per branch.
double hinge_d_loss(const std::vector<double>& real, const std::vector<double>& fake);
double adv_loss(const std::vector<double>& fake);

inline constexpr double kFeatureMatchEps = 1e-8;

// [branch][layer]; each layer contributes sum|real - fake| / (mean|real| + eps).
using FeatureSet = std::vector<std::vector<FeatureMap>>;
double feature_matching(const FeatureSet& real, const FeatureSet& fake);

BranchScores branch_scores(const std::vector<BranchOutput>& outputs);
FeatureSet branch_features(const std::vector<BranchOutput>& outputs);

double reconstruction_total(const LossReport& parts, const LossWeights& weights);
// Fills recon from wav/spec/omni and returns recon + adv and fm terms.
double generator_total(LossReport& parts, const LossWeights& weights);

double grad_clip_scale(double global_norm, double threshold);

// Reconstruction terms only; the omni term uses the first spec resolution.
LossReport reconstruction_report(const Waveform& estimate, const Waveform& target,
                                 const LossWeights& weights);

}  // namespace vr
