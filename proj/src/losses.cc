#include "vocalrestore/losses.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vocalrestore/error.h"

namespace vr {
namespace {

void check_lengths(const Waveform& a, const Waveform& b) {
  if (a.size() != b.size())
    throw LengthMismatchError("length mismatch: " + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Weighted mean of anti-wrapped differences with weights rescaled to mean 1.
struct PhaseTerm {
  double weighted = 0.0;
  double weight_sum = 0.0;
  std::size_t count = 0;

  void add(double delta, double w) {
    weighted += w * anti_wrap(delta);
    weight_sum += w;
    ++count;
  }
  double value() const {
    if (count == 0) return 0.0;
    if (weight_sum <= 0.0) return 0.0;
    return weighted / weight_sum;
  }
};

}  // namespace

void validate(const LossWeights& w) {
  for (double l : {w.lambda_wav, w.lambda_spec, w.lambda_omni, w.lambda_adv, w.lambda_fm})
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("loss weights must be finite and >= 0");
  for (const auto& r : w.spec_resolutions) validate(r);
}

double wav_l1(const Waveform& estimate, const Waveform& target) {
  check_lengths(estimate, target);
  if (target.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i)
    s += std::abs(estimate.samples[i] - target.samples[i]);
  return s / static_cast<double>(target.size());
}

double multi_res_spec_l1(const Waveform& estimate, const Waveform& target,
                         const std::vector<StftParams>& resolutions) {
  check_lengths(estimate, target);
  if (resolutions.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : resolutions) {
    const RealGrid a = magnitude(stft(estimate, r));
    const RealGrid b = magnitude(stft(target, r));
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    total += a.data.empty() ? 0.0 : s / static_cast<double>(a.data.size());
  }
  return total / static_cast<double>(resolutions.size());
}

double anti_wrap(double delta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return std::abs(delta - two_pi * std::round(delta / two_pi));
}

double omni_phase_loss(const ComplexSpectrogram& estimate, const ComplexSpectrogram& target) {
  if (estimate.bins() != target.bins() || estimate.frames != target.frames)
    throw ShapeError("omni_phase_loss needs spectrograms of identical shape");
  const int nf = target.bins(), nt = target.frames;
  auto ph = [](const ComplexSpectrogram& s, int f, int t) { return std::arg(s.at(f, t)); };
  PhaseTerm ip, gd, iff;
  bool any_energy = false;
  for (int f = 0; f < nf; ++f) {
    for (int t = 0; t < nt; ++t) {
      const double w = std::abs(target.at(f, t));
      if (w > 0.0) any_energy = true;
      const double pe = ph(estimate, f, t), pt = ph(target, f, t);
      ip.add(pe - pt, w);
      if (f + 1 < nf)
        gd.add((ph(estimate, f + 1, t) - pe) - (ph(target, f + 1, t) - pt), w);
      if (t + 1 < nt)
        iff.add((ph(estimate, f, t + 1) - pe) - (ph(target, f, t + 1) - pt), w);
    }
  }
  if (!any_energy) {
    // Silent target: fall back to uniform weights.
    PhaseTerm ip1, gd1, if1;
    for (int f = 0; f < nf; ++f)
      for (int t = 0; t < nt; ++t) {
        const double pe = ph(estimate, f, t), pt = ph(target, f, t);
        ip1.add(pe - pt, 1.0);
        if (f + 1 < nf) gd1.add((ph(estimate, f + 1, t) - pe) - (ph(target, f + 1, t) - pt), 1.0);
        if (t + 1 < nt) if1.add((ph(estimate, f, t + 1) - pe) - (ph(target, f, t + 1) - pt), 1.0);
      }
    return ip1.value() + gd1.value() + if1.value();
  }
  return ip.value() + gd.value() + iff.value();
}

double hinge_d_loss(const BranchScores& real, const BranchScores& fake) {
  if (real.size() != fake.size() || real.empty())
    throw BranchCountError("hinge_d_loss needs equal, nonzero branch counts (" +
                           std::to_string(real.size()) + " vs " + std::to_string(fake.size()) +
                           ")");
  double total = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    double r = 0.0, f = 0.0;
    for (double s : real[k]) r += std::max(0.0, 1.0 - s);
    for (double s : fake[k]) f += std::max(0.0, 1.0 + s);
    if (!real[k].empty()) r /= static_cast<double>(real[k].size());
    if (!fake[k].empty()) f /= static_cast<double>(fake[k].size());
    total += r + f;
  }
  return total / static_cast<double>(real.size());
}

double adv_loss(const BranchScores& fake) {
  if (fake.empty()) throw BranchCountError("adv_loss needs at least one branch");
  double total = 0.0;
  for (const auto& b : fake) total += mean_of(b);
  return -total / static_cast<double>(fake.size());
}

double hinge_d_loss(const std::vector<double>& real, const std::vector<double>& fake) {
  BranchScores r, f;
  for (double s : real) r.push_back({s});
  for (double s : fake) f.push_back({s});
  return hinge_d_loss(r, f);
}

double adv_loss(const std::vector<double>& fake) {
  BranchScores f;
  for (double s : fake) f.push_back({s});
  return adv_loss(f);
}

double feature_matching(const FeatureSet& real, const FeatureSet& fake) {
  if (real.size() != fake.size() || real.empty())
    throw StructureError("feature_matching branch count mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    if (real[k].size() != fake[k].size() || real[k].empty())
      throw StructureError("feature_matching layer count mismatch in branch " + std::to_string(k));
    double branch = 0.0;
    for (std::size_t l = 0; l < real[k].size(); ++l) {
      const FeatureMap& a = real[k][l];
      const FeatureMap& b = fake[k][l];
      if (a.shape != b.shape || a.values.size() != b.values.size())
        throw StructureError("feature_matching shape mismatch at branch " + std::to_string(k) +
                             " layer " + std::to_string(l));
      double diff = 0.0, mag = 0.0;
      for (std::size_t i = 0; i < a.values.size(); ++i) {
        diff += std::abs(static_cast<double>(a.values[i]) - b.values[i]);
        mag += std::abs(static_cast<double>(a.values[i]));
      }
      const double mean_mag = a.values.empty() ? 0.0 : mag / static_cast<double>(a.values.size());
      branch += diff / (mean_mag + kFeatureMatchEps);
    }
    total += branch / static_cast<double>(real[k].size());
  }
  return total / static_cast<double>(real.size());
}

BranchScores branch_scores(const std::vector<BranchOutput>& outputs) {
  BranchScores s;
  for (const auto& o : outputs) s.push_back(o.scores);
  return s;
}

FeatureSet branch_features(const std::vector<BranchOutput>& outputs) {
  FeatureSet s;
  for (const auto& o : outputs) s.push_back(o.features);
  return s;
}

double reconstruction_total(const LossReport& p, const LossWeights& w) {
  return w.lambda_wav * p.wav + w.lambda_spec * p.spec + w.lambda_omni * p.omni;
}

double generator_total(LossReport& p, const LossWeights& w) {
  p.recon = reconstruction_total(p, w);
  p.g_total = p.recon + w.lambda_adv * p.adv + w.lambda_fm * p.fm;
  return p.g_total;
}

double grad_clip_scale(double global_norm, double threshold) {
  return std::min(1.0, threshold / std::max(global_norm, 1e-12));
}

LossReport reconstruction_report(const Waveform& estimate, const Waveform& target,
                                 const LossWeights& weights) {
  validate(weights);
  LossReport r;
  r.wav = wav_l1(estimate, target);
  r.spec = multi_res_spec_l1(estimate, target, weights.spec_resolutions);
  const StftParams p = weights.spec_resolutions.empty() ? StftParams{2048, 512, WindowKind::kHann, true}
                                                        : weights.spec_resolutions.front();
  r.omni = omni_phase_loss(stft(estimate, p), stft(target, p));
  r.recon = reconstruction_total(r, weights);
  r.g_total = r.recon;
  return r;
}

}  // namespace vr
