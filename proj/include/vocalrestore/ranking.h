#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vr {

enum class Outcome { kA, kB, kTie };

struct Comparison {
  std::string system_a;
  std::string system_b;
  Outcome outcome = Outcome::kTie;
  std::string category;  // empty when unlabeled
};

using ComparisonSet = std::vector<Comparison>;

// Throws InvalidInputError on an empty id or a self-comparison.
void validate(const ComparisonSet& data);

// CSV with header system_a,system_b,outcome[,category]; outcome is a, b or tie.
ComparisonSet parse_comparisons_csv(const std::string& text);
ComparisonSet load_comparisons_csv(const std::string& path);
std::string format_comparisons_csv(const ComparisonSet& data);

ComparisonSet category_split(const ComparisonSet& data, const std::string& category);
std::vector<std::string> categories(const ComparisonSet& data);

struct StrengthTable {
  std::vector<std::string> systems;  // sorted
  std::vector<double> strengths;     // geometric mean 1
  std::vector<double> elo;
  int iterations = 0;

  std::optional<std::size_t> index_of(const std::string& id) const;
  double strength(const std::string& id) const;
  // pi_a / (pi_a + pi_b)
  double predicted(const std::string& a, const std::string& b) const;
};

inline constexpr double kEloAnchor = 1000.0;
inline const double kEloScale = 400.0 / 2.302585092994045684;

// Zermelo / MM iteration with ties as half wins. Throws ConnectivityError when
// the comparison graph has several components and DegenerateError when the
// MLE does not exist (no decisive outcome, or some group never loses to the rest).
StrengthTable fit_bradley_terry(const ComparisonSet& data, double tol = 1e-10,
                                int max_iter = 10000);

void elo_scores(StrengthTable& table, double anchor = kEloAnchor, double scale = kEloScale);

// Effective wins (ties count half) per system in table order.
std::vector<double> effective_wins(const StrengthTable& table, const ComparisonSet& data);
std::vector<double> expected_wins(const StrengthTable& table, const ComparisonSet& data);

struct FitMetrics {
  double r2 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t pairs = 0;
};

// Observed win rate vs predicted probability per unordered pair. Each pair
// enters in both orientations, so the result does not depend on which system
// is listed first. Throws InsufficientDataError with fewer than two pairs.
FitMetrics goodness_of_fit(const StrengthTable& table, const ComparisonSet& data);

// Comparisons sampled from a Bradley-Terry model; system i is named "s<i>".
ComparisonSet sample_comparisons(const std::vector<double>& log_strengths, int per_pair,
                                 uint64_t seed);

}  // namespace vr
