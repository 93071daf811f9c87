#include "vocalrestore/ranking.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "vocalrestore/error.h"
#include "vocalrestore/file_util.h"
#include "vocalrestore/rng.h"

namespace vr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Pairwise effective win counts w[i][j] (ties split) over the table's systems.
std::vector<std::vector<double>> win_matrix(const std::vector<std::string>& systems,
                                            const ComparisonSet& data) {
  const std::size_t n = systems.size();
  auto idx = [&](const std::string& id) {
    return static_cast<std::size_t>(std::lower_bound(systems.begin(), systems.end(), id) -
                                    systems.begin());
  };
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (const auto& c : data) {
    const std::size_t a = idx(c.system_a), b = idx(c.system_b);
    switch (c.outcome) {
      case Outcome::kA: w[a][b] += 1.0; break;
      case Outcome::kB: w[b][a] += 1.0; break;
      case Outcome::kTie:
        w[a][b] += 0.5;
        w[b][a] += 0.5;
        break;
    }
  }
  return w;
}

std::vector<std::string> system_ids(const ComparisonSet& data) {
  std::set<std::string> s;
  for (const auto& c : data) {
    s.insert(c.system_a);
    s.insert(c.system_b);
  }
  return {s.begin(), s.end()};
}

std::vector<bool> reachable(const std::vector<std::vector<double>>& w, bool reverse) {
  const std::size_t n = w.size();
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack = {0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n; ++j) {
      const double edge = reverse ? w[j][i] : w[i][j];
      if (edge > 0.0 && !seen[j]) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

}  // namespace

void validate(const ComparisonSet& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& c = data[i];
    if (c.system_a.empty() || c.system_b.empty())
      throw InvalidInputError("comparison " + std::to_string(i) + " has an empty system id");
    if (c.system_a == c.system_b)
      throw InvalidInputError("comparison " + std::to_string(i) + " compares " + c.system_a +
                              " with itself");
  }
}

ComparisonSet parse_comparisons_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split_csv_line(line);
  }
  if (header.empty()) throw FormatError("comparison CSV is empty");
  auto col = [&](const std::string& name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int ca = col("system_a"), cb = col("system_b"), co = col("outcome"), cc = col("category");
  if (ca < 0 || cb < 0 || co < 0)
    throw FormatError("comparison CSV header needs system_a, system_b and outcome");
  ComparisonSet out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    const int need = std::max({ca, cb, co});
    if (static_cast<int>(f.size()) <= need)
      throw FormatError("line " + std::to_string(line_no) + ": too few fields");
    Comparison c;
    c.system_a = f[ca];
    c.system_b = f[cb];
    const std::string o = f[co];
    if (o == "a") c.outcome = Outcome::kA;
    else if (o == "b") c.outcome = Outcome::kB;
    else if (o == "tie") c.outcome = Outcome::kTie;
    else throw FormatError("line " + std::to_string(line_no) + ": bad outcome '" + o + "'");
    if (cc >= 0 && cc < static_cast<int>(f.size())) c.category = f[cc];
    out.push_back(std::move(c));
  }
  validate(out);
  return out;
}

ComparisonSet load_comparisons_csv(const std::string& path) {
  return parse_comparisons_csv(read_file_text(path));
}

std::string format_comparisons_csv(const ComparisonSet& data) {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos && trim(s) == s) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out = "system_a,system_b,outcome,category\n";
  for (const auto& c : data) {
    const char* o = c.outcome == Outcome::kA ? "a" : c.outcome == Outcome::kB ? "b" : "tie";
    out += field(c.system_a) + "," + field(c.system_b) + "," + o + "," + field(c.category) + "\n";
  }
  return out;
}

ComparisonSet category_split(const ComparisonSet& data, const std::string& category) {
  ComparisonSet out;
  for (const auto& c : data)
    if (!c.category.empty() && c.category == category) out.push_back(c);
  return out;
}

std::vector<std::string> categories(const ComparisonSet& data) {
  std::set<std::string> s;
  for (const auto& c : data)
    if (!c.category.empty()) s.insert(c.category);
  return {s.begin(), s.end()};
}

std::optional<std::size_t> StrengthTable::index_of(const std::string& id) const {
  const auto it = std::lower_bound(systems.begin(), systems.end(), id);
  if (it == systems.end() || *it != id) return std::nullopt;
  return static_cast<std::size_t>(it - systems.begin());
}

double StrengthTable::strength(const std::string& id) const {
  const auto i = index_of(id);
  if (!i) throw InvalidInputError("unknown system: " + id);
  return strengths[*i];
}

double StrengthTable::predicted(const std::string& a, const std::string& b) const {
  const double pa = strength(a), pb = strength(b);
  return pa / (pa + pb);
}

StrengthTable fit_bradley_terry(const ComparisonSet& data, double tol, int max_iter) {
  validate(data);
  if (data.empty()) throw DegenerateError("no comparisons to fit");
  StrengthTable table;
  table.systems = system_ids(data);
  const std::size_t n = table.systems.size();
  const auto w = win_matrix(table.systems, data);

  // Weak connectivity via union-find over compared pairs.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (w[i][j] > 0.0) parent[find(i)] = find(j);
  std::map<std::size_t, std::vector<std::string>> comps;
  for (std::size_t i = 0; i < n; ++i) comps[find(i)].push_back(table.systems[i]);
  if (comps.size() > 1) {
    std::string msg = "comparison graph has " + std::to_string(comps.size()) + " components:";
    for (const auto& [root, members] : comps) {
      msg += " {";
      for (std::size_t k = 0; k < members.size(); ++k) msg += (k ? ", " : "") + members[k];
      msg += "}";
    }
    throw ConnectivityError(msg);
  }

  const bool decisive = std::any_of(data.begin(), data.end(),
                                    [](const Comparison& c) { return c.outcome != Outcome::kTie; });
  if (!decisive) throw DegenerateError("every comparison is a tie");
  if (n >= 2) {
    const auto fwd = reachable(w, false), back = reachable(w, true);
    for (std::size_t i = 0; i < n; ++i)
      if (!fwd[i] || !back[i])
        throw DegenerateError("strengths diverge: " + table.systems[i] +
                              " is separated from the rest by an unbroken run of wins or losses");
  }

  std::vector<double> wins(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) wins[i] += w[i][j];

  std::vector<double> pi(n, 1.0), next(n);
  int it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double denom = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double games = w[i][j] + w[j][i];
        if (j != i && games > 0.0) denom += games / (pi[i] + pi[j]);
      }
      next[i] = wins[i] / denom;
    }
    double log_mean = 0.0;
    for (double v : next) log_mean += std::log(v);
    log_mean /= static_cast<double>(n);
    const double g = std::exp(log_mean);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= g;
      change = std::max(change, std::abs(next[i] - pi[i]) / pi[i]);
    }
    pi.swap(next);
    if (change < tol) {
      ++it;
      break;
    }
  }
  table.strengths = pi;
  table.iterations = it;
  elo_scores(table);
  return table;
}

void elo_scores(StrengthTable& table, double anchor, double scale) {
  table.elo.resize(table.strengths.size());
  for (std::size_t i = 0; i < table.strengths.size(); ++i)
    table.elo[i] = anchor + scale * std::log(table.strengths[i]);
}

std::vector<double> effective_wins(const StrengthTable& table, const ComparisonSet& data) {
  const auto w = win_matrix(table.systems, data);
  std::vector<double> out(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (double v : w[i]) out[i] += v;
  return out;
}

std::vector<double> expected_wins(const StrengthTable& table, const ComparisonSet& data) {
  const auto w = win_matrix(table.systems, data);
  const auto& pi = table.strengths;
  std::vector<double> out(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j)
      if (i != j) out[i] += (w[i][j] + w[j][i]) * pi[i] / (pi[i] + pi[j]);
  return out;
}

FitMetrics goodness_of_fit(const StrengthTable& table, const ComparisonSet& data) {
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> pairs;  // wins of first, games
  for (const auto& c : data) {
    if (!table.index_of(c.system_a) || !table.index_of(c.system_b))
      throw InvalidInputError("system missing from strength table: " +
                              (table.index_of(c.system_a) ? c.system_b : c.system_a));
    const bool swap = c.system_b < c.system_a;
    const auto key = swap ? std::make_pair(c.system_b, c.system_a)
                          : std::make_pair(c.system_a, c.system_b);
    double win = c.outcome == Outcome::kTie ? 0.5 : (c.outcome == Outcome::kA ? 1.0 : 0.0);
    if (swap) win = 1.0 - win;
    auto& acc = pairs[key];
    acc.first += win;
    acc.second += 1.0;
  }
  if (pairs.size() < 2)
    throw InsufficientDataError("goodness of fit needs at least two distinct pairs, got " +
                                std::to_string(pairs.size()));
  double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
  for (const auto& [key, acc] : pairs) {
    const double observed = acc.first / acc.second;
    const double predicted = table.predicted(key.first, key.second);
    const double r = observed - predicted;
    // Both orientations: residuals r and -r, observations around 0.5 symmetric.
    ss_res += 2.0 * r * r;
    ss_tot += 2.0 * (observed - 0.5) * (observed - 0.5);
    abs_sum += 2.0 * std::abs(r);
  }
  const double m = 2.0 * static_cast<double>(pairs.size());
  FitMetrics f;
  f.pairs = pairs.size();
  f.mae = abs_sum / m;
  f.rmse = std::sqrt(ss_res / m);
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return f;
}

ComparisonSet sample_comparisons(const std::vector<double>& log_strengths, int per_pair,
                                 uint64_t seed) {
  CounterRng rng(seed);
  ComparisonSet out;
  const std::size_t n = log_strengths.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double p = 1.0 / (1.0 + std::exp(log_strengths[j] - log_strengths[i]));
      for (int k = 0; k < per_pair; ++k)
        out.push_back({"s" + std::to_string(i), "s" + std::to_string(j),
                       rng.uniform() < p ? Outcome::kA : Outcome::kB, ""});
    }
  return out;
}

}  // namespace vr
