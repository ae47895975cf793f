// Copyright 2026 The qmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qmix/channel.hpp"
#include "qmix/rng.hpp"

namespace qmix {

namespace detail {

// Continued-fraction kernel for the regularized incomplete beta function
// (modified Lentz method).
inline double beta_continued_fraction(double a, double b, double x) {
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 3e-16) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("regularized_incomplete_beta: parameters must be positive");
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Quantile of the Beta(a, b) distribution by bisection on I_x(a, b),
/// absolute accuracy better than 1e-10 in x.
inline double beta_quantile(double q, double a, double b) {
  if (!(q > 0.0) || !(q < 1.0)) {
    throw std::invalid_argument("beta_quantile: q must lie in (0, 1)");
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-11) {
    const double mid = 0.5 * (lo + hi);
    if (regularized_incomplete_beta(a, b, mid) < q) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// One-sided Clopper-Pearson lower confidence bound for a binomial success
/// probability: 0 when x = 0, else the alpha-quantile of Beta(x, n - x + 1).
inline double clopper_pearson_lower(long long x, long long n, double alpha) {
  if (n < 1) throw std::invalid_argument("clopper_pearson_lower: n must be at least 1");
  if (x < 0 || x > n) throw std::invalid_argument("clopper_pearson_lower: x must lie in [0, n]");
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("clopper_pearson_lower: alpha must lie in (0, 1)");
  }
  if (x == 0) return 0.0;
  return beta_quantile(alpha, static_cast<double>(x), static_cast<double>(n - x + 1));
}

/// Binomial success counts X[outcome][stencil] with per-stencil trial counts.
struct CountTable {
  std::vector<std::string> outcomes;
  std::vector<std::string> stencils;
  std::vector<std::vector<long long>> successes;  // [outcome][stencil]
  std::vector<long long> trials;                  // [stencil]

  std::size_t n_outcomes() const { return outcomes.size(); }
  std::size_t n_stencils() const { return stencils.size(); }

  /// Structural checks. Exclusive outcomes may not over-count a stencil's
  /// trials; exhaustive outcomes must account for all of them.
  void validate(bool exclusive = false, bool exhaustive = false) const {
    if (outcomes.empty() || stencils.empty()) {
      throw std::invalid_argument("CountTable: table is empty");
    }
    if (successes.size() != outcomes.size() || trials.size() != stencils.size()) {
      throw std::invalid_argument("CountTable: inconsistent table shape");
    }
    for (std::size_t j = 0; j < stencils.size(); ++j) {
      if (trials[j] < 1) throw std::invalid_argument("CountTable: trials must be at least 1");
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (successes[i].size() != stencils.size()) {
        throw std::invalid_argument("CountTable: ragged success rows");
      }
      for (std::size_t j = 0; j < stencils.size(); ++j) {
        if (successes[i][j] < 0 || successes[i][j] > trials[j]) {
          throw std::invalid_argument("CountTable: successes out of range for outcome '" +
                                      outcomes[i] + "', stencil '" + stencils[j] + "'");
        }
      }
    }
    if (exclusive || exhaustive) {
      for (std::size_t j = 0; j < stencils.size(); ++j) {
        long long sum = 0;
        for (std::size_t i = 0; i < outcomes.size(); ++i) sum += successes[i][j];
        if (exclusive && sum > trials[j]) {
          throw std::invalid_argument("CountTable: outcomes over-count stencil '" + stencils[j] +
                                      "' (" + std::to_string(sum) + " > " +
                                      std::to_string(trials[j]) + ")");
        }
        if (exhaustive && sum != trials[j]) {
          throw std::invalid_argument("CountTable: outcomes do not exhaust stencil '" +
                                      stencils[j] + "'");
        }
      }
    }
  }

  static CountTable from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("counts CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "outcome,stencil,successes,trials") {
      throw std::invalid_argument("counts CSV: expected header 'outcome,stencil,successes,trials'");
    }

    struct Cell {
      long long x;
      long long n;
    };
    std::vector<std::string> outcome_order, stencil_order;
    std::map<std::pair<std::string, std::string>, Cell> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string field;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() != 4) {
        throw std::invalid_argument("counts CSV line " + std::to_string(line_no) +
                                    ": expected 4 fields");
      }
      long long x = 0, n = 0;
      try {
        std::size_t pos = 0;
        x = std::stoll(fields[2], &pos);
        if (pos != fields[2].size()) throw std::invalid_argument("trailing characters");
        n = std::stoll(fields[3], &pos);
        if (pos != fields[3].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument("counts CSV line " + std::to_string(line_no) +
                                    ": successes/trials must be integers");
      }
      const auto key = std::make_pair(fields[0], fields[1]);
      if (cells.count(key)) {
        throw std::invalid_argument("counts CSV line " + std::to_string(line_no) +
                                    ": duplicate cell for outcome '" + fields[0] +
                                    "', stencil '" + fields[1] + "'");
      }
      cells[key] = Cell{x, n};
      if (std::find(outcome_order.begin(), outcome_order.end(), fields[0]) == outcome_order.end())
        outcome_order.push_back(fields[0]);
      if (std::find(stencil_order.begin(), stencil_order.end(), fields[1]) == stencil_order.end())
        stencil_order.push_back(fields[1]);
    }
    if (cells.empty()) throw std::invalid_argument("counts CSV: no data rows");

    CountTable table;
    table.outcomes = outcome_order;
    table.stencils = stencil_order;
    table.trials.assign(stencil_order.size(), -1);
    table.successes.assign(outcome_order.size(),
                           std::vector<long long>(stencil_order.size(), 0));
    for (std::size_t i = 0; i < outcome_order.size(); ++i) {
      for (std::size_t j = 0; j < stencil_order.size(); ++j) {
        const auto it = cells.find(std::make_pair(outcome_order[i], stencil_order[j]));
        if (it == cells.end()) {
          throw std::invalid_argument("counts CSV: missing cell for outcome '" +
                                      outcome_order[i] + "', stencil '" + stencil_order[j] + "'");
        }
        table.successes[i][j] = it->second.x;
        if (table.trials[j] < 0) {
          table.trials[j] = it->second.n;
        } else if (table.trials[j] != it->second.n) {
          throw std::invalid_argument("counts CSV: inconsistent trials for stencil '" +
                                      stencil_order[j] + "'");
        }
      }
    }
    table.validate();
    return table;
  }

  void to_csv(std::ostream& out) const {
    validate();
    out << "outcome,stencil,successes,trials\n";
    for (std::size_t i = 0; i < outcomes.size(); ++i)
      for (std::size_t j = 0; j < stencils.size(); ++j)
        out << outcomes[i] << ',' << stencils[j] << ',' << successes[i][j] << ',' << trials[j]
            << '\n';
  }
};

struct MixingCertificate {
  double epsilon_hat = 0.0;
  double alpha = 0.0;        // total failure probability budget
  double alpha_prime = 0.0;  // per-outcome budget alpha / m
  std::vector<double> per_outcome_lower;
  bool clamped = false;  // sum exceeded 1 and was clamped
  std::string provenance;
  std::optional<double> dt;         // set when a rate was requested
  std::optional<double> gamma_hat;  // -log(1 - epsilon_hat) / dt
};

/// Data-driven lower confidence bound on the Doeblin overlap: for each
/// outcome take the worst (minimum over stencils) Clopper-Pearson lower
/// bound at level alpha/m, then sum over outcomes. Holds with probability
/// at least 1 - alpha by the union bound.
inline MixingCertificate epsilon_hat(const CountTable& counts, double alpha,
                                     std::string provenance = "") {
  counts.validate();
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("epsilon_hat: alpha must lie in (0, 1)");
  }
  MixingCertificate cert;
  cert.alpha = alpha;
  cert.alpha_prime = alpha / static_cast<double>(counts.n_outcomes());
  cert.provenance = std::move(provenance);

  double total = 0.0;
  for (std::size_t i = 0; i < counts.n_outcomes(); ++i) {
    double low = 1.0;
    for (std::size_t j = 0; j < counts.n_stencils(); ++j) {
      low = std::min(low, clopper_pearson_lower(counts.successes[i][j], counts.trials[j],
                                                cert.alpha_prime));
    }
    cert.per_outcome_lower.push_back(low);
    total += low;
  }
  if (total > 1.0) {
    cert.clamped = true;
    total = 1.0;
  }
  cert.epsilon_hat = total;
  return cert;
}

/// Certified mixing bound (1 - epsilon_hat)^n * initial_distance.
inline double mixing_bound(const MixingCertificate& cert, long long n, double initial_distance) {
  if (n < 0) throw std::invalid_argument("mixing_bound: n must be nonnegative");
  if (initial_distance < 0.0) {
    throw std::invalid_argument("mixing_bound: initial distance must be nonnegative");
  }
  return std::pow(1.0 - cert.epsilon_hat, static_cast<double>(n)) * initial_distance;
}

/// Smallest n with (1 - epsilon_hat)^n * initial_distance <= target, or
/// nullopt when epsilon_hat = 0 gives no certificate.
inline std::optional<long long> step_bound(const MixingCertificate& cert, double target,
                                           double initial_distance) {
  if (!(target > 0.0)) throw std::invalid_argument("step_bound: target must be positive");
  if (!(initial_distance > 0.0)) {
    throw std::invalid_argument("step_bound: initial distance must be positive");
  }
  if (initial_distance <= target) return 0;
  if (cert.epsilon_hat <= 0.0) return std::nullopt;
  if (cert.epsilon_hat >= 1.0) return 1;
  const double n = std::ceil(std::log(target / initial_distance) / std::log1p(-cert.epsilon_hat));
  return static_cast<long long>(n);
}

/// Per-step overlap epsilon at step size dt, converted to a continuous mixing
/// rate gamma = -log(1 - epsilon)/dt (infinite at epsilon = 1).
inline double rate_from_epsilon(double epsilon, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("rate_from_epsilon: dt must be positive");
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("rate_from_epsilon: epsilon must lie in [0, 1]");
  }
  if (epsilon >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log1p(-epsilon) / dt;
}

/// Draw per-stencil outcome counts from an instrument. Sampling uses the
/// counter RNG indexed by (stencil, shot), so results are independent of
/// evaluation order and bit-stable across platforms.
inline CountTable simulate_counts(const Instrument& instrument,
                                  const std::vector<ComplexMatrix>& stencils, long long shots,
                                  std::uint64_t seed) {
  if (stencils.empty()) throw std::invalid_argument("simulate_counts: no stencil states");
  if (shots < 1) throw std::invalid_argument("simulate_counts: shots must be at least 1");

  CountTable table;
  table.outcomes = instrument.labels();
  table.successes.assign(instrument.size(), std::vector<long long>(stencils.size(), 0));
  table.trials.assign(stencils.size(), shots);

  for (std::size_t j = 0; j < stencils.size(); ++j) {
    table.stencils.push_back("s" + std::to_string(j));
    const ComplexMatrix& rho = stencils[j];
    if (!rho.is_square() || rho.rows() != instrument.dim_in()) {
      throw std::invalid_argument("simulate_counts: stencil dimension mismatch");
    }
    if (!is_hermitian(rho, 1e-8) || std::abs(rho.trace().real() - 1.0) > 1e-8) {
      throw std::invalid_argument("simulate_counts: stencil is not a density matrix");
    }
    std::vector<double> probs = instrument.outcome_probabilities(rho);
    double sum = 0.0;
    for (double& p : probs) {
      if (p < -1e-8) throw std::invalid_argument("simulate_counts: negative outcome probability");
      p = std::max(p, 0.0);
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-8) {
      throw std::invalid_argument("simulate_counts: outcome probabilities sum to " +
                                  std::to_string(sum));
    }
    std::vector<double> cdf(probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf[i] = acc;
    }
    cdf.back() = 1.0 + 1e-12;

    for (long long s = 0; s < shots; ++s) {
      const double u = counter_uniform(seed, j, static_cast<std::uint64_t>(s));
      std::size_t outcome = 0;
      while (outcome + 1 < cdf.size() && u >= cdf[outcome]) ++outcome;
      ++table.successes[outcome][j];
    }
  }
  return table;
}

}  // namespace qmix
