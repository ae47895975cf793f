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

#include <cmath>
#include <vector>

#include "qmix/certify.hpp"
#include "qmix/channel.hpp"
#include "qmix/doeblin.hpp"
#include "qmix/linalg.hpp"
#include "qmix/matrix.hpp"

namespace qmix {

/// GKLS (Lindblad) generator data: Hermitian Hamiltonian plus jump operators.
struct GKLSGenerator {
  ComplexMatrix hamiltonian;
  std::vector<ComplexMatrix> jumps;

  GKLSGenerator(ComplexMatrix h, std::vector<ComplexMatrix> ls, double tol = 1e-10)
      : hamiltonian(std::move(h)), jumps(std::move(ls)) {
    if (!hamiltonian.is_square()) {
      throw std::invalid_argument("GKLSGenerator: Hamiltonian must be square");
    }
    const double scale = std::max(1.0, hamiltonian.max_abs());
    if (!is_hermitian(hamiltonian, tol * scale)) {
      throw std::invalid_argument("GKLSGenerator: Hamiltonian is not Hermitian");
    }
    for (const auto& l : jumps) {
      if (!l.is_square() || l.rows() != hamiltonian.rows()) {
        throw std::invalid_argument("GKLSGenerator: jump operator dimension mismatch");
      }
    }
  }

  std::size_t dim() const { return hamiltonian.rows(); }

  /// sum_i L_i^dag L_i.
  ComplexMatrix jump_gram() const {
    ComplexMatrix s(dim(), dim());
    for (const auto& l : jumps) s += l.adjoint() * l;
    return s;
  }
};

/// Column-stacking superoperator of the generator:
/// L(rho) = -i[H, rho] + sum_i (L_i rho L_i^dag - 1/2 {L_i^dag L_i, rho}).
inline ComplexMatrix generator_superop(const GKLSGenerator& gen) {
  const std::size_t d = gen.dim();
  const ComplexMatrix eye = ComplexMatrix::identity(d);
  const Complex i_unit(0.0, 1.0);

  ComplexMatrix sup = kron(eye, gen.hamiltonian) * (-i_unit) +
                      kron(gen.hamiltonian.transpose(), eye) * i_unit;
  for (const auto& l : gen.jumps) {
    sup += kron(l.conj(), l);
    const ComplexMatrix gram = l.adjoint() * l;
    sup -= kron(eye, gram) * 0.5;
    sup -= kron(gram.transpose(), eye) * 0.5;
  }
  return sup;
}

/// Exact semigroup element exp(t L) as a channel (Kraus form recovered from
/// the Choi operator). Rejects generators whose exponential fails CPTP checks.
inline Channel semigroup(const GKLSGenerator& gen, double t) {
  if (t < 0.0) throw std::invalid_argument("semigroup: time must be nonnegative");
  const std::size_t d = gen.dim();
  const ComplexMatrix propagator = matrix_exp(generator_superop(gen) * t);
  const ComplexMatrix choi = superop_to_choi(propagator, d, d);
  const CptpReport report = check_cptp(choi, d, d, 1e-8);
  if (!report.completely_positive) {
    throw std::runtime_error("semigroup: exp(tL) is not CP (min Choi eigenvalue " +
                             std::to_string(report.min_choi_eigenvalue) + ")");
  }
  if (!report.trace_preserving) {
    throw std::runtime_error("semigroup: exp(tL) is not trace-preserving (residual " +
                             std::to_string(report.trace_residual) + ")");
  }
  return channel_from_choi(choi, d, d, KrausFlag::trace_preserving);
}

/// First-order stochastic-map step: Kraus {K0} + {sqrt(dt) L_i} with
/// K0 = exp(-i dt H) sqrt(I - dt sum L_i^dag L_i). Trace-preserving by
/// construction; requires dt small enough that I - dt sum L^dag L > 0.
inline Channel first_order_step(const GKLSGenerator& gen, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("first_order_step: dt must be positive");
  const std::size_t d = gen.dim();
  const ComplexMatrix gram = gen.jump_gram();
  const ComplexMatrix remainder = ComplexMatrix::identity(d) - gram * dt;
  if (min_hermitian_eigenvalue(remainder) <= 0.0) {
    throw std::invalid_argument(
        "first_order_step: dt too large, I - dt sum L^dag L is not positive definite");
  }
  const Complex i_unit(0.0, 1.0);
  const ComplexMatrix k0 = matrix_exp(gen.hamiltonian * (-i_unit * dt)) * hermitian_sqrt(remainder);
  std::vector<ComplexMatrix> kraus{k0};
  const double w = std::sqrt(dt);
  for (const auto& l : gen.jumps) kraus.push_back(l * w);
  return Channel(std::move(kraus), KrausFlag::trace_preserving);
}

enum class StepMode { exact, first_order };

struct LimitSweepRow {
  double dt = 0.0;
  double epsilon = 0.0;      // Doeblin constant of the dt-step channel
  double gamma = 0.0;        // -log(1 - epsilon) / dt
  double embed_error = 0.0;  // || choi(step^n) - choi(exp(n dt L)) ||_1, n = floor(t/dt)
};

/// Monitored small-step limit: per-step Doeblin constants, implied rates, and
/// the embedding error of the iterated step against the exact semigroup.
inline std::vector<LimitSweepRow> limit_sweep(const GKLSGenerator& gen, const Channel& seed,
                                              const std::vector<double>& dt_list, double t_horizon,
                                              StepMode mode, double doeblin_tol = 1e-11) {
  if (dt_list.empty()) throw std::invalid_argument("limit_sweep: empty dt list");
  for (double dt : dt_list) {
    if (!(dt > 0.0)) throw std::invalid_argument("limit_sweep: dt values must be positive");
    if (dt > t_horizon) throw std::invalid_argument("limit_sweep: t horizon shorter than a step");
  }
  const std::size_t d = gen.dim();
  const ComplexMatrix lsup = generator_superop(gen);

  std::vector<LimitSweepRow> rows;
  rows.reserve(dt_list.size());
  for (double dt : dt_list) {
    const Channel step = (mode == StepMode::exact) ? semigroup(gen, dt) : first_order_step(gen, dt);
    LimitSweepRow row;
    row.dt = dt;
    row.epsilon = doeblin_constant(step, seed, doeblin_tol).epsilon;
    row.gamma = rate_from_epsilon(row.epsilon, dt);

    const auto n = static_cast<long long>(std::floor(t_horizon / dt + 1e-12));
    const ComplexMatrix single = step.superop();
    ComplexMatrix iterated = ComplexMatrix::identity(single.rows());
    for (long long k = 0; k < n; ++k) iterated = iterated * single;
    const ComplexMatrix exact = matrix_exp(lsup * (static_cast<double>(n) * dt));
    row.embed_error =
        trace_norm(superop_to_choi(iterated, d, d) - superop_to_choi(exact, d, d));
    rows.push_back(row);
  }
  return rows;
}

/// Least-squares slope of log(embed_error) against log(dt) over the sweep
/// rows (rows with a vanishing error are skipped).
inline double embed_error_slope(const std::vector<LimitSweepRow>& rows) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (row.embed_error <= 0.0) continue;
    const double x = std::log(row.dt);
    const double y = std::log(row.embed_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = static_cast<double>(n) * sxx - sx * sx;
  if (std::abs(denom) < 1e-15) return 0.0;
  return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

/// Qubit depolarizing generator: jumps sqrt(kappa/4) sigma_{x,y,z}, H = 0.
/// exp(tL) is depolarizing with lambda = 1 - exp(-kappa t).
inline GKLSGenerator depolarizing_generator(double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("depolarizing_generator: kappa must be positive");
  const double w = std::sqrt(kappa / 4.0);
  const ComplexMatrix sx{{0.0, 1.0}, {1.0, 0.0}};
  const ComplexMatrix sy{{0.0, Complex(0.0, -1.0)}, {Complex(0.0, 1.0), 0.0}};
  const ComplexMatrix sz{{1.0, 0.0}, {0.0, -1.0}};
  return GKLSGenerator(ComplexMatrix(2, 2), {sx * w, sy * w, sz * w});
}

/// Qubit dephasing generator: single jump sqrt(kappa/2) sigma_z. Off-diagonal
/// terms decay at rate kappa; exp(tL) is basis dephasing with p = 1 - e^{-kappa t}.
inline GKLSGenerator dephasing_generator(double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("dephasing_generator: kappa must be positive");
  const ComplexMatrix sz{{1.0, 0.0}, {0.0, -1.0}};
  return GKLSGenerator(ComplexMatrix(2, 2), {sz * std::sqrt(kappa / 2.0)});
}

}  // namespace qmix
