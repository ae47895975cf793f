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

#include <string>
#include <vector>

#include "qmix/channel.hpp"
#include "qmix/linalg.hpp"
#include "qmix/matrix.hpp"
#include "qmix/rng.hpp"

namespace qmix {

struct MinorizationResult {
  double epsilon = 0.0;
  double tol = 0.0;
  int iterations = 0;
};

/// Largest epsilon in [0, 1] with choi(phi) - epsilon * choi(seed) PSD, by
/// bisection on the Choi pencil. The PSD test allows eigenvalues down to
/// -tol/2, so the result is accurate to about tol.
inline MinorizationResult doeblin_constant(const Channel& phi, const Channel& seed,
                                           double tol = 1e-9) {
  if (phi.dim_in() != seed.dim_in() || phi.dim_out() != seed.dim_out()) {
    throw std::invalid_argument("doeblin_constant: channel and seed act on different spaces");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("doeblin_constant: tol must be positive");

  const ComplexMatrix a = phi.choi();
  const ComplexMatrix b = seed.choi();
  if (b.max_abs() <= 1e-14) {
    throw std::invalid_argument("doeblin_constant: seed map is numerically zero");
  }

  MinorizationResult result;
  result.tol = tol;

  const auto feasible = [&](double eps) { return is_psd_within(a - eps * b, tol / 2.0); };

  if (feasible(1.0)) {
    result.epsilon = 1.0;
    result.iterations = 1;
    return result;
  }
  double lo = 0.0, hi = 1.0;
  int iter = 1;
  while (hi - lo > tol && iter < 60) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++iter;
  }
  result.epsilon = lo;
  result.iterations = iter;
  return result;
}

struct ProductBound {
  double delta_a = 0.0;
  double delta_b = 0.0;
  double delta_ab = 0.0;
  bool holds = false;  // delta_ab >= delta_a * delta_b - 1e-7
};

/// Doeblin constants of two channels, of their tensor product, and the
/// product lower bound delta_AB >= delta_A * delta_B.
inline ProductBound product_bound_check(const Channel& phi_a, const Channel& phi_b,
                                        const Channel& seed_a, const Channel& seed_b,
                                        double tol = 1e-9) {
  ProductBound out;
  out.delta_a = doeblin_constant(phi_a, seed_a, tol).epsilon;
  out.delta_b = doeblin_constant(phi_b, seed_b, tol).epsilon;
  out.delta_ab =
      doeblin_constant(compose_parallel(phi_a, phi_b), compose_parallel(seed_a, seed_b), tol)
          .epsilon;
  out.holds = out.delta_ab >= out.delta_a * out.delta_b - 1e-7;
  return out;
}

struct ContractionCheck {
  double max_ratio = 0.0;
  bool holds = false;  // max_ratio <= 1 - delta + 1e-9
};

/// Samples traceless Hermitian inputs and measures the trace-norm contraction
/// ratio of a trace-preserving channel against the bound 1 - delta.
inline ContractionCheck traceless_contraction_factor(const Channel& phi, double delta,
                                                     std::size_t n_samples, std::uint64_t rng_seed) {
  if (phi.dim_in() != phi.dim_out()) {
    throw std::invalid_argument("traceless_contraction_factor: channel must be square");
  }
  const ComplexMatrix gram_residual =
      phi.kraus_gram() - ComplexMatrix::identity(phi.dim_in());
  if (gram_residual.max_abs() > 1e-10) {
    throw std::invalid_argument("traceless_contraction_factor: channel is not trace-preserving");
  }
  if (n_samples == 0) throw std::invalid_argument("traceless_contraction_factor: no samples");

  Rng rng(rng_seed);
  ContractionCheck out;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const ComplexMatrix x = random_traceless_hermitian(phi.dim_in(), rng);
    const double denom = trace_norm(x);
    if (denom < 1e-12) continue;
    out.max_ratio = std::max(out.max_ratio, trace_norm(phi.apply(x)) / denom);
  }
  out.holds = out.max_ratio <= 1.0 - delta + 1e-9;
  return out;
}

/// Trace distances || phi^n(rho0) - tau ||_1 for n = 0..n_max. Requires tau
/// to be a fixed point of phi.
inline std::vector<double> mixing_trajectory(const Channel& phi, const ComplexMatrix& rho0,
                                             const ComplexMatrix& tau, std::size_t n_max) {
  if (phi.dim_in() != phi.dim_out()) {
    throw std::invalid_argument("mixing_trajectory: channel must be square");
  }
  const double fixed_residual = trace_norm(phi.apply(tau) - tau);
  if (fixed_residual > 1e-8) {
    throw std::invalid_argument("mixing_trajectory: tau is not stationary (||phi(tau)-tau||_1 = " +
                                std::to_string(fixed_residual) + ")");
  }
  std::vector<double> distances;
  distances.reserve(n_max + 1);
  ComplexMatrix rho = rho0;
  distances.push_back(trace_norm(rho - tau));
  for (std::size_t n = 0; n < n_max; ++n) {
    rho = phi.apply(rho);
    distances.push_back(trace_norm(rho - tau));
  }
  return distances;
}

/// Difference of two completely positive maps, kept as a (plus, minus) pair of
/// Kraus channels so it can be applied, extended by an ancilla, and adjointed
/// without leaving Kraus form.
struct MapDifference {
  Channel plus;
  Channel minus;

  std::size_t dim() const { return plus.dim_in(); }

  ComplexMatrix apply(const ComplexMatrix& rho) const { return plus.apply(rho) - minus.apply(rho); }

  ComplexMatrix choi() const { return plus.choi() - minus.choi(); }

  /// (Theta (x) id_k)(rho) on C^{d k}.
  ComplexMatrix apply_extended(const ComplexMatrix& rho, std::size_t k) const {
    const ComplexMatrix eye = ComplexMatrix::identity(k);
    ComplexMatrix out(plus.dim_out() * k, plus.dim_out() * k);
    for (const auto& op : plus.kraus()) {
      const ComplexMatrix ext = kron(op, eye);
      out += ext * rho * ext.adjoint();
    }
    for (const auto& op : minus.kraus()) {
      const ComplexMatrix ext = kron(op, eye);
      out -= ext * rho * ext.adjoint();
    }
    return out;
  }

  /// (Theta^dag (x) id_k)(w) with the Kraus adjoint map.
  ComplexMatrix adjoint_extended(const ComplexMatrix& w, std::size_t k) const {
    const ComplexMatrix eye = ComplexMatrix::identity(k);
    ComplexMatrix out(plus.dim_in() * k, plus.dim_in() * k);
    for (const auto& op : plus.kraus()) {
      const ComplexMatrix ext = kron(op, eye);
      out += ext.adjoint() * w * ext;
    }
    for (const auto& op : minus.kraus()) {
      const ComplexMatrix ext = kron(op, eye);
      out -= ext.adjoint() * w * ext;
    }
    return out;
  }
};

/// Theta = (id (x) Phi_B) Psi (Phi_A (x) id) - (Phi_A (x) id) Psi (id (x) Phi_B),
/// the map whose size measures how much the two marginal instruments fail to
/// commute through the coupling Psi.
inline MapDifference order_commutator_superop(const Channel& phi_a, const Channel& phi_b,
                                              const Channel& psi) {
  if (phi_a.dim_in() != phi_a.dim_out() || phi_b.dim_in() != phi_b.dim_out()) {
    throw std::invalid_argument("order_commutator_superop: marginal channels must be square");
  }
  const std::size_t d = phi_a.dim_in() * phi_b.dim_in();
  if (psi.dim_in() != d || psi.dim_out() != d) {
    throw std::invalid_argument("order_commutator_superop: coupling does not act on the product");
  }
  const Channel lift_a = compose_parallel(phi_a, identity_channel(phi_b.dim_in()));
  const Channel lift_b = compose_parallel(identity_channel(phi_a.dim_in()), phi_b);
  return MapDifference{compose_serial(lift_b, compose_serial(psi, lift_a)),
                       compose_serial(lift_a, compose_serial(psi, lift_b))};
}

struct DiamondBounds {
  double lower = 0.0;
  double upper = 0.0;
  ComplexMatrix witness;       // ancilla-assisted pure state achieving `lower`
  double witness_value = 0.0;  // ||(Theta (x) id)(witness)||_1
};

/// Diamond-norm sandwich for a difference of CP maps: the upper bound is the
/// trace norm of the (unnormalized) Choi operator; the lower bound maximizes
/// ||(Theta (x) id_d)(psi psi^dag)||_1 over pure inputs by alternating ascent
/// (restart 0 is the maximally entangled state, the rest are seeded draws).
inline DiamondBounds diamond_bounds(const MapDifference& theta, int restarts,
                                    std::uint64_t rng_seed) {
  if (restarts < 1) throw std::invalid_argument("diamond_bounds: need at least one restart");
  const std::size_t d = theta.dim();
  const std::size_t dd = d * d;

  DiamondBounds out;
  out.upper = trace_norm(theta.choi());

  Rng rng(rng_seed);
  for (int r = 0; r < restarts; ++r) {
    ComplexMatrix psi(dd, 1);
    if (r == 0) {
      const double w = 1.0 / std::sqrt(static_cast<double>(d));
      for (std::size_t i = 0; i < d; ++i) psi(i * d + i, 0) = w;
    } else {
      psi = random_unit_vector(dd, rng);
    }

    double value = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const ComplexMatrix y = theta.apply_extended(outer(psi), d);
      const EigResult eig = hermitian_eig((y + y.adjoint()) * 0.5);
      double trial = 0.0;
      for (double lambda : eig.values) trial += std::abs(lambda);
      if (trial <= value + 1e-13) {
        value = std::max(value, trial);
        break;
      }
      value = trial;

      ComplexMatrix sign_op(dd, dd);
      for (std::size_t k = 0; k < eig.values.size(); ++k) {
        const double s = eig.values[k] > 0.0 ? 1.0 : (eig.values[k] < 0.0 ? -1.0 : 0.0);
        if (s == 0.0) continue;
        for (std::size_t i = 0; i < dd; ++i)
          for (std::size_t j = 0; j < dd; ++j)
            sign_op(i, j) += s * eig.vectors(i, k) * std::conj(eig.vectors(j, k));
      }
      const ComplexMatrix back = theta.adjoint_extended(sign_op, d);
      const EigResult eig_back = hermitian_eig((back + back.adjoint()) * 0.5);
      for (std::size_t i = 0; i < dd; ++i) psi(i, 0) = eig_back.vectors(i, dd - 1);
    }

    if (value > out.lower + 1e-15 || r == 0) {
      out.lower = std::max(out.lower, value);
      out.witness = psi;
    }
  }

  const ComplexMatrix y = theta.apply_extended(outer(out.witness), d);
  out.witness_value = trace_norm((y + y.adjoint()) * 0.5);
  return out;
}

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::violated:
      return "violated";
    default:
      return "inconclusive";
  }
}

struct DiamondReport {
  double delta_a = 0.0;
  double delta_b = 0.0;
  double theorem_rhs = 0.0;  // 2 (1 - delta_A delta_B)
  double lower = 0.0;
  double upper = 0.0;
  Verdict verdict = Verdict::inconclusive;
  ComplexMatrix witness;
  double witness_value = 0.0;
};

/// Falsification harness: compares the diamond-norm sandwich of the order
/// commutator against the claimed bound 2 (1 - delta_A delta_B). A lower bound
/// above the claim is a counterexample, certified by the witness state.
inline DiamondReport diamond_theorem_check(const Channel& phi_a, const Channel& phi_b,
                                           const Channel& psi, const Channel& seed_a,
                                           const Channel& seed_b, int restarts,
                                           std::uint64_t rng_seed, double tol = 1e-9) {
  DiamondReport report;
  report.delta_a = doeblin_constant(phi_a, seed_a, tol).epsilon;
  report.delta_b = doeblin_constant(phi_b, seed_b, tol).epsilon;
  report.theorem_rhs = 2.0 * (1.0 - report.delta_a * report.delta_b);

  const MapDifference theta = order_commutator_superop(phi_a, phi_b, psi);
  const DiamondBounds bounds = diamond_bounds(theta, restarts, rng_seed);
  report.lower = bounds.lower;
  report.upper = bounds.upper;
  report.witness = bounds.witness;
  report.witness_value = bounds.witness_value;

  if (report.lower > report.theorem_rhs + 1e-9) {
    report.verdict = Verdict::violated;
  } else if (report.upper <= report.theorem_rhs + 1e-9) {
    report.verdict = Verdict::holds;
  } else {
    report.verdict = Verdict::inconclusive;
  }
  return report;
}

}  // namespace qmix
