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
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "qmix/channel.hpp"
#include "qmix/linalg.hpp"
#include "qmix/matrix.hpp"
#include "qmix/rng.hpp"

namespace qmix {

namespace detail {

inline void require_projection(const ComplexMatrix& p, const char* name, double tol = 1e-10) {
  if (!p.is_square()) throw std::invalid_argument(std::string(name) + ": must be square");
  if (!is_hermitian(p, tol) || (p * p - p).max_abs() > tol) {
    throw std::invalid_argument(std::string(name) + ": not an orthogonal projection within " +
                                std::to_string(tol));
  }
}

inline void require_unit_vector(const ComplexMatrix& psi, const char* name, double tol = 1e-10) {
  if (psi.cols() != 1) throw std::invalid_argument(std::string(name) + ": expected column vector");
  if (std::abs(vector_norm(psi) - 1.0) > tol) {
    throw std::invalid_argument(std::string(name) + ": vector is not normalized");
  }
}

/// Golden-section maximization of a smooth 1-d slice on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi, int iters) {
  constexpr double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters && (b - a) > 1e-13; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Two projections in general position: P = |0><0|, Q the rank-one projection
/// onto (cos t, sin t). Every pair of projections on C^2 with one principal
/// angle is unitarily equivalent to such a block.
struct HalmosBlock {
  double theta = 0.0;
  ComplexMatrix p;
  ComplexMatrix q;
};

inline HalmosBlock halmos_block(double theta) {
  if (!(theta >= 0.0 && theta <= 1.5707963267948966)) {
    throw std::invalid_argument("halmos_block: theta must lie in [0, pi/2]");
  }
  const double c = std::cos(theta), s = std::sin(theta);
  HalmosBlock block;
  block.theta = theta;
  block.p = ComplexMatrix{{1.0, 0.0}, {0.0, 0.0}};
  block.q = ComplexMatrix{{c * c, c * s}, {c * s, s * s}};
  return block;
}

/// Principal angles (ascending, in [0, pi/2]) between the ranges of two
/// orthogonal projections, from the singular values of the basis overlap.
inline std::vector<double> principal_angles(const ComplexMatrix& p, const ComplexMatrix& q,
                                            double tol = 1e-10) {
  detail::require_projection(p, "principal_angles: P", tol);
  detail::require_projection(q, "principal_angles: Q", tol);
  if (p.rows() != q.rows()) throw std::invalid_argument("principal_angles: dimension mismatch");

  const auto range_basis = [](const ComplexMatrix& proj) {
    EigResult eig = hermitian_eig(proj);
    std::size_t rank = 0;
    for (double lambda : eig.values)
      if (lambda > 0.5) ++rank;
    ComplexMatrix basis(proj.rows(), std::max<std::size_t>(rank, 1));
    std::size_t col = 0;
    for (std::size_t k = 0; k < eig.values.size(); ++k) {
      if (eig.values[k] <= 0.5) continue;
      for (std::size_t i = 0; i < proj.rows(); ++i) basis(i, col) = eig.vectors(i, k);
      ++col;
    }
    return std::pair<ComplexMatrix, std::size_t>(basis, rank);
  };

  const auto [up, rank_p] = range_basis(p);
  const auto [uq, rank_q] = range_basis(q);
  const std::size_t count = std::min(rank_p, rank_q);
  if (count == 0) return {};

  const ComplexMatrix overlap = up.adjoint() * uq;
  std::vector<double> sv = singular_values(overlap);  // descending
  std::vector<double> angles;
  angles.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double c = std::clamp(sv[k], 0.0, 1.0);
    angles.push_back(std::acos(c));
  }
  return angles;  // ascending: acos of descending cosines
}

/// |<psi| [P, Q] |psi>| for unit psi.
inline double commutator_functional(const ComplexMatrix& p, const ComplexMatrix& q,
                                    const ComplexMatrix& psi, double tol = 1e-10) {
  detail::require_projection(p, "commutator_functional: P", tol);
  detail::require_projection(q, "commutator_functional: Q", tol);
  detail::require_unit_vector(psi, "commutator_functional: psi", tol);
  if (p.rows() != q.rows() || p.rows() != psi.rows()) {
    throw std::invalid_argument("commutator_functional: dimension mismatch");
  }
  const ComplexMatrix comm = p * q - q * p;
  return std::abs(inner(psi, comm * psi));
}

/// Order-effect deviation Tr[rho (PQP - QPQ)]; accepts a density matrix or a
/// unit state vector (column).
inline double sequential_deviation(const ComplexMatrix& p, const ComplexMatrix& q,
                                   const ComplexMatrix& state, double tol = 1e-10) {
  detail::require_projection(p, "sequential_deviation: P", tol);
  detail::require_projection(q, "sequential_deviation: Q", tol);
  if (p.rows() != q.rows()) throw std::invalid_argument("sequential_deviation: dim mismatch");
  const ComplexMatrix diff = p * q * p - q * p * q;
  if (state.cols() == 1) {
    detail::require_unit_vector(state, "sequential_deviation: psi", tol);
    if (state.rows() != p.rows()) {
      throw std::invalid_argument("sequential_deviation: state dimension mismatch");
    }
    return inner(state, diff * state).real();
  }
  if (!state.is_square() || state.rows() != p.rows()) {
    throw std::invalid_argument("sequential_deviation: state dimension mismatch");
  }
  if (!is_hermitian(state, tol)) {
    throw std::invalid_argument("sequential_deviation: rho is not Hermitian");
  }
  return (state * diff).trace().real();
}

/// Angular distance between the rays of two unit vectors.
inline double ray_distance(const ComplexMatrix& u, const ComplexMatrix& v) {
  const double overlap = std::clamp(std::abs(inner(u, v)), 0.0, 1.0);
  return std::acos(overlap);
}

struct EqualityScan {
  double max_value = 0.0;
  ComplexMatrix argmax;  // unit vector on C^2
};

/// Maximize |<psi|[P_theta, Q_theta]|psi>| over pure qubit states by a coarse
/// amplitude/phase grid plus golden-section refinement. The maximum is
/// sin(2 theta)/2, attained on psi proportional to (1, +-i).
inline EqualityScan equality_window_scan(double theta, std::size_t n_samples,
                                         std::uint64_t rng_seed) {
  if (n_samples < 100) {
    throw std::invalid_argument("equality_window_scan: need at least 100 samples");
  }
  const HalmosBlock block = halmos_block(theta);
  const ComplexMatrix comm = block.p * block.q - block.q * block.p;

  const auto value_at = [&comm](double phi, double chi) {
    const Complex a(std::cos(phi), 0.0);
    const Complex b = std::polar(std::sin(phi), chi);
    // <psi| C |psi> with psi = (a, b)
    const Complex top = comm(0, 0) * a + comm(0, 1) * b;
    const Complex bot = comm(1, 0) * a + comm(1, 1) * b;
    return std::abs(std::conj(a) * top + std::conj(b) * bot);
  };

  constexpr double half_pi = 1.5707963267948966;
  constexpr double two_pi = 6.283185307179586;
  const std::size_t m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_samples))));

  double best_phi = 0.0, best_chi = 0.0, best = -1.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double phi = (static_cast<double>(a) + 0.5) * half_pi / static_cast<double>(m);
    for (std::size_t b = 0; b < m; ++b) {
      const double chi = static_cast<double>(b) * two_pi / static_cast<double>(m);
      const double v = value_at(phi, chi);
      if (v > best) {
        best = v;
        best_phi = phi;
        best_chi = chi;
      }
    }
  }

  Rng rng(rng_seed);
  for (std::size_t k = 0; k < m; ++k) {  // a few seeded probes off the grid
    const double phi = rng.uniform() * half_pi;
    const double chi = rng.uniform() * two_pi;
    const double v = value_at(phi, chi);
    if (v > best) {
      best = v;
      best_phi = phi;
      best_chi = chi;
    }
  }

  double span_phi = half_pi / static_cast<double>(m);
  double span_chi = two_pi / static_cast<double>(m);
  for (int round = 0; round < 3; ++round) {
    best_phi = detail::golden_max(
        [&](double phi) { return value_at(phi, best_chi); },
        std::max(0.0, best_phi - span_phi), std::min(half_pi, best_phi + span_phi), 60);
    best_chi = detail::golden_max(
        [&](double chi) { return value_at(best_phi, chi); },
        best_chi - span_chi, best_chi + span_chi, 60);
    span_phi *= 0.05;
    span_chi *= 0.05;
  }

  EqualityScan result;
  result.max_value = value_at(best_phi, best_chi);
  result.argmax = ComplexMatrix::column(
      {Complex(std::cos(best_phi), 0.0), std::polar(std::sin(best_phi), best_chi)});
  return result;
}

struct OrderResidual {
  ComplexMatrix residual;     // PQP - QPQ
  double residual_norm = 0.0;  // operator norm of the residual
  double commutator_norm = 0.0;
  bool bound_holds = false;   // residual_norm <= 2 commutator_norm + 1e-10
};

inline OrderResidual order_residual(const ComplexMatrix& p, const ComplexMatrix& q,
                                    double tol = 1e-10) {
  detail::require_projection(p, "order_residual: P", tol);
  detail::require_projection(q, "order_residual: Q", tol);
  if (p.rows() != q.rows()) throw std::invalid_argument("order_residual: dimension mismatch");
  OrderResidual out;
  out.residual = p * q * p - q * p * q;
  out.residual_norm = operator_norm(out.residual);
  out.commutator_norm = operator_norm(p * q - q * p);
  out.bound_holds = out.residual_norm <= 2.0 * out.commutator_norm + 1e-10;
  return out;
}

struct SplitBound {
  double delta_ab = 0.0;      // total deviation of the full sequence
  double delta_loc = 0.0;     // sum of within-subsystem deviations
  double delta_nonloc = 0.0;  // deviation of the coupled pair
  bool holds = false;
};

/// Splits the total order effect into local and nonlocal parts and checks the
/// triangle bound |delta_AB| <= |delta_loc| + |delta_nonloc| + 1e-10.
inline SplitBound split_bound_check(
    const std::vector<std::pair<ComplexMatrix, ComplexMatrix>>& local_pairs,
    const std::pair<ComplexMatrix, ComplexMatrix>& nonlocal_pair, const ComplexMatrix& rho,
    double tol = 1e-10) {
  SplitBound out;
  for (const auto& [p, q] : local_pairs) out.delta_loc += sequential_deviation(p, q, rho, tol);
  out.delta_nonloc = sequential_deviation(nonlocal_pair.first, nonlocal_pair.second, rho, tol);
  out.delta_ab = out.delta_loc + out.delta_nonloc;
  out.holds = std::abs(out.delta_ab) <= std::abs(out.delta_loc) + std::abs(out.delta_nonloc) + 1e-10;
  return out;
}

/// Rank-one qubit projection at Bloch polar angle a (azimuth 0).
inline ComplexMatrix bloch_projection(double polar) {
  const double c = std::cos(polar / 2.0), s = std::sin(polar / 2.0);
  return ComplexMatrix{{c * c, c * s}, {c * s, s * s}};
}

struct OrderSweepRow {
  double gamma = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Order-effect proxy under ZZ coupling. The first measurement P_alpha acts on
/// qubit A before the coupling; the second, Q_beta on qubit B, is conjugated
/// through U = exp(-i gamma/2 Z(x)Z). At gamma = 0 the projections commute and
/// every row entry is zero.
inline std::vector<OrderSweepRow> zz_order_sweep(const std::vector<double>& gamma_grid,
                                                 std::size_t ab_steps, const ComplexMatrix& psi0,
                                                 [[maybe_unused]] std::uint64_t rng_seed) {
  if (gamma_grid.empty()) throw std::invalid_argument("zz_order_sweep: empty gamma grid");
  if (ab_steps == 0) throw std::invalid_argument("zz_order_sweep: ab_steps must be positive");
  detail::require_unit_vector(psi0, "zz_order_sweep: psi0");
  if (psi0.rows() != 4) throw std::invalid_argument("zz_order_sweep: psi0 must live on C^4");
  constexpr double half_pi = 1.5707963267948966;
  constexpr double pi = 3.141592653589793;
  for (double g : gamma_grid) {
    if (!(g >= 0.0 && g <= half_pi)) {
      throw std::invalid_argument("zz_order_sweep: gamma values must lie in [0, pi/2]");
    }
  }

  const ComplexMatrix eye2 = ComplexMatrix::identity(2);
  std::vector<ComplexMatrix> p_ops, q_ops;
  for (std::size_t k = 1; k <= ab_steps; ++k) {
    const double angle = static_cast<double>(k) * pi / static_cast<double>(ab_steps + 1);
    p_ops.push_back(bloch_projection(angle));
    q_ops.push_back(bloch_projection(angle));
  }

  std::vector<OrderSweepRow> rows;
  rows.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    const ComplexMatrix u = zz_unitary(gamma);
    const ComplexMatrix udag = u.adjoint();
    OrderSweepRow row;
    row.gamma = gamma;
    double total = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& p : p_ops) {
      const ComplexMatrix pt = kron(p, eye2);
      for (const auto& q : q_ops) {
        const ComplexMatrix qt = udag * kron(eye2, q) * u;
        const double v = std::abs(sequential_deviation(pt, qt, psi0));
        total += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const double cells = static_cast<double>(p_ops.size() * q_ops.size());
    row.mean = total / cells;
    row.min = lo;
    row.max = hi;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace qmix
