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
#include <numeric>
#include <vector>

#include "qmix/matrix.hpp"

namespace qmix {

struct EigResult {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k is the eigenvector of values[k]
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
/// Rejects inputs that are not Hermitian within `herm_tol` (scaled by the
/// largest entry magnitude).
inline EigResult hermitian_eig(const ComplexMatrix& m, double herm_tol = 1e-10) {
  if (!m.is_square()) throw std::invalid_argument("hermitian_eig: matrix must be square");
  const std::size_t n = m.rows();
  const double scale = std::max(1.0, m.max_abs());
  if (!is_hermitian(m, herm_tol * scale)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
    throw std::invalid_argument("hermitian_eig: input is not Hermitian (max |M - M^dag| = " +
                                std::to_string(worst) + ")");
  }

  ComplexMatrix a = (m + m.adjoint()) * 0.5;
  ComplexMatrix v = ComplexMatrix::identity(n);

  if (n > 1) {
    const double stop = 1e-14 * std::max(1.0, a.frobenius_norm());
    bool converged = false;
    for (int sweep = 0; sweep < 60; ++sweep) {
      if (detail::off_diagonal_norm(a) <= stop) {
        converged = true;
        break;
      }
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          const Complex beta = a(p, q);
          const double ab = std::abs(beta);
          if (ab <= stop / static_cast<double>(n * n)) continue;

          const double alpha = a(p, p).real();
          const double gamma = a(q, q).real();
          const Complex phase = beta / ab;  // e^{i phi}
          const double tau = (alpha - gamma) / (2.0 * ab);
          const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = t * c;
          const Complex sp = s * phase;
          const Complex spc = s * std::conj(phase);

          for (std::size_t i = 0; i < n; ++i) {  // A <- A U
            const Complex aip = a(i, p), aiq = a(i, q);
            a(i, p) = c * aip + spc * aiq;
            a(i, q) = -sp * aip + c * aiq;
          }
          for (std::size_t j = 0; j < n; ++j) {  // A <- U^dag A
            const Complex apj = a(p, j), aqj = a(q, j);
            a(p, j) = c * apj + sp * aqj;
            a(q, j) = -spc * apj + c * aqj;
          }
          for (std::size_t i = 0; i < n; ++i) {  // V <- V U
            const Complex vip = v(i, p), viq = v(i, q);
            v(i, p) = c * vip + spc * viq;
            v(i, q) = -sp * vip + c * viq;
          }
        }
      }
    }
    if (!converged && detail::off_diagonal_norm(a) > stop) {
      throw std::runtime_error("hermitian_eig: Jacobi sweeps did not converge");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });

  EigResult result;
  result.values.resize(n);
  result.vectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    result.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) result.vectors(i, k) = v(i, order[k]);
  }
  return result;
}

inline double min_hermitian_eigenvalue(const ComplexMatrix& m, double herm_tol = 1e-10) {
  return hermitian_eig(m, herm_tol).values.front();
}

/// Singular values (descending) via the eigenvalues of M^dag M (or M M^dag,
/// whichever is smaller). Tiny negative eigenvalues are clamped to zero
/// before the square root.
inline std::vector<double> singular_values(const ComplexMatrix& m) {
  const bool use_gram = m.cols() <= m.rows();
  const ComplexMatrix g = use_gram ? m.adjoint() * m : m * m.adjoint();
  EigResult eig = hermitian_eig(g);
  std::vector<double> out;
  out.reserve(eig.values.size());
  for (auto it = eig.values.rbegin(); it != eig.values.rend(); ++it) {
    double lambda = *it;
    if (lambda < 0.0) lambda = 0.0;  // roundoff; g is PSD by construction
    out.push_back(std::sqrt(lambda));
  }
  return out;
}

inline double trace_norm(const ComplexMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("trace_norm: matrix must be square");
  const auto sv = singular_values(m);
  return std::accumulate(sv.begin(), sv.end(), 0.0);
}

inline double operator_norm(const ComplexMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("operator_norm: matrix must be square");
  const auto sv = singular_values(m);
  return sv.empty() ? 0.0 : sv.front();
}

/// Matrix exponential by scaling-and-squaring around an 18-term Taylor core.
/// The argument is halved until its induced 1-norm is at most 0.5.
inline ComplexMatrix matrix_exp(const ComplexMatrix& m) {
  if (!m.is_square()) throw std::invalid_argument("matrix_exp: matrix must be square");
  const std::size_t n = m.rows();

  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) col += std::abs(m(i, j));
    norm1 = std::max(norm1, col);
  }
  if (!std::isfinite(norm1)) throw std::invalid_argument("matrix_exp: non-finite entries");

  int squarings = 0;
  double scaled = norm1;
  while (scaled > 0.5 && squarings < 64) {
    scaled *= 0.5;
    ++squarings;
  }

  ComplexMatrix b = m * (1.0 / std::ldexp(1.0, squarings));
  ComplexMatrix total = ComplexMatrix::identity(n);
  ComplexMatrix term = ComplexMatrix::identity(n);
  for (int k = 1; k <= 18; ++k) {
    term = term * b;
    term *= Complex(1.0 / static_cast<double>(k), 0.0);
    total += term;
  }
  for (int k = 0; k < squarings; ++k) total = total * total;
  return total;
}

/// Principal square root of a PSD Hermitian matrix. Eigenvalues below
/// -1e-12 (scaled) are rejected; small negatives are clamped.
inline ComplexMatrix hermitian_sqrt(const ComplexMatrix& m) {
  EigResult eig = hermitian_eig(m);
  const double scale = std::max(1.0, std::abs(eig.values.back()));
  ComplexMatrix out(m.rows(), m.rows());
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    double lambda = eig.values[k];
    if (lambda < -1e-12 * scale) {
      throw std::invalid_argument("hermitian_sqrt: matrix is not positive semidefinite");
    }
    const double root = std::sqrt(std::max(lambda, 0.0));
    for (std::size_t i = 0; i < m.rows(); ++i)
      for (std::size_t j = 0; j < m.rows(); ++j)
        out(i, j) += root * eig.vectors(i, k) * std::conj(eig.vectors(j, k));
  }
  return out;
}

/// True when H + shift*I admits a Cholesky factorization, i.e. the smallest
/// eigenvalue of H exceeds -shift. Cheap PSD test for bisection loops; uses
/// only the lower triangle of H.
inline bool is_psd_within(const ComplexMatrix& h, double shift) {
  if (!h.is_square()) throw std::invalid_argument("is_psd_within: matrix must be square");
  const std::size_t n = h.rows();
  ComplexMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j).real() + shift;
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0)) return false;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      Complex sum = h(i, j);
      for (std::size_t k = 0; k < j; ++k) sum -= l(i, k) * std::conj(l(j, k));
      l(i, j) = sum / ljj;
    }
  }
  return true;
}

}  // namespace qmix
