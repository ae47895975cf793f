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

#include <cstddef>
#include <cstdint>
#include <vector>

#include <qmix/channel.hpp>
#include <qmix/linalg.hpp>
#include <qmix/matrix.hpp>
#include <qmix/rng.hpp>

namespace qmix::test {

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).max_abs();
}

/// Inverse square root of a positive definite Hermitian matrix.
inline ComplexMatrix inverse_sqrt(const ComplexMatrix& s) {
  const EigResult es = hermitian_eig(s);
  const std::size_t n = s.rows();
  ComplexMatrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / std::sqrt(es.values[k]);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) += es.vectors(i, k) * w * std::conj(es.vectors(j, k));
  }
  return out;
}

/// Random CPTP channel from Gaussian Kraus operators normalized so that
/// sum K^dag K = I exactly (up to eigensolver accuracy).
inline Channel random_cptp(std::size_t dim, std::size_t n_kraus, Rng& rng) {
  std::vector<ComplexMatrix> raw;
  ComplexMatrix s(dim, dim);
  for (std::size_t k = 0; k < n_kraus; ++k) {
    raw.push_back(random_gaussian_matrix(dim, dim, rng));
    s += raw.back().adjoint() * raw.back();
  }
  const ComplexMatrix w = inverse_sqrt(s);
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(n_kraus);
  for (const auto& g : raw) kraus.push_back(g * w);
  return Channel(std::move(kraus), KrausFlag::trace_preserving, 1e-9);
}

/// Random CP map with Choi trace scaled to dim (the trace a TP map would have).
inline Channel random_cp(std::size_t dim, std::size_t n_kraus, Rng& rng) {
  std::vector<ComplexMatrix> kraus;
  double choi_trace = 0.0;
  for (std::size_t k = 0; k < n_kraus; ++k) {
    kraus.push_back(random_gaussian_matrix(dim, dim, rng));
    const double f = kraus.back().frobenius_norm();
    choi_trace += f * f;
  }
  const double scale = std::sqrt(static_cast<double>(dim) / choi_trace);
  for (auto& k : kraus) k *= Complex(scale, 0.0);
  return Channel(std::move(kraus), KrausFlag::general_cp);
}

/// Mixture (1-c) U rho U^dag + c tr(rho) tau, minorized by the constant map
/// onto tau with constant at least c.
inline Channel mixed_reset_channel(double c, const ComplexMatrix& u, const ComplexMatrix& tau) {
  std::vector<ComplexMatrix> kraus;
  kraus.push_back(std::sqrt(1.0 - c) * u);
  const Channel reset = reset_channel(tau);
  for (const auto& k : reset.kraus()) kraus.push_back(std::sqrt(c) * k);
  return Channel(std::move(kraus), KrausFlag::trace_preserving, 1e-9);
}

inline ComplexMatrix maximally_mixed(std::size_t dim) {
  ComplexMatrix out = ComplexMatrix::identity(dim);
  out *= Complex(1.0 / static_cast<double>(dim), 0.0);
  return out;
}

inline ComplexMatrix basis_state(std::size_t dim, std::size_t k) {
  ComplexMatrix v(dim, 1);
  v(k, 0) = 1.0;
  return v;
}

}  // namespace qmix::test
