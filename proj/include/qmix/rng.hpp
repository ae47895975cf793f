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

#include <cstdint>

#include "qmix/matrix.hpp"

namespace qmix {

// splitmix64 finalizer. All randomness in the library flows through this so
// seeded runs are byte-identical across platforms and standard libraries.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Sequential deterministic generator (splitmix64 stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0xa5a5a5a5a5a5a5a5ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// Stateless uniform in [0, 1) indexed by (seed, a, b). Used where draws must
/// not depend on evaluation order (e.g. per-shot sampling).
inline double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc908ULL);
  h = mix64(h ^ mix64(a + 1));
  h = mix64(h ^ mix64(b + 1));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline ComplexMatrix random_gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  ComplexMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return m;
}

inline ComplexMatrix random_unit_vector(std::size_t dim, Rng& rng) {
  ComplexMatrix v = random_gaussian_matrix(dim, 1, rng);
  double n = vector_norm(v);
  while (n < 1e-12) {  // essentially impossible, but never divide by ~0
    v = random_gaussian_matrix(dim, 1, rng);
    n = vector_norm(v);
  }
  return v * (1.0 / n);
}

inline ComplexMatrix random_hermitian(std::size_t dim, Rng& rng) {
  const ComplexMatrix g = random_gaussian_matrix(dim, dim, rng);
  return (g + g.adjoint()) * 0.5;
}

inline ComplexMatrix random_traceless_hermitian(std::size_t dim, Rng& rng) {
  ComplexMatrix h = random_hermitian(dim, rng);
  const Complex t = h.trace() * (1.0 / static_cast<double>(dim));
  for (std::size_t i = 0; i < dim; ++i) h(i, i) -= t;
  return h;
}

/// Density matrix with full support (Wishart normalized to unit trace).
inline ComplexMatrix random_density(std::size_t dim, Rng& rng) {
  const ComplexMatrix g = random_gaussian_matrix(dim, dim, rng);
  ComplexMatrix rho = g * g.adjoint();
  return rho * (1.0 / rho.trace().real());
}

/// Unitary from modified Gram-Schmidt on a Gaussian matrix (two passes).
inline ComplexMatrix random_unitary(std::size_t dim, Rng& rng) {
  ComplexMatrix q = random_gaussian_matrix(dim, dim, rng);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t j = 0; j < dim; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        Complex proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += std::conj(q(i, k)) * q(i, j);
        for (std::size_t i = 0; i < dim; ++i) q(i, j) -= proj * q(i, k);
      }
      double n = 0.0;
      for (std::size_t i = 0; i < dim; ++i) n += std::norm(q(i, j));
      n = std::sqrt(n);
      if (n < 1e-12) throw std::runtime_error("random_unitary: degenerate Gaussian draw");
      for (std::size_t i = 0; i < dim; ++i) q(i, j) *= 1.0 / n;
    }
  }
  return q;
}

/// Rank-r orthogonal projection onto a random subspace.
inline ComplexMatrix random_projection(std::size_t dim, std::size_t rank, Rng& rng) {
  if (rank > dim) throw std::invalid_argument("random_projection: rank exceeds dimension");
  const ComplexMatrix u = random_unitary(dim, rng);
  ComplexMatrix p(dim, dim);
  for (std::size_t k = 0; k < rank; ++k)
    for (std::size_t i = 0; i < dim; ++i)
      for (std::size_t j = 0; j < dim; ++j) p(i, j) += u(i, k) * std::conj(u(j, k));
  return p;
}

}  // namespace qmix
