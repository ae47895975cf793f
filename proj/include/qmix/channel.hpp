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

#include "qmix/linalg.hpp"
#include "qmix/matrix.hpp"

namespace qmix {

/// What the Kraus list is expected to satisfy; validated at construction.
enum class KrausFlag { general_cp, trace_nonincreasing, trace_preserving };

/// Completely positive map in Kraus form. Immutable after construction and
/// safe to share across threads; choi()/superop() are computed on demand.
class Channel {
 public:
  Channel(std::vector<ComplexMatrix> kraus, KrausFlag flag = KrausFlag::trace_preserving,
          double tol = 1e-10)
      : kraus_(std::move(kraus)), flag_(flag) {
    if (kraus_.empty()) throw std::invalid_argument("Channel: empty Kraus list");
    dim_out_ = kraus_.front().rows();
    dim_in_ = kraus_.front().cols();
    for (const auto& k : kraus_) {
      if (k.rows() != dim_out_ || k.cols() != dim_in_) {
        throw std::invalid_argument("Channel: inconsistent Kraus operator shapes");
      }
    }
    if (flag_ != KrausFlag::general_cp) {
      const ComplexMatrix s = kraus_gram();
      if (flag_ == KrausFlag::trace_preserving) {
        const ComplexMatrix residual = s - ComplexMatrix::identity(dim_in_);
        if (residual.max_abs() > tol) {
          throw std::invalid_argument("Channel: sum K^dag K != I (residual " +
                                      std::to_string(residual.max_abs()) + ")");
        }
      } else {
        const double top = hermitian_eig(s).values.back();
        if (top > 1.0 + tol) {
          throw std::invalid_argument("Channel: sum K^dag K exceeds I (top eigenvalue " +
                                      std::to_string(top) + ")");
        }
      }
    }
  }

  std::size_t dim_in() const { return dim_in_; }
  std::size_t dim_out() const { return dim_out_; }
  KrausFlag flag() const { return flag_; }
  const std::vector<ComplexMatrix>& kraus() const { return kraus_; }

  ComplexMatrix kraus_gram() const {
    ComplexMatrix s(dim_in_, dim_in_);
    for (const auto& k : kraus_) s += k.adjoint() * k;
    return s;
  }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    if (!rho.is_square() || rho.rows() != dim_in_) {
      throw std::invalid_argument("Channel::apply: state dimension mismatch");
    }
    ComplexMatrix out(dim_out_, dim_out_);
    for (const auto& k : kraus_) out += k * rho * k.adjoint();
    return out;
  }

  /// Choi operator J = sum_{ij} E_ij (x) Phi(E_ij); Tr J = dim_in for a
  /// trace-preserving map. Row index is i*dim_out + r (input first).
  ComplexMatrix choi() const {
    const std::size_t d = dim_in_ * dim_out_;
    ComplexMatrix j(d, d);
    std::vector<Complex> v(d);
    for (const auto& k : kraus_) {
      for (std::size_t i = 0; i < dim_in_; ++i)
        for (std::size_t r = 0; r < dim_out_; ++r) v[i * dim_out_ + r] = k(r, i);
      for (std::size_t x = 0; x < d; ++x) {
        if (v[x] == Complex(0.0, 0.0)) continue;
        for (std::size_t y = 0; y < d; ++y) j(x, y) += v[x] * std::conj(v[y]);
      }
    }
    return j;
  }

  /// Column-stacking superoperator: vec(Phi(rho)) = S vec(rho).
  ComplexMatrix superop() const {
    ComplexMatrix s(dim_out_ * dim_out_, dim_in_ * dim_in_);
    for (const auto& k : kraus_) s += kron(k.conj(), k);
    return s;
  }

 private:
  std::vector<ComplexMatrix> kraus_;
  KrausFlag flag_;
  std::size_t dim_in_ = 0;
  std::size_t dim_out_ = 0;
};

inline Channel identity_channel(std::size_t dim) {
  return Channel({ComplexMatrix::identity(dim)}, KrausFlag::trace_preserving);
}

inline Channel unitary_channel(const ComplexMatrix& u, double tol = 1e-10) {
  if (!u.is_square()) throw std::invalid_argument("unitary_channel: matrix must be square");
  const ComplexMatrix residual = u.adjoint() * u - ComplexMatrix::identity(u.rows());
  if (residual.max_abs() > tol) {
    throw std::invalid_argument("unitary_channel: matrix is not unitary (residual " +
                                std::to_string(residual.max_abs()) + ")");
  }
  return Channel({u}, KrausFlag::trace_preserving);
}

/// Basis dephasing: rho -> (1-p) rho + p sum_i |i><i| rho |i><i|.
inline Channel dephasing(double p, std::size_t dim) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("dephasing: p must lie in [0, 1]");
  std::vector<ComplexMatrix> kraus;
  kraus.push_back(ComplexMatrix::identity(dim) * std::sqrt(1.0 - p));
  for (std::size_t i = 0; i < dim; ++i) {
    ComplexMatrix k(dim, dim);
    k(i, i) = std::sqrt(p);
    kraus.push_back(std::move(k));
  }
  return Channel(std::move(kraus), KrausFlag::trace_preserving);
}

/// Depolarizing: rho -> (1-lambda) rho + lambda Tr[rho] I/d.
inline Channel depolarizing(double lambda, std::size_t dim) {
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("depolarizing: lambda must lie in [0, 1]");
  }
  std::vector<ComplexMatrix> kraus;
  kraus.push_back(ComplexMatrix::identity(dim) * std::sqrt(1.0 - lambda));
  const double w = std::sqrt(lambda / static_cast<double>(dim));
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      ComplexMatrix k(dim, dim);
      k(i, j) = w;
      kraus.push_back(std::move(k));
    }
  return Channel(std::move(kraus), KrausFlag::trace_preserving);
}

/// Rank-one "measure-and-reprepare" map rho -> Tr[rho] tau.
inline Channel reset_channel(const ComplexMatrix& tau, double tol = 1e-10) {
  if (!tau.is_square()) throw std::invalid_argument("reset_channel: tau must be square");
  const std::size_t d = tau.rows();
  if (!is_hermitian(tau, tol) || std::abs(tau.trace().real() - 1.0) > tol) {
    throw std::invalid_argument("reset_channel: tau must be a density matrix");
  }
  EigResult eig = hermitian_eig(tau);
  std::vector<ComplexMatrix> kraus;
  for (std::size_t k = 0; k < d; ++k) {
    double lambda = eig.values[k];
    if (lambda < -tol) throw std::invalid_argument("reset_channel: tau has a negative eigenvalue");
    if (lambda <= 0.0) continue;
    const double w = std::sqrt(lambda);
    for (std::size_t i = 0; i < d; ++i) {
      ComplexMatrix op(d, d);  // sqrt(lambda_k) |v_k><i|
      for (std::size_t r = 0; r < d; ++r) op(r, i) = w * eig.vectors(r, k);
      kraus.push_back(std::move(op));
    }
  }
  return Channel(std::move(kraus), KrausFlag::trace_preserving);
}

inline ComplexMatrix zz_unitary(double gamma) {
  ComplexMatrix u(4, 4);
  u(0, 0) = std::polar(1.0, -gamma / 2.0);
  u(1, 1) = std::polar(1.0, gamma / 2.0);
  u(2, 2) = std::polar(1.0, gamma / 2.0);
  u(3, 3) = std::polar(1.0, -gamma / 2.0);
  return u;
}

/// Two-qubit coupling exp(-i gamma/2 Z(x)Z) as a channel.
inline Channel zz_coupling(double gamma) { return unitary_channel(zz_unitary(gamma)); }

inline ComplexMatrix swap_matrix(std::size_t dim) {
  ComplexMatrix s(dim * dim, dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) s(i * dim + j, j * dim + i) = 1.0;
  return s;
}

/// Unitary change of basis: rho -> U Phi(U^dag rho U) U^dag is conjugation of
/// every Kraus operator.
inline Channel conjugate_channel(const Channel& ch, const ComplexMatrix& u, double tol = 1e-10) {
  if (!u.is_square() || u.rows() != ch.dim_out() || ch.dim_in() != ch.dim_out()) {
    throw std::invalid_argument("conjugate_channel: dimension mismatch");
  }
  const ComplexMatrix residual = u.adjoint() * u - ComplexMatrix::identity(u.rows());
  if (residual.max_abs() > tol) {
    throw std::invalid_argument("conjugate_channel: matrix is not unitary");
  }
  const ComplexMatrix udag = u.adjoint();
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(ch.kraus().size());
  for (const auto& k : ch.kraus()) kraus.push_back(u * k * udag);
  return Channel(std::move(kraus), ch.flag());
}

/// Scale a CP map by c >= 0 (Kraus operators scaled by sqrt(c)).
inline Channel scale_channel(const Channel& ch, double c) {
  if (c < 0.0) throw std::invalid_argument("scale_channel: scale must be nonnegative");
  std::vector<ComplexMatrix> kraus = ch.kraus();
  const double w = std::sqrt(c);
  for (auto& k : kraus) k *= Complex(w, 0.0);
  return Channel(std::move(kraus), KrausFlag::general_cp);
}

namespace detail {

inline KrausFlag combined_flag(const Channel& a, const Channel& b) {
  if (a.flag() == KrausFlag::trace_preserving && b.flag() == KrausFlag::trace_preserving) {
    return KrausFlag::trace_preserving;
  }
  return KrausFlag::general_cp;
}

inline std::vector<ComplexMatrix> prune_zero_kraus(std::vector<ComplexMatrix> kraus) {
  std::vector<ComplexMatrix> out;
  out.reserve(kraus.size());
  for (auto& k : kraus)
    if (k.max_abs() != 0.0) out.push_back(std::move(k));
  if (out.empty()) out.push_back(std::move(kraus.front()));  // keep the zero map representable
  return out;
}

}  // namespace detail

/// outer after inner: rho -> outer(inner(rho)).
inline Channel compose_serial(const Channel& outer_ch, const Channel& inner_ch) {
  if (inner_ch.dim_out() != outer_ch.dim_in()) {
    throw std::invalid_argument("compose_serial: dimension mismatch between stages");
  }
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(outer_ch.kraus().size() * inner_ch.kraus().size());
  for (const auto& ko : outer_ch.kraus())
    for (const auto& ki : inner_ch.kraus()) kraus.push_back(ko * ki);
  return Channel(detail::prune_zero_kraus(std::move(kraus)),
                 detail::combined_flag(outer_ch, inner_ch));
}

/// Tensor product map A (x) B acting on C^{dA} (x) C^{dB}.
inline Channel compose_parallel(const Channel& a, const Channel& b) {
  std::vector<ComplexMatrix> kraus;
  kraus.reserve(a.kraus().size() * b.kraus().size());
  for (const auto& ka : a.kraus())
    for (const auto& kb : b.kraus()) kraus.push_back(kron(ka, kb));
  return Channel(detail::prune_zero_kraus(std::move(kraus)), detail::combined_flag(a, b));
}

/// Reshuffle a column-stacking superoperator into the Choi operator.
inline ComplexMatrix superop_to_choi(const ComplexMatrix& s, std::size_t dim_in,
                                     std::size_t dim_out) {
  if (s.rows() != dim_out * dim_out || s.cols() != dim_in * dim_in) {
    throw std::invalid_argument("superop_to_choi: shape mismatch");
  }
  ComplexMatrix j(dim_in * dim_out, dim_in * dim_out);
  for (std::size_t i = 0; i < dim_in; ++i)
    for (std::size_t jcol = 0; jcol < dim_in; ++jcol)
      for (std::size_t r = 0; r < dim_out; ++r)
        for (std::size_t sidx = 0; sidx < dim_out; ++sidx)
          j(i * dim_out + r, jcol * dim_out + sidx) = s(sidx * dim_out + r, jcol * dim_in + i);
  return j;
}

/// Kraus operators from a Choi operator via its eigendecomposition.
/// Eigenvalues in [-clamp_tol, 0) are clamped to zero; anything below
/// -reject_tol is rejected as non-CP.
inline std::vector<ComplexMatrix> kraus_from_choi(const ComplexMatrix& j, std::size_t dim_in,
                                                  std::size_t dim_out, double clamp_tol = 1e-10,
                                                  double reject_tol = 1e-8) {
  if (j.rows() != dim_in * dim_out || !j.is_square()) {
    throw std::invalid_argument("kraus_from_choi: Choi dimension mismatch");
  }
  EigResult eig = hermitian_eig(j);
  std::vector<ComplexMatrix> kraus;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    const double lambda = eig.values[k];
    if (lambda < -reject_tol) {
      throw std::runtime_error("kraus_from_choi: Choi eigenvalue " + std::to_string(lambda) +
                               " below tolerance; map is not CP");
    }
    if (lambda <= clamp_tol) continue;  // clamp tiny negatives and drop null directions
    const double w = std::sqrt(lambda);
    ComplexMatrix op(dim_out, dim_in);
    for (std::size_t i = 0; i < dim_in; ++i)
      for (std::size_t r = 0; r < dim_out; ++r) op(r, i) = w * eig.vectors(i * dim_out + r, k);
    kraus.push_back(std::move(op));
  }
  if (kraus.empty()) kraus.push_back(ComplexMatrix(dim_out, dim_in));
  return kraus;
}

inline Channel channel_from_choi(const ComplexMatrix& j, std::size_t dim_in, std::size_t dim_out,
                                 KrausFlag flag = KrausFlag::trace_preserving,
                                 double clamp_tol = 1e-10, double reject_tol = 1e-8) {
  return Channel(kraus_from_choi(j, dim_in, dim_out, clamp_tol, reject_tol), flag);
}

struct CptpReport {
  bool completely_positive = false;
  bool trace_preserving = false;
  double min_choi_eigenvalue = 0.0;
  double trace_residual = 0.0;
  bool ok() const { return completely_positive && trace_preserving; }
};

/// Diagnostic CPTP check on a Choi operator (CP <=> Choi PSD; TP <=> the
/// output-side partial trace of the Choi equals the input identity).
inline CptpReport check_cptp(const ComplexMatrix& choi, std::size_t dim_in, std::size_t dim_out,
                             double tol = 1e-8) {
  CptpReport report;
  report.min_choi_eigenvalue = min_hermitian_eigenvalue(choi);
  report.completely_positive = report.min_choi_eigenvalue >= -tol;
  const ComplexMatrix traced = partial_trace(choi, Factor::B, dim_in, dim_out);
  report.trace_residual = (traced - ComplexMatrix::identity(dim_in)).max_abs();
  report.trace_preserving = report.trace_residual <= tol;
  return report;
}

inline CptpReport check_cptp(const Channel& ch, double tol = 1e-8) {
  return check_cptp(ch.choi(), ch.dim_in(), ch.dim_out(), tol);
}

/// Finite collection of CP maps summing to a trace-preserving map.
class Instrument {
 public:
  Instrument(std::vector<std::string> labels, std::vector<Channel> elements, double tol = 1e-10)
      : labels_(std::move(labels)), elements_(std::move(elements)) {
    if (elements_.empty()) throw std::invalid_argument("Instrument: no outcome elements");
    if (labels_.size() != elements_.size()) {
      throw std::invalid_argument("Instrument: label/element count mismatch");
    }
    const std::size_t din = elements_.front().dim_in();
    const std::size_t dout = elements_.front().dim_out();
    ComplexMatrix total(din, din);
    for (const auto& e : elements_) {
      if (e.dim_in() != din || e.dim_out() != dout) {
        throw std::invalid_argument("Instrument: elements act on different spaces");
      }
      const ComplexMatrix gram = e.kraus_gram();
      if (hermitian_eig(gram).values.back() > 1.0 + tol) {
        throw std::invalid_argument("Instrument: element is trace-increasing");
      }
      total += gram;
    }
    const double residual = (total - ComplexMatrix::identity(din)).max_abs();
    if (residual > tol) {
      throw std::invalid_argument("Instrument: elements do not sum to a TP map (residual " +
                                  std::to_string(residual) + ")");
    }
  }

  std::size_t size() const { return elements_.size(); }
  std::size_t dim_in() const { return elements_.front().dim_in(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Channel>& elements() const { return elements_; }

  /// The total channel rho -> sum_i E_i(rho).
  Channel sum_channel() const {
    std::vector<ComplexMatrix> kraus;
    for (const auto& e : elements_)
      for (const auto& k : e.kraus()) kraus.push_back(k);
    return Channel(std::move(kraus), KrausFlag::trace_preserving);
  }

  std::vector<double> outcome_probabilities(const ComplexMatrix& rho) const {
    std::vector<double> probs;
    probs.reserve(elements_.size());
    for (const auto& e : elements_) probs.push_back(e.apply(rho).trace().real());
    return probs;
  }

 private:
  std::vector<std::string> labels_;
  std::vector<Channel> elements_;
};

/// Lueders instrument of a projective measurement: E_i(rho) = P_i rho P_i.
inline Instrument lueders_instrument(const std::vector<ComplexMatrix>& projections,
                                     double tol = 1e-10) {
  if (projections.empty()) throw std::invalid_argument("lueders_instrument: no projections");
  const std::size_t d = projections.front().rows();
  ComplexMatrix total(d, d);
  std::vector<std::string> labels;
  std::vector<Channel> elements;
  for (std::size_t i = 0; i < projections.size(); ++i) {
    const ComplexMatrix& p = projections[i];
    if (!p.is_square() || p.rows() != d) {
      throw std::invalid_argument("lueders_instrument: projection dimension mismatch");
    }
    if (!is_hermitian(p, tol) || (p * p - p).max_abs() > tol) {
      throw std::invalid_argument("lueders_instrument: operator " + std::to_string(i) +
                                  " is not an orthogonal projection");
    }
    total += p;
    labels.push_back("P" + std::to_string(i));
    elements.emplace_back(std::vector<ComplexMatrix>{p}, KrausFlag::trace_nonincreasing);
  }
  if ((total - ComplexMatrix::identity(d)).max_abs() > tol) {
    throw std::invalid_argument("lueders_instrument: projections do not resolve the identity");
  }
  return Instrument(std::move(labels), std::move(elements), tol);
}

}  // namespace qmix
