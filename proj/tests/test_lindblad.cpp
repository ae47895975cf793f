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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <qmix/channel.hpp>
#include <qmix/doeblin.hpp>
#include <qmix/lindblad.hpp>
#include <qmix/linalg.hpp>
#include <qmix/matrix.hpp>
#include <qmix/rng.hpp>

#include "support.hpp"

using namespace qmix;
using Catch::Approx;
using qmix::test::max_abs_diff;

namespace {

GKLSGenerator random_generator(std::size_t dim, std::size_t n_jumps, Rng& rng) {
  std::vector<ComplexMatrix> jumps;
  for (std::size_t k = 0; k < n_jumps; ++k) {
    ComplexMatrix l = random_gaussian_matrix(dim, dim, rng);
    l *= Complex(0.4, 0.0);
    jumps.push_back(l);
  }
  return GKLSGenerator(random_hermitian(dim, rng), jumps);
}

ComplexMatrix apply_superop(const ComplexMatrix& s, const ComplexMatrix& rho) {
  const std::size_t d = rho.rows();
  ComplexMatrix v(d * d, 1);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) v(j * d + i, 0) = rho(i, j);
  const ComplexMatrix w = s * v;
  ComplexMatrix out(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t i = 0; i < d; ++i) out(i, j) = w(j * d + i, 0);
  return out;
}

}  // namespace

TEST_CASE("generator construction and validation", "[lindblad]") {
  REQUIRE_THROWS_AS(GKLSGenerator(ComplexMatrix{{0.0, 1.0}, {0.0, 0.0}}, {}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(GKLSGenerator(ComplexMatrix::identity(2), {ComplexMatrix::identity(3)}),
                    std::invalid_argument);

  const GKLSGenerator dep = depolarizing_generator(2.0);
  REQUIRE(dep.dim() == 2);
  REQUIRE(dep.jumps.size() == 3);
  // Jump gram of the depolarizing family: 3 kappa / 4 identity.
  REQUIRE(max_abs_diff(dep.jump_gram(), 1.5 * ComplexMatrix::identity(2)) < 1e-12);

  const GKLSGenerator deph = dephasing_generator(1.2);
  REQUIRE(max_abs_diff(deph.jump_gram(), 0.6 * ComplexMatrix::identity(2)) < 1e-12);

  REQUIRE_THROWS_AS(depolarizing_generator(-1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(dephasing_generator(0.0), std::invalid_argument);
}

TEST_CASE("generator superoperator action", "[lindblad]") {
  // Zero generator.
  const GKLSGenerator zero(ComplexMatrix(2, 2), {});
  REQUIRE(generator_superop(zero).max_abs() == 0.0);

  // Pure Hamiltonian part: L(rho) = -i [H, rho].
  Rng rng(81);
  const ComplexMatrix h = random_hermitian(3, rng);
  const GKLSGenerator ham(h, {});
  const ComplexMatrix s = generator_superop(ham);
  for (int trial = 0; trial < 4; ++trial) {
    const ComplexMatrix rho = random_density(3, rng);
    const ComplexMatrix expected = Complex(0.0, -1.0) * (h * rho - rho * h);
    REQUIRE(max_abs_diff(apply_superop(s, rho), expected) < 1e-11);
  }

  // Full GKLS form against a direct evaluation.
  const GKLSGenerator gen = random_generator(2, 2, rng);
  const ComplexMatrix sg = generator_superop(gen);
  const ComplexMatrix gram = gen.jump_gram();
  for (int trial = 0; trial < 4; ++trial) {
    const ComplexMatrix rho = random_density(2, rng);
    ComplexMatrix expected =
        Complex(0.0, -1.0) * (gen.hamiltonian * rho - rho * gen.hamiltonian);
    for (const auto& l : gen.jumps) expected += l * rho * l.adjoint();
    expected -= 0.5 * (gram * rho + rho * gram);
    REQUIRE(max_abs_diff(apply_superop(sg, rho), expected) < 1e-11);
    // The generator annihilates the trace.
    REQUIRE(std::abs(apply_superop(sg, rho).trace()) < 1e-12);
  }
}

TEST_CASE("depolarizing generator spectrum", "[lindblad]") {
  const double kappa = 1.3;
  const ComplexMatrix s = generator_superop(depolarizing_generator(kappa));
  REQUIRE(is_hermitian(s, 1e-12));
  const auto values = hermitian_eig(s).values;
  REQUIRE(values[0] == Approx(-kappa).margin(1e-12));
  REQUIRE(values[1] == Approx(-kappa).margin(1e-12));
  REQUIRE(values[2] == Approx(-kappa).margin(1e-12));
  REQUIRE(values[3] == Approx(0.0).margin(1e-12));
}

TEST_CASE("semigroup of the depolarizing generator is depolarizing", "[lindblad]") {
  const double kappa = 0.8;
  const GKLSGenerator gen = depolarizing_generator(kappa);
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    const Channel st = semigroup(gen, t);
    const Channel closed = depolarizing(1.0 - std::exp(-kappa * t), 2);
    REQUIRE(max_abs_diff(st.choi(), closed.choi()) < 1e-10);
  }
}

TEST_CASE("semigroup of the dephasing generator damps coherences", "[lindblad]") {
  const double kappa = 1.1, t = 0.7;
  const Channel st = semigroup(dephasing_generator(kappa), t);
  const ComplexMatrix plus{{0.5, 0.5}, {0.5, 0.5}};
  const ComplexMatrix out = st.apply(plus);
  REQUIRE(out(0, 0).real() == Approx(0.5).margin(1e-12));
  REQUIRE(out(0, 1).real() == Approx(0.5 * std::exp(-kappa * t)).margin(1e-10));
}

TEST_CASE("hamiltonian-only semigroup is the matrix exponential unitary", "[lindblad]") {
  Rng rng(82);
  const ComplexMatrix h = random_hermitian(2, rng);
  const double t = 0.9;
  const Channel st = semigroup(GKLSGenerator(h, {}), t);
  const ComplexMatrix u = matrix_exp(Complex(0.0, -t) * h);
  REQUIRE(max_abs_diff(st.choi(), unitary_channel(u).choi()) < 1e-10);
}

TEST_CASE("semigroup property and trace preservation", "[lindblad]") {
  Rng rng(83);
  const GKLSGenerator gen = random_generator(2, 2, rng);
  const Channel s1 = semigroup(gen, 0.4);
  const Channel s2 = semigroup(gen, 0.7);
  const Channel s12 = semigroup(gen, 1.1);
  for (int trial = 0; trial < 5; ++trial) {
    const ComplexMatrix rho = random_density(2, rng);
    REQUIRE(max_abs_diff(s2.apply(s1.apply(rho)), s12.apply(rho)) < 1e-9);
    REQUIRE(std::abs(s12.apply(rho).trace().real() - 1.0) < 1e-10);
  }
  REQUIRE(check_cptp(s12).ok());

  REQUIRE(max_abs_diff(semigroup(gen, 0.0).choi(), identity_channel(2).choi()) < 1e-12);
  REQUIRE_THROWS_AS(semigroup(gen, -0.1), std::invalid_argument);
}

TEST_CASE("first order step is exactly trace preserving", "[lindblad]") {
  Rng rng(84);
  const GKLSGenerator gen = random_generator(2, 2, rng);
  const Channel step = first_order_step(gen, 0.05);
  REQUIRE(max_abs_diff(step.kraus_gram(), ComplexMatrix::identity(2)) < 1e-12);
  REQUIRE(check_cptp(step).ok());

  // Without jumps the step is exactly the unitary exponential.
  const ComplexMatrix h = random_hermitian(2, rng);
  const Channel pure = first_order_step(GKLSGenerator(h, {}), 0.3);
  const ComplexMatrix u = matrix_exp(Complex(0.0, -0.3) * h);
  REQUIRE(max_abs_diff(pure.choi(), unitary_channel(u).choi()) < 1e-11);
}

TEST_CASE("first order step converges quadratically per step", "[lindblad]") {
  Rng rng(85);
  const GKLSGenerator gen = random_generator(2, 1, rng);
  const auto error_at = [&](double dt) {
    return trace_norm(first_order_step(gen, dt).choi() - semigroup(gen, dt).choi());
  };
  const double e1 = error_at(0.08);
  const double e2 = error_at(0.04);
  REQUIRE(e1 / e2 == Approx(4.0).margin(1.0));
}

TEST_CASE("first order step rejects oversized steps", "[lindblad]") {
  // Jump gram is 3 kappa / 4 I; dt beyond 4 / (3 kappa) leaves no valid
  // no-jump Kraus weight.
  const GKLSGenerator gen = depolarizing_generator(4.0);
  REQUIRE_NOTHROW(first_order_step(gen, 0.3));
  REQUIRE_THROWS_AS(first_order_step(gen, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(first_order_step(gen, 0.0), std::invalid_argument);
}

TEST_CASE("exact-step sweep recovers the depolarizing gap", "[lindblad]") {
  const Channel seed = reset_channel(qmix::test::maximally_mixed(2));
  for (double kappa : {0.5, 1.0, 2.0}) {
    const GKLSGenerator gen = depolarizing_generator(kappa);
    const auto rows = limit_sweep(gen, seed, {0.2, 0.1, 0.05}, 1.0, StepMode::exact);
    for (const auto& row : rows) {
      REQUIRE(row.epsilon ==
              Approx(1.0 - std::exp(-kappa * row.dt)).margin(1e-9));
      REQUIRE(row.gamma == Approx(kappa).margin(1e-9));
      REQUIRE(row.embed_error < 1e-10);
      REQUIRE(row.gamma >= row.epsilon / row.dt - 1e-12);
    }
  }
}

TEST_CASE("exact-step sweep recovers the dephasing gap", "[lindblad]") {
  const Channel seed = dephasing(1.0, 2);
  const auto rows =
      limit_sweep(dephasing_generator(1.0), seed, {0.2, 0.1, 0.05}, 1.0, StepMode::exact);
  for (const auto& row : rows) {
    REQUIRE(row.gamma == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("first-order sweep shows first-order embedding error", "[lindblad]") {
  const Channel seed = reset_channel(qmix::test::maximally_mixed(2));
  const GKLSGenerator gen = depolarizing_generator(1.0);
  const auto rows =
      limit_sweep(gen, seed, {0.2, 0.1, 0.05, 0.025}, 1.0, StepMode::first_order);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    REQUIRE(row.gamma >= row.epsilon / row.dt - 1e-12);
    REQUIRE(row.embed_error > 0.0);
  }
  const double slope = embed_error_slope(rows);
  REQUIRE(slope >= 0.8);
  REQUIRE(slope <= 1.2);
}

TEST_CASE("limit sweep input validation", "[lindblad]") {
  const GKLSGenerator gen = depolarizing_generator(1.0);
  const Channel seed = reset_channel(qmix::test::maximally_mixed(2));
  REQUIRE_THROWS_AS(limit_sweep(gen, seed, {}, 1.0, StepMode::exact), std::invalid_argument);
  REQUIRE_THROWS_AS(limit_sweep(gen, seed, {0.0}, 1.0, StepMode::exact), std::invalid_argument);
  REQUIRE_THROWS_AS(limit_sweep(gen, seed, {2.0}, 1.0, StepMode::exact), std::invalid_argument);
}

TEST_CASE("embed error slope fits synthetic data", "[lindblad]") {
  std::vector<LimitSweepRow> linear, quad;
  for (double dt : {0.2, 0.1, 0.05, 0.025}) {
    LimitSweepRow r;
    r.dt = dt;
    r.embed_error = 3.0 * dt;
    linear.push_back(r);
    r.embed_error = 3.0 * dt * dt;
    quad.push_back(r);
  }
  REQUIRE(embed_error_slope(linear) == Approx(1.0).margin(1e-12));
  REQUIRE(embed_error_slope(quad) == Approx(2.0).margin(1e-12));
}
