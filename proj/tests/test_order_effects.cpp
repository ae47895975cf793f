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
#include <utility>
#include <vector>

#include <qmix/linalg.hpp>
#include <qmix/matrix.hpp>
#include <qmix/order_effects.hpp>
#include <qmix/rng.hpp>

#include "support.hpp"

using namespace qmix;
using Catch::Approx;
using qmix::test::max_abs_diff;

namespace {

constexpr double kPi = 3.141592653589793;

ComplexMatrix qubit_state(Complex x, Complex y) {
  const double n = std::sqrt(std::norm(x) + std::norm(y));
  return ComplexMatrix::column({x / n, y / n});
}

/// Deviation of the Halmos pair on psi = (x, y), written out by hand:
/// PQP = c^2 |0><0| and QPQ = w w^dag with w = (c^2, cs).
double halmos_deviation_oracle(double theta, Complex x, Complex y) {
  const double c = std::cos(theta), s = std::sin(theta);
  const Complex w = c * c * x + c * s * y;
  return c * c * std::norm(x) - std::norm(w);
}

}  // namespace

TEST_CASE("halmos block geometry", "[order]") {
  const HalmosBlock flat = halmos_block(0.0);
  REQUIRE(max_abs_diff(flat.p, flat.q) < 1e-14);

  const HalmosBlock perp = halmos_block(kPi / 2.0);
  REQUIRE(std::abs(perp.q(0, 0)) < 1e-14);
  REQUIRE(perp.q(1, 1).real() == Approx(1.0));

  for (double theta : {0.2, 0.7, 1.3}) {
    const HalmosBlock blk = halmos_block(theta);
    REQUIRE(max_abs_diff(blk.q * blk.q, blk.q) < 1e-13);
    REQUIRE(is_hermitian(blk.q, 1e-13));
    REQUIRE(blk.q.trace().real() == Approx(1.0).margin(1e-13));

    // Commutator norm is sin(2 theta) / 2 for this family.
    const ComplexMatrix comm = blk.p * blk.q - blk.q * blk.p;
    REQUIRE(operator_norm(comm) ==
            Approx(0.5 * std::abs(std::sin(2.0 * theta))).margin(1e-12));
  }

  REQUIRE_THROWS_AS(halmos_block(-0.1), std::invalid_argument);
  REQUIRE_THROWS_AS(halmos_block(2.0), std::invalid_argument);
}

TEST_CASE("principal angles recover the block parameter", "[order]") {
  for (double theta : {0.15, 0.6, 1.1}) {
    const HalmosBlock blk = halmos_block(theta);
    const auto angles = principal_angles(blk.p, blk.q);
    REQUIRE(angles.size() == 1);
    REQUIRE(angles[0] == Approx(theta).margin(1e-10));
  }

  const ComplexMatrix p{{1.0, 0.0}, {0.0, 0.0}};
  REQUIRE(principal_angles(p, p)[0] == Approx(0.0).margin(1e-10));
  const ComplexMatrix q{{0.0, 0.0}, {0.0, 1.0}};
  REQUIRE(principal_angles(p, q)[0] == Approx(kPi / 2.0).margin(1e-10));

  // A rank-2 / rank-1 pair on C^3 with a single designed angle.
  const double phi = 0.4;
  ComplexMatrix p2(3, 3);
  p2(0, 0) = 1.0;
  p2(1, 1) = 1.0;
  const ComplexMatrix axis =
      ComplexMatrix::column({Complex(std::cos(phi), 0.0), 0.0, Complex(std::sin(phi), 0.0)});
  const auto mixed = principal_angles(p2, outer(axis));
  REQUIRE(mixed.size() == 1);
  REQUIRE(mixed[0] == Approx(phi).margin(1e-10));

  REQUIRE_THROWS_AS(principal_angles(p, ComplexMatrix::identity(3)), std::invalid_argument);
  REQUIRE_THROWS_AS(principal_angles(p, ComplexMatrix{{0.5, 0.0}, {0.0, 0.5}}),
                    std::invalid_argument);
}

TEST_CASE("commutator functional closed forms", "[order]") {
  const HalmosBlock blk = halmos_block(kPi / 4.0);
  const ComplexMatrix circular = qubit_state(1.0, Complex(0.0, 1.0));
  REQUIRE(commutator_functional(blk.p, blk.q, circular) == Approx(0.5).margin(1e-12));

  // Real amplitudes see no order effect at first order.
  const ComplexMatrix real_state = qubit_state(0.8, 0.6);
  REQUIRE(commutator_functional(blk.p, blk.q, real_state) < 1e-14);

  const HalmosBlock blk6 = halmos_block(kPi / 6.0);
  REQUIRE(commutator_functional(blk6.p, blk6.q, circular) ==
          Approx(0.5 * std::sin(kPi / 3.0)).margin(1e-12));

  REQUIRE_THROWS_AS(commutator_functional(blk.p, blk.q, ComplexMatrix::column({1.0, 1.0})),
                    std::invalid_argument);
}

TEST_CASE("commutator functional is dilation invariant", "[order]") {
  Rng rng(51);
  const HalmosBlock blk = halmos_block(0.8);
  const ComplexMatrix psi = random_unit_vector(2, rng);
  const double base = commutator_functional(blk.p, blk.q, psi);
  for (std::size_t k : {2, 3}) {
    const ComplexMatrix anc = random_unit_vector(k, rng);
    ComplexMatrix joint(2 * k, 1);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < k; ++j) joint(i * k + j, 0) = psi(i, 0) * anc(j, 0);
    const ComplexMatrix pk = kron(blk.p, ComplexMatrix::identity(k));
    const ComplexMatrix qk = kron(blk.q, ComplexMatrix::identity(k));
    REQUIRE(commutator_functional(pk, qk, joint) == Approx(base).margin(1e-12));
  }
}

TEST_CASE("sequential deviation matches the hand-written oracle", "[order]") {
  Rng rng(52);
  for (int trial = 0; trial < 25; ++trial) {
    const double theta = 0.05 + 1.4 * rng.uniform();
    const HalmosBlock blk = halmos_block(theta);
    const Complex x(rng.gaussian(), rng.gaussian());
    const Complex y(rng.gaussian(), rng.gaussian());
    const ComplexMatrix psi = qubit_state(x, y);
    const double got = sequential_deviation(blk.p, blk.q, psi);
    const double want = halmos_deviation_oracle(theta, psi(0, 0), psi(1, 0));
    REQUIRE(got == Approx(want).margin(1e-12));
  }

  // Density-matrix input is linear in the state.
  const HalmosBlock blk = halmos_block(0.9);
  const ComplexMatrix psi1 = qubit_state(1.0, 0.5);
  const ComplexMatrix psi2 = qubit_state(Complex(0.2, 0.3), 1.0);
  const ComplexMatrix rho = 0.25 * outer(psi1) + 0.75 * outer(psi2);
  const double mixed = sequential_deviation(blk.p, blk.q, rho);
  const double split = 0.25 * sequential_deviation(blk.p, blk.q, psi1) +
                       0.75 * sequential_deviation(blk.p, blk.q, psi2);
  REQUIRE(mixed == Approx(split).margin(1e-12));

  // Coinciding projections never show an order effect.
  REQUIRE(sequential_deviation(blk.p, blk.p, psi1) == Approx(0.0).margin(1e-14));
}

TEST_CASE("ray distance ignores global phase", "[order]") {
  const ComplexMatrix v = qubit_state(1.0, Complex(0.0, 1.0));
  ComplexMatrix w = v;
  for (std::size_t i = 0; i < 2; ++i) w(i, 0) *= std::polar(1.0, 1.234);
  REQUIRE(ray_distance(v, w) == Approx(0.0).margin(1e-7));

  const ComplexMatrix e0 = qubit_state(1.0, 0.0);
  const ComplexMatrix e1 = qubit_state(0.0, 1.0);
  REQUIRE(ray_distance(e0, e1) == Approx(kPi / 2.0).margin(1e-12));
}

TEST_CASE("equality window scan attains the tight bound", "[order]") {
  for (double theta : {0.3, kPi / 4.0, 1.2}) {
    const EqualityScan scan = equality_window_scan(theta, 1024, 7);
    REQUIRE(scan.max_value ==
            Approx(0.5 * std::abs(std::sin(2.0 * theta))).margin(1e-6));
    const ComplexMatrix plus_i = qubit_state(1.0, Complex(0.0, 1.0));
    const ComplexMatrix minus_i = qubit_state(1.0, Complex(0.0, -1.0));
    const double err =
        std::min(ray_distance(scan.argmax, plus_i), ray_distance(scan.argmax, minus_i));
    REQUIRE(err < 1e-3);
  }

  // Commuting endpoint: the functional vanishes identically.
  REQUIRE(equality_window_scan(0.0, 256, 3).max_value < 1e-12);

  REQUIRE_THROWS_AS(equality_window_scan(0.5, 50, 1), std::invalid_argument);
}

TEST_CASE("residual norm is controlled by the commutator", "[order]") {
  for (double theta : {0.1, 0.5, 1.0, 1.5}) {
    const HalmosBlock blk = halmos_block(theta);
    const OrderResidual res = order_residual(blk.p, blk.q);
    REQUIRE(res.bound_holds);
    REQUIRE(res.residual_norm <= 2.0 * res.commutator_norm + 1e-10);
    REQUIRE(max_abs_diff(res.residual, blk.p * blk.q * blk.p - blk.q * blk.p * blk.q) == 0.0);
  }

  // Commuting pair: both sides vanish.
  const ComplexMatrix p{{1.0, 0.0}, {0.0, 0.0}};
  const OrderResidual comm = order_residual(p, p);
  REQUIRE(comm.residual_norm < 1e-14);
  REQUIRE(comm.commutator_norm < 1e-14);
  REQUIRE(comm.bound_holds);

  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix a = random_projection(4, 1 + trial % 3, rng);
    const ComplexMatrix b = random_projection(4, 1 + (trial / 3) % 3, rng);
    REQUIRE(order_residual(a, b).bound_holds);
  }

  REQUIRE_THROWS_AS(order_residual(p, ComplexMatrix{{0.5, 0.0}, {0.0, 0.5}}),
                    std::invalid_argument);
}

TEST_CASE("split bound separates local and nonlocal deviations", "[order]") {
  Rng rng(54);

  // Uncoupled, commuting locals: everything vanishes.
  const ComplexMatrix pa = kron(bloch_projection(0.7), ComplexMatrix::identity(2));
  const SplitBound trivial = split_bound_check({{pa, pa}}, {pa, pa},
                                               random_density(4, rng));
  REQUIRE(trivial.holds);
  REQUIRE(std::abs(trivial.delta_ab) < 1e-13);

  // With no local deviation the total equals the nonlocal term.
  const ComplexMatrix qb = kron(ComplexMatrix::identity(2), bloch_projection(1.1));
  const ComplexMatrix u = zz_unitary(0.8);
  const ComplexMatrix coupled = u.adjoint() * qb * u;
  const ComplexMatrix rho = random_density(4, rng);
  const SplitBound zz = split_bound_check({{pa, pa}}, {pa, coupled}, rho);
  REQUIRE(zz.holds);
  REQUIRE(std::abs(zz.delta_loc) < 1e-13);
  REQUIRE(zz.delta_ab == Approx(zz.delta_nonloc).margin(1e-13));

  for (int trial = 0; trial < 40; ++trial) {
    const ComplexMatrix p1 = random_projection(4, 1 + trial % 2, rng);
    const ComplexMatrix q1 = random_projection(4, 1 + (trial / 2) % 2, rng);
    const ComplexMatrix p2 = random_projection(4, 2, rng);
    const ComplexMatrix q2 = random_projection(4, 1, rng);
    const SplitBound sb =
        split_bound_check({{p1, q1}, {q1, p2}}, {p2, q2}, random_density(4, rng));
    REQUIRE(sb.holds);
  }
}

TEST_CASE("bloch projections are rank-one", "[order]") {
  for (double polar : {0.0, 0.5, 1.7, 3.0}) {
    const ComplexMatrix p = bloch_projection(polar);
    REQUIRE(max_abs_diff(p * p, p) < 1e-14);
    REQUIRE(p.trace().real() == Approx(1.0).margin(1e-14));
    REQUIRE(is_hermitian(p, 1e-14));
  }
}

TEST_CASE("zz order sweep vanishes without coupling and grows with it", "[order]") {
  const ComplexMatrix psi0 =
      ComplexMatrix::column({Complex(0.5, 0.0), 0.5, 0.5, 0.5});
  const std::vector<double> grid{0.0, 0.3, 0.6, 0.9, 1.2, kPi / 2.0};
  const auto rows = zz_order_sweep(grid, 8, psi0, 1);
  REQUIRE(rows.size() == grid.size());

  REQUIRE(std::abs(rows[0].mean) <= 1e-14);
  REQUIRE(std::abs(rows[0].min) <= 1e-14);
  REQUIRE(std::abs(rows[0].max) <= 1e-14);

  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].mean >= rows[k - 1].mean - 1e-12);
    REQUIRE(rows[k].min <= rows[k].mean);
    REQUIRE(rows[k].mean <= rows[k].max);
  }
  REQUIRE(rows.back().mean > 0.01);

  // Deterministic in every argument.
  const auto rerun = zz_order_sweep(grid, 8, psi0, 1);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(rows[k].mean == rerun[k].mean);
    REQUIRE(rows[k].min == rerun[k].min);
    REQUIRE(rows[k].max == rerun[k].max);
  }

  REQUIRE_THROWS_AS(zz_order_sweep({}, 8, psi0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(zz_order_sweep({0.1}, 0, psi0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(zz_order_sweep({2.0}, 8, psi0, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(zz_order_sweep({0.1}, 8, ComplexMatrix::column({1.0, 1.0}), 1),
                    std::invalid_argument);
}
