// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "septraj/dynamics.hpp"
#include "septraj/oracle.hpp"
#include "test_support.hpp"

using namespace septraj;
using namespace septraj::oracle;
using septraj::testing::Rng;

namespace {

const Ket up = basis_ket(2, 0);
const Ket down = basis_ket(2, 1);
const Ket plus = (up + down) / std::sqrt(2.0);

SwapScenario random_scenario(Rng& rng, std::size_t dim) {
  return SwapScenario(rng.ket(dim), rng.ket(dim));
}

/// Fourth-order central difference of f at tau.
template <typename F>
Ket central_derivative(F&& f, Real tau, Real h) {
  return (f(tau - 2 * h) - 8.0 * f(tau - h) + 8.0 * f(tau + h) - f(tau + 2 * h)) / (12.0 * h);
}

} // namespace

TEST(SwapScenario, StoresOverlap) {
  Rng rng(31);
  const auto s = random_scenario(rng, 3);
  EXPECT_LE(std::abs(s.q() - s.a0().dot(s.b0())), 1e-12);
  EXPECT_LE(std::abs(s.q()), 1.0 + 1e-12);
  EXPECT_THROW(SwapScenario(up, basis_ket(3, 0)), InvalidArgument);
  EXPECT_THROW(SwapScenario(up * 2.0, down), InvalidArgument);
}

TEST(AnalyticSE, InitialAndHalfPeriod) {
  const SwapScenario s(up, plus);
  const Ket psi0 = tensor_product(up, plus);
  EXPECT_LE((analytic_se_swap(s, 0.0) - psi0).norm(), 1e-15);
  // cos(pi) = -1: the state returns with a sign flip
  EXPECT_LE((analytic_se_swap(s, M_PI) + psi0).norm(), 1e-15);
  EXPECT_NEAR(fidelity_up_to_phase(analytic_se_swap(s, M_PI), psi0), 1.0, 1e-15);
}

TEST(AnalyticSE, UnitNormForRandomInputs) {
  Rng rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = random_scenario(rng, rng.index(2, 4));
    const Real tau = rng.uniform(-10.0, 10.0);
    EXPECT_NEAR(analytic_se_swap(s, tau).norm(), 1.0, 1e-12);
  }
}

TEST(AnalyticSE, SolvesSchrodingerEquation) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scenario(rng, 3);
    const DenseOperator v = build_swap(3);
    const Real tau = rng.uniform(0.0, 6.0);
    const auto f = [&](Real t) { return analytic_se_swap(s, t); };
    const Ket lhs = Complex(0.0, 1.0) * central_derivative(f, tau, 1e-3);
    EXPECT_LE((lhs - v * f(tau)).norm(), 1e-10);
  }
}

TEST(AnalyticSSE, InitialState) {
  Rng rng(34);
  const auto s = random_scenario(rng, 3);
  const auto [a, b] = analytic_sse_swap(s, 0.0);
  EXPECT_LE((a - s.a0()).norm(), 1e-15);
  EXPECT_LE((b - s.b0()).norm(), 1e-15);
}

TEST(AnalyticSSE, QuarterCycleSwapsFactors) {
  // q real and positive: at |q| tau = pi/2 the factors are exchanged up to -i
  const SwapScenario s(up, plus);
  const Real q = s.q().real();
  ASSERT_GT(q, 0.0);
  const auto [a, b] = analytic_sse_swap(s, M_PI / (2.0 * q));
  const Complex minus_i(0.0, -1.0);
  EXPECT_LE((a - minus_i * plus).norm(), 1e-15);
  EXPECT_LE((b - minus_i * up).norm(), 1e-15);
}

TEST(AnalyticSSE, StationaryForOrthogonalFactors) {
  const SwapScenario s(up, down);
  for (Real tau : {0.0, 1.0, 50.0}) {
    const auto [a, b] = analytic_sse_swap(s, tau);
    EXPECT_EQ(a, up);
    EXPECT_EQ(b, down);
  }
}

TEST(AnalyticSSE, FactorsStayNormalized) {
  Rng rng(35);
  for (int trial = 0; trial < 500; ++trial) {
    const auto s = random_scenario(rng, rng.index(2, 5));
    const auto [a, b] = analytic_sse_swap(s, rng.uniform(-20.0, 20.0));
    EXPECT_NEAR(a.norm(), 1.0, 1e-12);
    EXPECT_NEAR(b.norm(), 1.0, 1e-12);
  }
}

TEST(AnalyticSSE, EnergyIsOverlapSquared) {
  Rng rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scenario(rng, 3);
    const DenseOperator v = build_swap(3);
    Real lo = 1e9, hi = -1e9;
    for (int k = 0; k <= 50; ++k) {
      const auto [a, b] = analytic_sse_swap(s, 0.3 * k);
      const Real e = expectation(v, tensor_product(a, b)).real();
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    EXPECT_LE(hi - lo, 1e-10);
    EXPECT_NEAR(hi, analytic_sse_energy(s), 1e-10);
  }
}

// The closed form satisfies the raw coupled equations
//   i(a' + <b|b'> a) = H_b a,  i(b' + <a|a'> b) = H_a b,  H_b = |b><b|,
// once the free relative phase is fixed: both closed-form factors rotate with
// i<a|a'> = i<b|b'> = |q|^2, whose sum is 2E instead of E. Multiplying a by
// exp(i |q|^2 tau) restores the required sum; the projector dynamics (and so
// the von Neumann form) holds without any correction.
TEST(AnalyticSSE, SatisfiesCoupledEquationsByFiniteDifferences) {
  Rng rng(37);
  const Complex i(0.0, 1.0);
  const Real h = 1e-3;
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_scenario(rng, rng.index(2, 4));
    const Real e = std::norm(s.q());
    const Real tau = rng.uniform(0.0, 10.0);
    auto a_of = [&](Real t) { return Ket(std::polar(1.0, e * t) * analytic_sse_swap(s, t).first); };
    auto b_of = [&](Real t) { return analytic_sse_swap(s, t).second; };
    const Ket a = a_of(tau), b = b_of(tau);
    const Ket da = central_derivative(a_of, tau, h);
    const Ket db = central_derivative(b_of, tau, h);
    const Ket res_a = i * (da + b.dot(db) * a) - b * b.dot(a);
    const Ket res_b = i * (db + a.dot(da) * b) - a * a.dot(b);
    EXPECT_LE(res_a.norm(), 1e-10);
    EXPECT_LE(res_b.norm(), 1e-10);

    // von Neumann form on the uncorrected factors
    auto pa = [&](Real t) {
      const Ket x = analytic_sse_swap(s, t).first;
      return DenseOperator(x * x.adjoint());
    };
    const DenseOperator dpa =
        (pa(tau - 2 * h) - 8.0 * pa(tau - h) + 8.0 * pa(tau + h) - pa(tau + 2 * h)) / (12.0 * h);
    const DenseOperator hb = b * b.adjoint();
    const DenseOperator proj = pa(tau);
    EXPECT_LE((i * dpa - (hb * proj - proj * hb)).norm(), 1e-10);
  }
}

TEST(AnalyticSSE, RotationMatrixIsUnitaryOnGramMetric) {
  // c(tau) = gamma a0 + delta b0 with the (gamma, delta) propagation matrix;
  // its norm is sqrt(v^+ G v), G the Gram matrix of (a0, b0).
  Rng rng(38);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_scenario(rng, 3);
    const Real m = std::abs(s.q());
    Eigen::Matrix2cd gram;
    gram << 1.0, s.q(), std::conj(s.q()), 1.0;
    for (Real tau : {0.4, 1.7, 5.0}) {
      const Complex i(0.0, 1.0);
      const Complex off = -i * std::conj(s.q()) / m * std::sin(m * tau);
      const Complex off_b = -i * s.q() / m * std::sin(m * tau);
      const Eigen::Vector2cd va(std::cos(m * tau), off);   // a(tau) coefficients
      const Eigen::Vector2cd vb(off_b, std::cos(m * tau)); // b(tau) coefficients
      EXPECT_NEAR((va.adjoint() * gram * va)(0, 0).real(), 1.0, 1e-12);
      EXPECT_NEAR((vb.adjoint() * gram * vb)(0, 0).real(), 1.0, 1e-12);
      const auto [a, b] = analytic_sse_swap(s, tau);
      EXPECT_LE((a - (va[0] * s.a0() + va[1] * s.b0())).norm(), 1e-14);
      EXPECT_LE((b - (vb[0] * s.a0() + vb[1] * s.b0())).norm(), 1e-14);
    }
  }
}

TEST(ConservedC, AnalyticTrajectoryIsExact) {
  Rng rng(39);
  const auto s = random_scenario(rng, 3);
  Trajectory traj;
  traj.kind = TrajectoryKind::product;
  traj.space = TensorSpace({3, 3});
  traj.grid = TimeGrid(0.0, 10.0, 200);
  for (std::size_t k = 0; k <= 200; ++k) {
    const auto [a, b] = analytic_sse_swap(s, traj.grid.at(k));
    traj.product.push_back(ProductState{{a, b}});
  }
  EXPECT_LE(conserved_C(s, traj), 1e-12);
}

TEST(ConservedC, StationaryCaseIsZero) {
  const SwapScenario s(up, down);
  Trajectory traj;
  traj.kind = TrajectoryKind::product;
  traj.space = TensorSpace({2, 2});
  traj.grid = TimeGrid(0.0, 1.0, 4);
  for (std::size_t k = 0; k <= 4; ++k) {
    const auto [a, b] = analytic_sse_swap(s, traj.grid.at(k));
    traj.product.push_back(ProductState{{a, b}});
  }
  EXPECT_EQ(conserved_C(s, traj), 0.0);
}

TEST(ConservedC, NumericTrajectoryWithinBudget) {
  const SwapScenario s(up, plus);
  const Real period = 2.0 * M_PI / std::abs(s.q());
  const auto h = build_swap_hamiltonian(2, 1.0);
  const auto traj = evolve_sse_bipartite(h, up, plus, TimeGrid(0.0, period, 4000), {});
  EXPECT_LE(conserved_C(s, traj), 1e-8);
}

TEST(ConservedC, RejectsCompositeTrajectory) {
  const SwapScenario s(up, plus);
  Trajectory traj;
  EXPECT_THROW(conserved_C(s, traj), InvalidArgument);
}
