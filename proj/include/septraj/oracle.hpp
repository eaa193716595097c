// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <utility>

#include "septraj/statespace.hpp"
#include "septraj/trajectory.hpp"

// Closed-form solutions for the exchange Hamiltonian H = kappa V in rescaled
// time tau = kappa t. These are the ground truth for the integrator tests.
namespace septraj::oracle {

inline constexpr Real kOverlapTolerance = 1e-12;

/// Initial product |a0, b0> for the exchange model, with q = <a0|b0>.
class SwapScenario {
public:
  SwapScenario(Ket a0, Ket b0) : a0_(std::move(a0)), b0_(std::move(b0)) {
    if (a0_.size() != b0_.size() || a0_.size() < 1)
      throw InvalidArgument("SwapScenario: factors must have equal nonzero dimension");
    if (std::abs(a0_.norm() - 1.0) > 1e-9 || std::abs(b0_.norm() - 1.0) > 1e-9)
      throw InvalidArgument("SwapScenario: factors must be normalized");
    q_ = a0_.dot(b0_);
  }

  const Ket& a0() const { return a0_; }
  const Ket& b0() const { return b0_; }
  Complex q() const { return q_; }
  std::size_t dim() const { return static_cast<std::size_t>(a0_.size()); }

private:
  Ket a0_;
  Ket b0_;
  Complex q_;
};

/// cos(tau)|a0,b0> - i sin(tau)|b0,a0>
inline Ket analytic_se_swap(const SwapScenario& s, Real tau) {
  const Complex i(0.0, 1.0);
  return std::cos(tau) * tensor_product(s.a0(), s.b0()) -
         i * std::sin(tau) * tensor_product(s.b0(), s.a0());
}

/// a(tau) = cos(|q|tau) a0 - i (q*/|q|) sin(|q|tau) b0
/// b(tau) = cos(|q|tau) b0 - i (q/|q|)  sin(|q|tau) a0
/// For q = 0 the stationary pair (a0, b0) is returned.
inline std::pair<Ket, Ket> analytic_sse_swap(const SwapScenario& s, Real tau) {
  const Real mod = std::abs(s.q());
  if (mod == 0.0)
    return {s.a0(), s.b0()};
  const Complex i(0.0, 1.0);
  const Complex unit = s.q() / mod;
  const Real c = std::cos(mod * tau);
  const Real sn = std::sin(mod * tau);
  Ket a = c * s.a0() - i * std::conj(unit) * sn * s.b0();
  Ket b = c * s.b0() - i * unit * sn * s.a0();
  return {std::move(a), std::move(b)};
}

/// Reduced-swap energy E = |<a|b>|^2 (kappa = 1).
inline Real analytic_sse_energy(const SwapScenario& s) { return std::norm(s.q()); }

/// Largest Frobenius deviation of |a><a| + |b><b| from its initial value along
/// a separable bipartite trajectory.
inline Real conserved_C(const SwapScenario& s, const Trajectory& traj) {
  if (traj.kind != TrajectoryKind::product || traj.space.parties() != 2)
    throw InvalidArgument("conserved_C: bipartite separable trajectory required");
  const DenseOperator c0 = s.a0() * s.a0().adjoint() + s.b0() * s.b0().adjoint();
  Real worst = 0.0;
  for (const auto& st : traj.product) {
    const Ket& a = st.factors[0];
    const Ket& b = st.factors[1];
    const DenseOperator c = a * a.adjoint() + b * b.adjoint();
    worst = std::max(worst, (c - c0).norm());
  }
  return worst;
}

} // namespace septraj::oracle
