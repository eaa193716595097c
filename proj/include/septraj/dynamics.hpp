// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "septraj/hamiltonians.hpp"
#include "septraj/statespace.hpp"
#include "septraj/trajectory.hpp"

namespace septraj {

inline constexpr Real kUnitNormTolerance = 1e-9;

/// Record suffix for party p: "a", "b" for two parties, otherwise 1-based.
inline std::string party_label(std::size_t p, std::size_t n_parties) {
  if (n_parties == 2)
    return p == 0 ? "a" : "b";
  return std::to_string(p + 1);
}

namespace detail {

inline void require_unit(const Ket& v, const std::string& what) {
  if (v.size() < 1)
    throw InvalidArgument(what + ": empty state");
  if (std::abs(v.norm() - 1.0) > kUnitNormTolerance)
    throw InvalidArgument(what + ": state is not normalized (norm = " +
                          std::to_string(v.norm()) + ")");
}

/// d/dtau of samples[k] on a uniform grid. Fourth-order stencils where five
/// points are available, second order otherwise.
template <typename Value>
Value grid_derivative(const std::vector<Value>& s, std::size_t k, Real h) {
  const std::size_t n = s.size();
  if (n < 2)
    throw InvalidArgument("grid_derivative: need at least two samples");
  if (n < 5) {
    if (n == 2)
      return (s[1] - s[0]) / h;
    if (k == 0)
      return (-3.0 * s[0] + 4.0 * s[1] - s[2]) / (2.0 * h);
    if (k == n - 1)
      return (3.0 * s[n - 1] - 4.0 * s[n - 2] + s[n - 3]) / (2.0 * h);
    return (s[k + 1] - s[k - 1]) / (2.0 * h);
  }
  if (k >= 2 && k + 2 < n)
    return (s[k - 2] - 8.0 * s[k - 1] + 8.0 * s[k + 1] - s[k + 2]) / (12.0 * h);
  if (k == 0)
    return (-25.0 * s[0] + 48.0 * s[1] - 36.0 * s[2] + 16.0 * s[3] - 3.0 * s[4]) /
           (12.0 * h);
  if (k == 1)
    return (-3.0 * s[0] - 10.0 * s[1] + 18.0 * s[2] - 6.0 * s[3] + s[4]) / (12.0 * h);
  if (k == n - 1)
    return (25.0 * s[n - 1] - 48.0 * s[n - 2] + 36.0 * s[n - 3] - 16.0 * s[n - 4] +
            3.0 * s[n - 5]) /
           (12.0 * h);
  // k == n - 2
  return (3.0 * s[n - 1] + 10.0 * s[n - 2] - 18.0 * s[n - 3] + 6.0 * s[n - 4] -
          s[n - 5]) /
         (12.0 * h);
}

/// Reduced Hamiltonians H_{others} for every party, built from normalized
/// copies of the other factors.
inline std::vector<DenseOperator> reduced_hamiltonians(const PartialReducer& reducer,
                                                       const std::vector<Ket>& factors) {
  std::vector<Ket> unit;
  unit.reserve(factors.size());
  for (const auto& f : factors)
    unit.push_back(f / f.norm());
  return reducer.reduce_all(unit);
}

/// Zero-phase separable flow: i dx_l/dtau = (H_{others} - E) x_l.
inline std::vector<Ket> separable_rate(const PartialReducer& reducer,
                                       const std::vector<Ket>& x) {
  const auto reduced = reduced_hamiltonians(reducer, x);
  std::vector<Ket> rate(x.size());
  const Complex minus_i(0.0, -1.0);
  for (std::size_t l = 0; l < x.size(); ++l) {
    const Ket hx = reduced[l] * x[l];
    // E from this party's own expectation keeps Re<x|rate> = 0 exactly.
    const Real e = x[l].dot(hx).real() / x[l].squaredNorm();
    rate[l] = minus_i * (hx - e * x[l]);
  }
  return rate;
}

inline std::vector<Ket> axpy(const std::vector<Ket>& x, Real h,
                             const std::vector<Ket>& k) {
  std::vector<Ket> out(x.size());
  for (std::size_t l = 0; l < x.size(); ++l)
    out[l] = x[l] + h * k[l];
  return out;
}

inline std::vector<Ket> rk4_separable_step(const PartialReducer& reducer,
                                           const std::vector<Ket>& x, Real dt) {
  const auto k1 = separable_rate(reducer, x);
  const auto k2 = separable_rate(reducer, axpy(x, 0.5 * dt, k1));
  const auto k3 = separable_rate(reducer, axpy(x, 0.5 * dt, k2));
  const auto k4 = separable_rate(reducer, axpy(x, dt, k3));
  std::vector<Ket> out(x.size());
  for (std::size_t l = 0; l < x.size(); ++l)
    out[l] = x[l] + (dt / 6.0) * (k1[l] + 2.0 * k2[l] + 2.0 * k3[l] + k4[l]);
  return out;
}

using SparseOperator = Eigen::SparseMatrix<Complex>;

/// Operators with at most this fraction of nonzero entries are applied in
/// sparse form by the linear integrator.
inline constexpr Real kSparseFillThreshold = 0.25;

template <typename Op>
Ket rk4_linear_step(const Op& h, const Ket& psi, Real dt) {
  const Complex minus_i(0.0, -1.0);
  const Ket k1 = minus_i * (h * psi);
  const Ket k2 = minus_i * (h * (psi + 0.5 * dt * k1));
  const Ket k3 = minus_i * (h * (psi + 0.5 * dt * k2));
  const Ket k4 = minus_i * (h * (psi + dt * k3));
  return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline DenseOperator projector(const Ket& v) { return v * v.adjoint(); }

/// Frobenius norm of i d(|a><a|)/dtau - [H_reduced, |a><a|] per party and
/// step, with the derivative from grid finite differences.
inline std::vector<std::vector<Real>> von_neumann_residuals(const PartialReducer& reducer,
                                                            const Trajectory& traj) {
  const std::size_t n = traj.product.size();
  const std::size_t n_parties = traj.space.parties();
  std::vector<std::vector<Real>> out(n_parties, std::vector<Real>(n, 0.0));
  if (n < 2)
    return out;
  const Real dt = traj.grid.step();
  const Complex i(0.0, 1.0);
  for (std::size_t party = 0; party < n_parties; ++party) {
    std::vector<DenseOperator> proj(n);
    for (std::size_t k = 0; k < n; ++k)
      proj[k] = projector(traj.product[k].factors[party]);
    for (std::size_t k = 0; k < n; ++k) {
      const DenseOperator hr = reduced_hamiltonians(reducer, traj.product[k].factors)[party];
      const DenseOperator lhs = i * grid_derivative(proj, k, dt);
      const DenseOperator rhs = hr * proj[k] - proj[k] * hr;
      out[party][k] = (lhs - rhs).norm();
    }
  }
  return out;
}

} // namespace detail

/// Schrodinger propagation of a composite state. `space` only labels the
/// party structure of the returned trajectory.
inline Trajectory evolve_se(const DenseOperator& h, const Ket& psi0,
                            const TimeGrid& grid, const IntegratorConfig& cfg,
                            const TensorSpace& space) {
  grid.validate();
  cfg.validate();
  require_hermitian(h, "evolve_se");
  if (h.rows() != psi0.size())
    throw InvalidArgument("evolve_se: state dimension does not match Hamiltonian");
  if (space.total() != static_cast<std::size_t>(psi0.size()))
    throw InvalidArgument("evolve_se: space does not match state dimension");
  detail::require_unit(psi0, "evolve_se");

  Trajectory traj;
  traj.grid = grid;
  traj.kind = TrajectoryKind::composite;
  traj.space = space;
  traj.gauge = Gauge::physical;
  traj.composite.reserve(grid.points());

  if (cfg.method == Method::spectral_exact) {
    const HermitianSpectrum spectrum(h);
    for (std::size_t k = 0; k < grid.points(); ++k)
      traj.composite.push_back(spectrum.propagate(psi0, grid.at(k) - grid.tau_start));
  } else {
    const Real dt = grid.step();
    const auto nnz = (h.array() != Complex(0.0)).count();
    const bool sparse = static_cast<Real>(nnz) <= detail::kSparseFillThreshold *
                                                      static_cast<Real>(h.size());
    const detail::SparseOperator hs = sparse ? h.sparseView() : detail::SparseOperator();
    Ket psi = psi0;
    traj.composite.push_back(psi);
    for (std::size_t k = 1; k < grid.points(); ++k) {
      psi = sparse ? detail::rk4_linear_step(hs, psi, dt) : detail::rk4_linear_step(h, psi, dt);
      if (!std::isfinite(psi.squaredNorm()))
        throw NumericalFailure("evolve_se: non-finite amplitude", k);
      if (cfg.renormalize_each_step)
        psi.normalize();
      traj.composite.push_back(psi);
    }
  }

  auto& norm = traj.records["norm"];
  auto& energy = traj.records["energy"];
  for (const auto& psi : traj.composite) {
    norm.push_back(psi.norm());
    energy.push_back(expectation(h, psi).real());
    traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(psi.norm() - 1.0));
  }
  traj.drift_flagged = traj.max_norm_drift > cfg.tolerance;
  return traj;
}

inline Trajectory evolve_se(const DenseOperator& h, const Ket& psi0,
                            const TimeGrid& grid, const IntegratorConfig& cfg) {
  return evolve_se(h, psi0, grid, cfg,
                   TensorSpace({static_cast<std::size_t>(psi0.size())}));
}

/// Separable (product-state) propagation for N parties. Integrates the
/// zero-phase form i dx_l/dtau = (H_{x_1..x_{l-1},x_{l+1}..x_N} - E) x_l with
/// fixed-step RK4, re-reducing H at every stage. For N = 1 this is the
/// Schrodinger equation with the energy phase removed.
inline Trajectory evolve_sse_multipartite(const HamiltonianDecomposition& decomp,
                                          const ProductState& a0s,
                                          const TimeGrid& grid,
                                          const IntegratorConfig& cfg) {
  grid.validate();
  cfg.validate();
  if (cfg.method != Method::rk4)
    throw InvalidArgument("evolve_sse: only the rk4 method applies to separable dynamics");
  const std::size_t n_parties = a0s.parties();
  if (n_parties < 1)
    throw InvalidArgument("evolve_sse: at least one party required");
  if (n_parties != decomp.space.parties())
    throw InvalidArgument("evolve_sse: initial state has " + std::to_string(n_parties) +
                          " factors but Hamiltonian has " +
                          std::to_string(decomp.space.parties()) + " parties");
  for (std::size_t p = 0; p < n_parties; ++p) {
    if (static_cast<std::size_t>(a0s.factors[p].size()) != decomp.space.dim(p))
      throw InvalidArgument("evolve_sse: factor " + std::to_string(p) +
                            " dimension does not match Hamiltonian");
    detail::require_unit(a0s.factors[p], "evolve_sse factor " + std::to_string(p));
  }
  const DenseOperator h = assemble(decomp);
  require_hermitian(h, "evolve_sse");

  const TensorSpace& space = decomp.space;
  const PartialReducer reducer(h, space);
  const Real dt = grid.step();

  Trajectory traj;
  traj.grid = grid;
  traj.kind = TrajectoryKind::product;
  traj.space = space;
  traj.gauge = cfg.gauge;
  traj.product.reserve(grid.points());

  std::vector<Ket> x = a0s.factors;
  traj.product.push_back(ProductState{x});
  for (std::size_t k = 1; k < grid.points(); ++k) {
    x = detail::rk4_separable_step(reducer, x, dt);
    for (const auto& f : x)
      if (!std::isfinite(f.squaredNorm()))
        throw NumericalFailure("evolve_sse: non-finite amplitude", k);
    if (cfg.renormalize_each_step)
      for (auto& f : x)
        f.normalize();
    traj.product.push_back(ProductState{x});
  }

  std::vector<std::vector<Real>*> norms(n_parties);
  for (std::size_t p = 0; p < n_parties; ++p)
    norms[p] = &traj.records["norm_" + party_label(p, n_parties)];
  auto& energy = traj.records["energy"];
  for (const auto& s : traj.product) {
    for (std::size_t p = 0; p < n_parties; ++p) {
      const Real n = s.factors[p].norm();
      norms[p]->push_back(n);
      traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(n - 1.0));
    }
    energy.push_back(expectation(h, tensor_product(s)).real());
  }
  traj.drift_flagged = traj.max_norm_drift > cfg.tolerance;

  auto residuals = detail::von_neumann_residuals(reducer, traj);
  for (std::size_t p = 0; p < n_parties; ++p)
    traj.records["vn_residual_" + party_label(p, n_parties)] = std::move(residuals[p]);

  // Phase bookkeeping: physical factor = exp(-i theta) * zero-phase factor
  // with theta_l = (1/N) * integral of E, so that the phase rates sum to E.
  traj.phases.assign(grid.points(), std::vector<Real>(n_parties, 0.0));
  Real integral = 0.0;
  for (std::size_t k = 1; k < grid.points(); ++k) {
    integral += 0.5 * dt * (energy[k - 1] + energy[k]);
    for (std::size_t p = 0; p < n_parties; ++p)
      traj.phases[k][p] = integral / static_cast<Real>(n_parties);
  }
  if (cfg.gauge == Gauge::physical)
    for (std::size_t k = 0; k < grid.points(); ++k)
      for (std::size_t p = 0; p < n_parties; ++p)
        traj.product[k].factors[p] *= std::polar(1.0, -traj.phases[k][p]);
  return traj;
}

/// Bipartite separable propagation; records norm_a, norm_b, energy and the
/// von Neumann residuals vn_residual_a, vn_residual_b.
inline Trajectory evolve_sse_bipartite(const HamiltonianDecomposition& decomp,
                                       const Ket& a0, const Ket& b0,
                                       const TimeGrid& grid,
                                       const IntegratorConfig& cfg) {
  if (decomp.space.parties() != 2)
    throw InvalidArgument("evolve_sse_bipartite: Hamiltonian must be bipartite");
  return evolve_sse_multipartite(decomp, ProductState{{a0, b0}}, grid, cfg);
}

/// Moves a separable trajectory into the zero-phase gauge by discrete parallel
/// transport: consecutive factors are rephased so <x_{k-1}|x_k> is real and
/// positive. The removed phases are kept in `phases`, and the record
/// "gauge_phi" holds theta_a - theta_b for bipartite input.
inline Trajectory gauge_fix(const Trajectory& traj,
                            const HamiltonianDecomposition& decomp) {
  if (traj.kind != TrajectoryKind::product)
    throw InvalidArgument("gauge_fix: separable trajectory required");
  if (traj.space != decomp.space)
    throw InvalidArgument("gauge_fix: trajectory and Hamiltonian spaces differ");
  const std::size_t n = traj.product.size();
  const std::size_t n_parties = traj.space.parties();

  Trajectory out = traj;
  out.gauge = Gauge::zero_phase;
  std::vector<std::vector<Real>> removed(n, std::vector<Real>(n_parties, 0.0));
  for (std::size_t p = 0; p < n_parties; ++p) {
    for (std::size_t k = 1; k < n; ++k) {
      const Ket& prev = out.product[k - 1].factors[p];
      // prev is already transported, so arg <x_{k-1}|a_k> is the full phase
      // between a_k and its zero-phase counterpart x_k.
      const Real arg = std::arg(prev.dot(traj.product[k].factors[p]));
      out.product[k].factors[p] = traj.product[k].factors[p] * std::polar(1.0, -arg);
      removed[k][p] = -arg;
    }
  }

  const bool compose = traj.gauge == Gauge::zero_phase && !traj.phases.empty();
  out.phases.assign(n, std::vector<Real>(n_parties, 0.0));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t p = 0; p < n_parties; ++p)
      out.phases[k][p] = removed[k][p] + (compose ? traj.phases[k][p] : 0.0);

  if (!out.records.contains("energy")) {
    const DenseOperator h = assemble(decomp);
    auto& e = out.records["energy"];
    for (const auto& s : out.product)
      e.push_back(expectation(h, tensor_product(s)).real());
  }
  if (n_parties == 2) {
    auto& phi = out.records["gauge_phi"];
    phi.clear();
    for (std::size_t k = 0; k < n; ++k)
      phi.push_back(out.phases[k][0] - out.phases[k][1]);
  }
  return out;
}

/// Inverse of gauge_fix: re-applies the recorded phases to a zero-phase
/// trajectory.
inline Trajectory restore_phases(const Trajectory& traj) {
  if (traj.kind != TrajectoryKind::product)
    throw InvalidArgument("restore_phases: separable trajectory required");
  if (traj.gauge != Gauge::zero_phase)
    throw InvalidArgument("restore_phases: trajectory is not in the zero-phase gauge");
  Trajectory out = traj;
  out.gauge = Gauge::physical;
  if (traj.phases.empty())
    return out;
  for (std::size_t k = 0; k < out.product.size(); ++k)
    for (std::size_t p = 0; p < out.space.parties(); ++p)
      out.product[k].factors[p] *= std::polar(1.0, -traj.phases[k][p]);
  return out;
}

} // namespace septraj
