// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "septraj/dynamics.hpp"
#include "septraj/hamiltonians.hpp"
#include "septraj/statespace.hpp"
#include "septraj/trajectory.hpp"

namespace septraj {

/// lambda_minus below this certifies a product state at that instant.
inline constexpr Real kSeparableLambdaThreshold = 1e-7;

// ---------------------------------------------------------------------------
// Schmidt decomposition

struct SchmidtResult {
  Eigen::VectorXd coefficients; ///< descending
  DenseOperator left;           ///< columns are orthonormal kets of party A
  DenseOperator right;          ///< columns are orthonormal kets of party B

  Real lambda_plus() const { return coefficients.size() > 0 ? coefficients[0] : 0.0; }
  Real lambda_minus() const {
    return coefficients.size() > 1 ? coefficients[1] : 0.0;
  }

  Ket reconstruct() const {
    Ket out = Ket::Zero(left.rows() * right.rows());
    for (Eigen::Index k = 0; k < coefficients.size(); ++k)
      out += coefficients[k] * tensor_product(Ket(left.col(k)), Ket(right.col(k)));
    return out;
  }
};

inline SchmidtResult schmidt_coefficients(const Ket& psi, const TensorSpace& space) {
  if (space.parties() != 2)
    throw InvalidArgument("schmidt_coefficients: bipartite space required");
  if (static_cast<std::size_t>(psi.size()) != space.total())
    throw InvalidArgument("schmidt_coefficients: state dimension does not match space");
  const auto da = static_cast<Eigen::Index>(space.dim(0));
  const auto db = static_cast<Eigen::Index>(space.dim(1));
  DenseOperator m(da, db);
  for (Eigen::Index i = 0; i < da; ++i)
    for (Eigen::Index j = 0; j < db; ++j)
      m(i, j) = psi[i * db + j];
  Eigen::JacobiSVD<DenseOperator> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SchmidtResult r;
  r.coefficients = svd.singularValues();
  r.left = svd.matrixU();
  // psi = sum_k s_k u_k v_k^T, so the B-side kets are conj(V) columns.
  r.right = svd.matrixV().conjugate();
  return r;
}

/// lambda_+- = sqrt[(1 +- sqrt(1 - sin^2(2 tau)(1 - |q|^2)^2)) / 2] for the
/// exchange-model Schrodinger solution. lambda_- is evaluated in the
/// cancellation-free form x / (2 (1 + sqrt(1 - x))).
inline std::pair<Real, Real> analytic_schmidt_swap(Complex q, Real tau) {
  const Real mod2 = std::norm(q);
  if (std::sqrt(mod2) > 1.0 + 1e-12)
    throw InvalidArgument("analytic_schmidt_swap: |q| must not exceed 1");
  const Real s = std::sin(2.0 * tau);
  const Real g = std::max(0.0, 1.0 - mod2);
  const Real x = std::min(1.0, s * s * g * g);
  const Real root = std::sqrt(1.0 - x);
  const Real minus = std::sqrt(x / (2.0 * (1.0 + root)));
  const Real plus = std::sqrt((1.0 + root) / 2.0);
  return {plus, minus};
}

// ---------------------------------------------------------------------------
// Local coordinates

using BlochVector = std::array<Real, 3>;

inline BlochVector bloch_vector(const DenseOperator& rho) {
  if (rho.rows() != 2 || rho.cols() != 2)
    throw InvalidArgument("bloch_vector: qubit density matrix required");
  return {(rho * pauli::x()).trace().real(), (rho * pauli::y()).trace().real(),
          (rho * pauli::z()).trace().real()};
}

namespace detail {

/// Reduced state of `party` at step k: projector of the factor for separable
/// trajectories, partial trace for composite ones.
inline DenseOperator local_state(const Trajectory& traj, std::size_t k,
                                 std::size_t party) {
  if (traj.kind == TrajectoryKind::product) {
    const Ket& f = traj.product.at(k).factors.at(party);
    return f * f.adjoint();
  }
  return reduced_density(traj.composite.at(k), party, traj.space);
}

} // namespace detail

inline std::vector<BlochVector> bloch_coords(const Trajectory& traj, std::size_t party) {
  if (party >= traj.space.parties())
    throw InvalidArgument("bloch_coords: party index out of range");
  if (traj.space.dim(party) != 2)
    throw InvalidArgument("bloch_coords: party dimension must be 2");
  std::vector<BlochVector> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    out.push_back(bloch_vector(detail::local_state(traj, k, party)));
  return out;
}

using PhasePoint = std::array<Real, 2>;

/// (Re <c>, Im <c>) for a mode truncated to dim(rho) - 1 photons.
inline PhasePoint phase_space_point(const DenseOperator& rho) {
  const Complex m = (rho * build_annihilation(static_cast<std::size_t>(rho.rows()) - 1)).trace();
  return {m.real(), m.imag()};
}

inline std::vector<PhasePoint> phase_space_coords(const Trajectory& traj,
                                                  std::size_t party,
                                                  const std::vector<bool>& bosonic) {
  if (party >= traj.space.parties())
    throw InvalidArgument("phase_space_coords: party index out of range");
  if (party >= bosonic.size() || !bosonic[party] || traj.space.dim(party) < 2)
    throw InvalidArgument("phase_space_coords: party is not a bosonic mode");
  std::vector<PhasePoint> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k)
    out.push_back(phase_space_point(detail::local_state(traj, k, party)));
  return out;
}

// ---------------------------------------------------------------------------
// Lagrangian and action

struct ActionResult {
  Real action = 0.0;
  std::vector<Real> lagrangian;
};

/// L = (i/2)(<psi|psi'> - <psi'|psi>) - <psi|H|psi> = -Im<psi|psi'> - <H>, with
/// psi' from the equations of motion. Separable trajectories use the
/// physical-gauge rates da_l/dtau = -i (H_{others} - E + E/N) a_l, whose phase
/// rates sum to E; L is independent of how the stored factors are phased.
inline std::vector<Real> lagrangian_values(const Trajectory& traj,
                                           const HamiltonianDecomposition& decomp) {
  const DenseOperator h = assemble(decomp);
  std::vector<Real> out;
  out.reserve(traj.size());
  const Complex minus_i(0.0, -1.0);
  if (traj.kind == TrajectoryKind::composite) {
    for (const auto& psi : traj.composite) {
      const Ket hpsi = h * psi;
      const Ket rate = minus_i * hpsi;
      out.push_back(-psi.dot(rate).imag() - psi.dot(hpsi).real());
    }
    return out;
  }
  if (traj.space != decomp.space)
    throw InvalidArgument("lagrangian_values: trajectory and Hamiltonian spaces differ");
  const std::size_t n = traj.space.parties();
  const PartialReducer reducer(h, traj.space);
  for (const auto& s : traj.product) {
    const auto reduced = detail::reduced_hamiltonians(reducer, s.factors);
    const Ket psi = tensor_product(s);
    const Real e = expectation(h, psi).real();
    std::vector<Real> sq(n);
    for (std::size_t l = 0; l < n; ++l)
      sq[l] = s.factors[l].squaredNorm();
    Complex overlap_rate{};
    for (std::size_t l = 0; l < n; ++l) {
      const Ket& a = s.factors[l];
      // reduced[l] was built from unit factors; rescale to the stored norms.
      Real others = 1.0;
      for (std::size_t m = 0; m < n; ++m)
        if (m != l)
          others *= sq[m];
      const Real e_unit = e / (sq[l] * others);
      const Ket rate = minus_i * (reduced[l] * a - (e_unit - e_unit / static_cast<Real>(n)) * a);
      overlap_rate += a.dot(rate) * others;
    }
    out.push_back(-overlap_rate.imag() - e);
  }
  return out;
}

inline ActionResult action(const Trajectory& traj, const HamiltonianDecomposition& decomp) {
  if (traj.size() < 2)
    throw InvalidArgument("action: trajectory needs at least two points");
  ActionResult r;
  r.lagrangian = lagrangian_values(traj, decomp);
  const Real h = traj.grid.step();
  for (std::size_t k = 1; k < r.lagrangian.size(); ++k)
    r.action += 0.5 * h * (r.lagrangian[k - 1] + r.lagrangian[k]);
  return r;
}

// ---------------------------------------------------------------------------
// Separability eigenvalue equations

struct SeeSolution {
  Ket a;
  Ket b;
  Real eigenvalue = 0.0;
  Real residual = std::numeric_limits<Real>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

/// Eigenvector of `h` closest to `current`: projects onto the eigenspace with
/// the largest overlap. Ties go to the lowest eigenvalue (eigenvalues come
/// sorted ascending, so the first maximal cluster wins).
inline Ket closest_eigenvector(const DenseOperator& h, const Ket& current) {
  const HermitianSpectrum spec(h);
  const auto& vals = spec.values();
  const auto& vecs = spec.vectors();
  const Real scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  const Real cluster_tol = 1e-10 * scale;

  Ket best;
  Real best_weight = -1.0;
  Eigen::Index start = 0;
  while (start < vals.size()) {
    Eigen::Index end = start + 1;
    while (end < vals.size() && vals[end] - vals[end - 1] <= cluster_tol)
      ++end;
    const DenseOperator basis = vecs.middleCols(start, end - start);
    const Ket proj = basis * (basis.adjoint() * current);
    const Real w = proj.norm();
    if (w > best_weight + 1e-12) {
      best_weight = w;
      best = w > 0.0 ? Ket(proj / w) : Ket(basis.col(0));
    }
    start = end;
  }
  return best;
}

} // namespace detail

/// Alternating solution of H_b|a> = E|a>, H_a|b> = E|b>: fix b and pick the
/// eigenvector of H_b closest to a, then the same with roles swapped, until
/// both residuals drop to `tol`. Non-convergence is reported, not thrown.
inline SeeSolution see_solve(const HamiltonianDecomposition& decomp, const Ket& a_init,
                             const Ket& b_init, std::size_t max_iters = 200,
                             Real tol = 1e-12) {
  if (decomp.space.parties() != 2)
    throw InvalidArgument("see_solve: bipartite Hamiltonian required");
  if (static_cast<std::size_t>(a_init.size()) != decomp.space.dim(0) ||
      static_cast<std::size_t>(b_init.size()) != decomp.space.dim(1))
    throw InvalidArgument("see_solve: seed dimensions do not match Hamiltonian");
  const DenseOperator h = assemble(decomp);
  require_hermitian(h, "see_solve");
  const TensorSpace& space = decomp.space;

  Ket a = normalized(a_init);
  Ket b = normalized(b_init);
  SeeSolution best;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    a = detail::closest_eigenvector(partial_reduce(h, b, 0, space), a);
    b = detail::closest_eigenvector(partial_reduce(h, a, 1, space), b);
    const Real e = expectation(h, tensor_product(a, b)).real();
    const DenseOperator hb = partial_reduce(h, b, 0, space);
    const DenseOperator ha = partial_reduce(h, a, 1, space);
    const Real res = std::max((hb * a - e * a).norm(), (ha * b - e * b).norm());
    if (res < best.residual) {
      best.a = a;
      best.b = b;
      best.eigenvalue = e;
      best.residual = res;
    }
    best.iterations = it;
    if (res <= tol) {
      best.converged = true;
      break;
    }
  }
  return best;
}

/// Runs see_solve from every seed and keeps converged solutions with distinct
/// eigenvalue or distinct product vector, sorted by eigenvalue.
inline std::vector<SeeSolution>
see_solve_multistart(const HamiltonianDecomposition& decomp,
                     const std::vector<std::pair<Ket, Ket>>& seeds,
                     std::size_t max_iters = 200, Real tol = 1e-12) {
  std::vector<SeeSolution> out;
  for (const auto& [a, b] : seeds) {
    SeeSolution s = see_solve(decomp, a, b, max_iters, tol);
    if (!s.converged)
      continue;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const SeeSolution& o) {
      return std::abs(o.eigenvalue - s.eigenvalue) <= 1e-9 &&
             fidelity_up_to_phase(tensor_product(o.a, o.b), tensor_product(s.a, s.b)) >
                 1.0 - 1e-9;
    });
    if (!dup)
      out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const SeeSolution& x, const SeeSolution& y) {
    return x.eigenvalue < y.eigenvalue;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Recurrence and comparison

inline constexpr Real kRecurrenceThreshold = 1.0 - 1e-4;

/// Fidelity of each step to the initial state (up to phase). Product
/// trajectories use the product of per-factor overlaps.
inline std::vector<Real> fidelity_to_initial(const Trajectory& traj) {
  std::vector<Real> f;
  f.reserve(traj.size());
  if (traj.kind == TrajectoryKind::composite) {
    for (const auto& psi : traj.composite)
      f.push_back(fidelity_up_to_phase(traj.composite.front(), psi));
  } else {
    for (const auto& s : traj.product)
      f.push_back(fidelity_up_to_phase(traj.product.front(), s));
  }
  return f;
}

/// First return time: the first local maximum of `fidelity` reaching
/// kRecurrenceThreshold after the signal has dropped below it, refined by a
/// parabola through the three samples around the peak. Empty if the signal
/// never leaves or never returns within the grid.
inline std::optional<Real> estimate_recurrence(const std::vector<Real>& fidelity,
                                               const TimeGrid& grid) {
  const std::size_t n = fidelity.size();
  std::size_t k = 0;
  while (k < n && fidelity[k] >= kRecurrenceThreshold)
    ++k;
  if (k == n)
    return std::nullopt;
  for (; k + 1 < n; ++k) {
    if (k == 0 || fidelity[k] < kRecurrenceThreshold)
      continue;
    if (fidelity[k] >= fidelity[k - 1] && fidelity[k] >= fidelity[k + 1]) {
      const Real fm = fidelity[k - 1], f0 = fidelity[k], fp = fidelity[k + 1];
      const Real denom = fm - 2.0 * f0 + fp;
      const Real shift = denom != 0.0 ? 0.5 * (fm - fp) / denom : 0.0;
      return grid.at(k) + std::clamp(shift, -0.5, 0.5) * grid.step() - grid.tau_start;
    }
  }
  return std::nullopt;
}

struct ComparisonReport {
  std::vector<Real> energy_delta;
  /// Frobenius distance between the SE reduced state and the SSE factor
  /// projector, per party and step (for qubits this is |r_SE - r_SSE| / sqrt 2).
  std::vector<std::vector<Real>> local_state_delta;
  Real max_observable_delta = 0.0;
  std::optional<Real> se_period;
  std::optional<Real> sse_period;
  std::optional<Real> period_ratio; ///< sse_period / se_period
  std::vector<Real> lambda_minus_se;
  Real max_lambda_minus_se = 0.0;
  Real max_lambda_minus_sse = 0.0;
  Real action_se = 0.0;
  Real action_sse = 0.0;
};

inline ComparisonReport compare_trajectories(const Trajectory& se, const Trajectory& sse,
                                             const HamiltonianDecomposition& decomp) {
  if (se.kind != TrajectoryKind::composite || sse.kind != TrajectoryKind::product)
    throw InvalidArgument("compare_trajectories: expected an SE and an SSE trajectory");
  if (!(se.grid == sse.grid) || se.size() != sse.size())
    throw InvalidArgument("compare_trajectories: trajectories use different grids");
  if (se.space != sse.space || sse.space.parties() != 2)
    throw InvalidArgument("compare_trajectories: bipartite trajectories on one space required");
  if (fidelity_up_to_phase(se.state(0), sse.state(0)) < 1.0 - 1e-12)
    throw InvalidArgument("compare_trajectories: initial states differ");

  const DenseOperator h = assemble(decomp);
  ComparisonReport r;
  const std::size_t n = se.size();
  r.local_state_delta.assign(2, std::vector<Real>(n, 0.0));
  r.energy_delta.resize(n);
  r.lambda_minus_se.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Ket psi_se = se.composite[k];
    const Ket psi_sse = sse.state(k);
    r.energy_delta[k] =
        std::abs(expectation(h, psi_se).real() - expectation(h, psi_sse).real());
    r.max_observable_delta = std::max(r.max_observable_delta, r.energy_delta[k]);
    for (std::size_t p = 0; p < 2; ++p) {
      const Real d = (detail::local_state(se, k, p) - detail::local_state(sse, k, p)).norm();
      r.local_state_delta[p][k] = d;
      r.max_observable_delta = std::max(r.max_observable_delta, d);
    }
    r.lambda_minus_se[k] = schmidt_coefficients(psi_se, se.space).lambda_minus();
    r.max_lambda_minus_se = std::max(r.max_lambda_minus_se, r.lambda_minus_se[k]);
    r.max_lambda_minus_sse = std::max(
        r.max_lambda_minus_sse, schmidt_coefficients(psi_sse, sse.space).lambda_minus());
  }
  r.se_period = estimate_recurrence(fidelity_to_initial(se), se.grid);
  r.sse_period = estimate_recurrence(fidelity_to_initial(sse), sse.grid);
  if (r.se_period && r.sse_period)
    r.period_ratio = *r.sse_period / *r.se_period;
  r.action_se = action(se, decomp).action;
  r.action_sse = action(sse, decomp).action;
  return r;
}

} // namespace septraj
