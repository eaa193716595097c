// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Eigenvalues>

#include "septraj/statespace.hpp"

namespace septraj {

/// H = sum_n (1 x ... x H_n x ... x 1) + H_int
struct HamiltonianDecomposition {
  std::vector<DenseOperator> local_parts;
  DenseOperator interaction;
  TensorSpace space;

  std::size_t parties() const { return space.parties(); }
};

/// Eigen-decomposition of a Hermitian operator; the basis of every propagator
/// in the library.
class HermitianSpectrum {
public:
  explicit HermitianSpectrum(const DenseOperator& h) {
    require_hermitian(h, "HermitianSpectrum");
    // Solve on the exactly-Hermitian part so the eigenbasis is unitary.
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(
        DenseOperator(0.5 * (h + h.adjoint())));
    if (es.info() != Eigen::Success)
      throw std::runtime_error("HermitianSpectrum: eigensolver failed");
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  const Eigen::VectorXd& values() const { return values_; }
  const DenseOperator& vectors() const { return vectors_; }

  /// exp(-i H t)
  DenseOperator propagator(Real t) const {
    Eigen::VectorXcd phases(values_.size());
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      phases[k] = std::polar(1.0, -values_[k] * t);
    return vectors_ * phases.asDiagonal() * vectors_.adjoint();
  }

  Ket propagate(const Ket& psi0, Real t) const {
    Eigen::VectorXcd c = vectors_.adjoint() * psi0;
    for (Eigen::Index k = 0; k < values_.size(); ++k)
      c[k] *= std::polar(1.0, -values_[k] * t);
    return vectors_ * c;
  }

private:
  Eigen::VectorXd values_;
  DenseOperator vectors_;
};

/// Swap on C^d x C^d: V|i,j> = |j,i>. The 1x1 trivial swap is only returned
/// when explicitly allowed.
inline DenseOperator build_swap(std::size_t d, bool allow_trivial = false) {
  if (d < 2 && !(d == 1 && allow_trivial))
    throw InvalidArgument("build_swap: subsystem dimension must be >= 2");
  const auto n = static_cast<Eigen::Index>(d * d);
  DenseOperator v = DenseOperator::Zero(n, n);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      v(static_cast<Eigen::Index>(j * d + i), static_cast<Eigen::Index>(i * d + j)) = 1.0;
  return v;
}

/// Exchange Hamiltonian kappa * V as a decomposition with zero local parts.
inline HamiltonianDecomposition build_swap_hamiltonian(std::size_t d, Real kappa) {
  HamiltonianDecomposition h;
  h.space = TensorSpace({d, d});
  const auto di = static_cast<Eigen::Index>(d);
  h.local_parts = {DenseOperator::Zero(di, di), DenseOperator::Zero(di, di)};
  h.interaction = kappa * build_swap(d);
  return h;
}

namespace pauli {

inline DenseOperator identity() { return DenseOperator::Identity(2, 2); }

inline DenseOperator x() {
  DenseOperator m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

inline DenseOperator y() {
  DenseOperator m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

// |up> = basis 0 carries eigenvalue +1.
inline DenseOperator z() {
  DenseOperator m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

} // namespace pauli

/// (kappa/2) s0 x s0 + 2 kappa S_A . S_B with S = sigma/2 (hbar = 1). The whole
/// expression is treated as interaction.
inline HamiltonianDecomposition build_spin_spin(Real kappa) {
  if (!std::isfinite(kappa) || kappa == 0.0)
    throw InvalidArgument("build_spin_spin: kappa must be finite and nonzero");
  const DenseOperator sx = 0.5 * pauli::x();
  const DenseOperator sy = 0.5 * pauli::y();
  const DenseOperator sz = 0.5 * pauli::z();
  HamiltonianDecomposition h;
  h.space = TensorSpace({2, 2});
  h.local_parts = {DenseOperator::Zero(2, 2), DenseOperator::Zero(2, 2)};
  h.interaction = 0.5 * kappa * kron(pauli::identity(), pauli::identity()) +
                  2.0 * kappa * (kron(sx, sx) + kron(sy, sy) + kron(sz, sz));
  return h;
}

/// Truncated annihilation operator on span{|0>, ..., |n_max>}.
inline DenseOperator build_annihilation(std::size_t n_max) {
  if (n_max < 1)
    throw InvalidArgument("build_annihilation: n_max must be >= 1");
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  DenseOperator c = DenseOperator::Zero(d, d);
  for (Eigen::Index n = 1; n < d; ++n)
    c(n - 1, n) = std::sqrt(static_cast<Real>(n));
  return c;
}

inline DenseOperator quadrature_x(std::size_t n_max) {
  const DenseOperator c = build_annihilation(n_max);
  return 0.5 * (c + c.adjoint());
}

inline DenseOperator quadrature_p(std::size_t n_max) {
  const DenseOperator c = build_annihilation(n_max);
  return (c - c.adjoint()) / Complex(0.0, 2.0);
}

struct BosonicModeSpec {
  std::size_t n_max = 15;
  Complex alpha{};
};

inline constexpr Real kCoherentNormDefectTolerance = 1e-6;
inline constexpr Real kCoherentAmplitudeGuard = 1.0;

/// Fock-basis coefficients e^{-|a|^2/2} a^n / sqrt(n!) for n <= n_max, without
/// renormalization. The returned norm is below 1 by the truncation defect.
inline Ket coherent_state_raw(Complex alpha, std::size_t n_max) {
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  Ket v(d);
  Complex term = std::exp(-0.5 * std::norm(alpha));
  v[0] = term;
  for (Eigen::Index n = 1; n < d; ++n) {
    term *= alpha / std::sqrt(static_cast<Real>(n));
    v[n] = term;
  }
  return v;
}

inline Real coherent_norm_defect(Complex alpha, std::size_t n_max) {
  return 1.0 - coherent_state_raw(alpha, n_max).squaredNorm();
}

/// Truncated coherent state, normalized after checking the truncation defect.
inline Ket coherent_state(const BosonicModeSpec& spec,
                          Real defect_tol = kCoherentNormDefectTolerance) {
  if (spec.n_max < 1)
    throw InvalidArgument("coherent_state: n_max must be >= 1");
  if (std::abs(spec.alpha) > kCoherentAmplitudeGuard)
    throw InvalidArgument("coherent_state: |alpha| exceeds amplitude guard 1");
  const Ket raw = coherent_state_raw(spec.alpha, spec.n_max);
  const Real defect = 1.0 - raw.squaredNorm();
  if (defect > defect_tol)
    throw InvalidArgument("coherent_state: truncation norm defect " +
                          std::to_string(defect) + " exceeds tolerance");
  return raw / raw.norm();
}

/// First-order form kappa(1 - a^+a - b^+b) + kappa(a^+b + b^+a) on two
/// truncated modes. The constant kappa * 1 is split evenly between the modes.
inline HamiltonianDecomposition build_beam_splitter_approx(Real kappa,
                                                           std::size_t n_max) {
  const DenseOperator c = build_annihilation(n_max);
  const auto d = static_cast<Eigen::Index>(n_max + 1);
  const DenseOperator id = DenseOperator::Identity(d, d);
  const DenseOperator number = c.adjoint() * c;
  HamiltonianDecomposition h;
  h.space = TensorSpace({n_max + 1, n_max + 1});
  const DenseOperator local = kappa * (0.5 * id - number);
  h.local_parts = {local, local};
  h.interaction = kappa * (kron(c.adjoint(), id) * kron(id, c) +
                           kron(id, c.adjoint()) * kron(c, id));
  return h;
}

namespace detail {

inline void check_decomposition(const HamiltonianDecomposition& h,
                                 const char* who) {
  const std::string w(who);
  if (h.local_parts.size() != h.space.parties())
    throw InvalidArgument(w + ": expected " + std::to_string(h.space.parties()) +
                          " local parts, got " +
                          std::to_string(h.local_parts.size()));
  for (std::size_t p = 0; p < h.space.parties(); ++p) {
    const auto d = static_cast<Eigen::Index>(h.space.dim(p));
    if (h.local_parts[p].rows() != d || h.local_parts[p].cols() != d)
      throw InvalidArgument(w + ": local part " + std::to_string(p) +
                            " has wrong dimension");
  }
  const auto n = static_cast<Eigen::Index>(h.space.total());
  if (h.interaction.rows() != n || h.interaction.cols() != n)
    throw InvalidArgument(w + ": interaction has wrong dimension");
}

} // namespace detail

inline DenseOperator assemble(const HamiltonianDecomposition& h) {
  detail::check_decomposition(h, "assemble");
  DenseOperator total = h.interaction;
  for (std::size_t p = 0; p < h.space.parties(); ++p)
    if (max_abs(h.local_parts[p]) != 0.0)
      total += embed_local(h.local_parts[p], p, h.space);
  return total;
}

/// Interaction part in the local interaction picture:
///   (U_A^+ x U_B^+) H_int (U_A x U_B),  U_n = exp(-i H_n t).
/// Works for any number of parties.
inline DenseOperator effective_hamiltonian(const HamiltonianDecomposition& h,
                                           Real t) {
  detail::check_decomposition(h, "effective_hamiltonian");
  DenseOperator u = DenseOperator::Identity(1, 1);
  for (std::size_t p = 0; p < h.space.parties(); ++p) {
    require_hermitian(h.local_parts[p], "effective_hamiltonian: local part");
    u = kron(u, HermitianSpectrum(h.local_parts[p]).propagator(t));
  }
  return u.adjoint() * h.interaction * u;
}

} // namespace septraj
