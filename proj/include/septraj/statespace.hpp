// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace septraj {

using Real = double;
using Complex = std::complex<double>;

/// Amplitude vector of a (sub)system state. Length is the Hilbert-space dimension.
using Ket = Eigen::VectorXcd;

/// Square complex matrix acting on a Ket space. Energies carry hbar = 1.
using DenseOperator = Eigen::MatrixXcd;

inline constexpr Real kHermitianTolerance = 1e-12;

class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Ordered party dimensions (d_1, ..., d_N) of a composite space. Party 0 is
/// the slowest-varying index in composite amplitudes.
class TensorSpace {
public:
  TensorSpace() = default;
  explicit TensorSpace(std::vector<std::size_t> party_dims)
      : dims_(std::move(party_dims)) {
    if (dims_.empty())
      throw InvalidArgument("TensorSpace: at least one party required");
    for (auto d : dims_)
      if (d == 0)
        throw InvalidArgument("TensorSpace: party dimension must be >= 1");
  }

  std::size_t parties() const { return dims_.size(); }
  std::size_t dim(std::size_t party) const { return dims_.at(party); }
  const std::vector<std::size_t>& dims() const { return dims_; }

  std::size_t total() const {
    return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                           std::multiplies<>());
  }

  /// Stride of party `p` in the row-major composite index.
  std::size_t stride(std::size_t p) const {
    std::size_t s = 1;
    for (std::size_t k = p + 1; k < dims_.size(); ++k)
      s *= dims_[k];
    return s;
  }

  bool operator==(const TensorSpace&) const = default;

private:
  std::vector<std::size_t> dims_;
};

/// |a_1, ..., a_N>, kept factorized.
struct ProductState {
  std::vector<Ket> factors;

  std::size_t parties() const { return factors.size(); }
  TensorSpace space() const {
    std::vector<std::size_t> d;
    d.reserve(factors.size());
    for (const auto& f : factors)
      d.push_back(static_cast<std::size_t>(f.size()));
    return TensorSpace(std::move(d));
  }
};

inline Real max_abs(const DenseOperator& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// max |L - L^dagger|
inline Real hermiticity_defect(const DenseOperator& op) {
  if (op.rows() != op.cols())
    throw InvalidArgument("hermiticity_defect: operator is not square");
  return max_abs(op - op.adjoint());
}

inline bool is_hermitian(const DenseOperator& op,
                         Real tol = kHermitianTolerance) {
  return op.rows() == op.cols() && hermiticity_defect(op) <= tol;
}

inline void require_hermitian(const DenseOperator& op, const std::string& what,
                              Real tol = kHermitianTolerance) {
  if (op.rows() != op.cols())
    throw InvalidArgument(what + ": operator is not square");
  if (!op.allFinite())
    throw InvalidArgument(what + ": operator has non-finite entries");
  const Real defect = hermiticity_defect(op);
  if (!(defect <= tol))
    throw InvalidArgument(what + ": operator is not Hermitian (max|L-L^+| = " +
                          std::to_string(defect) + ")");
}

inline Ket tensor_product(std::span<const Ket> factors) {
  if (factors.empty())
    throw InvalidArgument("tensor_product: empty factor list");
  Ket out = Ket::Ones(1);
  for (const auto& f : factors) {
    if (f.size() < 1)
      throw InvalidArgument("tensor_product: factor of dimension 0");
    Ket next(out.size() * f.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
      next.segment(i * f.size(), f.size()) = out[i] * f;
    out = std::move(next);
  }
  return out;
}

inline Ket tensor_product(const Ket& a, const Ket& b) {
  const Ket fs[] = {a, b};
  return tensor_product(std::span<const Ket>(fs));
}

inline Ket tensor_product(const ProductState& s) {
  return tensor_product(std::span<const Ket>(s.factors));
}

/// Kronecker product of operators, first argument slowest.
inline DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
  DenseOperator out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// 1 x ... x op x ... x 1 with `op` at `party`.
inline DenseOperator embed_local(const DenseOperator& op, std::size_t party,
                                 const TensorSpace& space) {
  if (party >= space.parties())
    throw InvalidArgument("embed_local: party index out of range");
  if (static_cast<std::size_t>(op.rows()) != space.dim(party) ||
      op.rows() != op.cols())
    throw InvalidArgument("embed_local: operator dimension does not match party");
  DenseOperator out = DenseOperator::Identity(1, 1);
  for (std::size_t p = 0; p < space.parties(); ++p) {
    const auto d = static_cast<Eigen::Index>(space.dim(p));
    out = kron(out, p == party ? op : DenseOperator::Identity(d, d));
  }
  return out;
}

inline Complex expectation(const DenseOperator& op, const Ket& v) {
  return v.dot(op * v);
}

namespace detail {

inline void check_reduce_args(const DenseOperator& h, const ProductState& state,
                              std::size_t keep, const TensorSpace& space) {
  if (keep >= space.parties())
    throw InvalidArgument("partial_reduce: kept party index out of range");
  if (state.parties() != space.parties())
    throw InvalidArgument("partial_reduce: product state has " +
                          std::to_string(state.parties()) +
                          " factors but space has " +
                          std::to_string(space.parties()) + " parties");
  for (std::size_t p = 0; p < space.parties(); ++p)
    if (static_cast<std::size_t>(state.factors[p].size()) != space.dim(p))
      throw InvalidArgument("partial_reduce: factor " + std::to_string(p) +
                            " dimension does not match space");
  const auto n = static_cast<Eigen::Index>(space.total());
  if (h.rows() != n || h.cols() != n)
    throw InvalidArgument("partial_reduce: operator dimension does not match space");
}

} // namespace detail

/// Partially reduced operator on party `keep`:
///   tr_{others}[ H (|a_1><a_1| x ... x 1_keep x ... x |a_N><a_N|) ].
/// Equivalently <a_others| H |a_others> with the kept index left open, so that
/// <a_keep| H_reduced |a_keep> = <a_1..a_N| H |a_1..a_N>.
inline DenseOperator partial_reduce(const DenseOperator& h,
                                    const ProductState& state, std::size_t keep,
                                    const TensorSpace& space) {
  detail::check_reduce_args(h, state, keep, space);

  const std::size_t n_parties = space.parties();
  const auto dk = static_cast<Eigen::Index>(space.dim(keep));
  const std::size_t keep_stride = space.stride(keep);

  // Contract the product of the other factors into a weight vector over the
  // "environment" multi-index, then place each environment index into the
  // composite index with the kept index zeroed.
  std::vector<Complex> env_weight{Complex(1.0)};
  std::vector<std::size_t> env_offset{0};
  for (std::size_t p = 0; p < n_parties; ++p) {
    if (p == keep)
      continue;
    const auto& f = state.factors[p];
    const std::size_t stride = space.stride(p);
    std::vector<Complex> w;
    std::vector<std::size_t> o;
    w.reserve(env_weight.size() * f.size());
    o.reserve(env_weight.size() * f.size());
    for (std::size_t e = 0; e < env_weight.size(); ++e)
      for (Eigen::Index j = 0; j < f.size(); ++j) {
        w.push_back(env_weight[e] * f[j]);
        o.push_back(env_offset[e] + static_cast<std::size_t>(j) * stride);
      }
    env_weight = std::move(w);
    env_offset = std::move(o);
  }

  // Column k of the result: sum the environment columns of H weighted by the
  // factor amplitudes, then project the rows back onto the environment.
  DenseOperator out(dk, dk);
  const std::size_t n_env = env_weight.size();
  Ket column(h.rows());
  for (Eigen::Index k = 0; k < dk; ++k) {
    const std::size_t ck = static_cast<std::size_t>(k) * keep_stride;
    column.setZero();
    for (std::size_t f = 0; f < n_env; ++f)
      column.noalias() += env_weight[f] * h.col(static_cast<Eigen::Index>(ck + env_offset[f]));
    for (Eigen::Index i = 0; i < dk; ++i) {
      const std::size_t ri = static_cast<std::size_t>(i) * keep_stride;
      Complex acc{};
      for (std::size_t e = 0; e < n_env; ++e)
        acc += std::conj(env_weight[e]) * column[static_cast<Eigen::Index>(ri + env_offset[e])];
      out(i, k) = acc;
    }
  }
  return out;
}

/// Bipartite shorthand: reduce onto party `keep` (0 or 1) against `other`.
inline DenseOperator partial_reduce(const DenseOperator& h, const Ket& other,
                                    std::size_t keep, const TensorSpace& space) {
  if (space.parties() != 2)
    throw InvalidArgument("partial_reduce: bipartite overload needs two parties");
  if (keep > 1)
    throw InvalidArgument("partial_reduce: kept party index out of range");
  ProductState s;
  s.factors.resize(2);
  const auto dk = static_cast<Eigen::Index>(space.dim(keep));
  s.factors[keep] = Ket::Zero(dk);
  s.factors[1 - keep] = other;
  return partial_reduce(h, s, keep, space);
}

/// Contraction of a fixed operator against product states, for repeated use.
/// Keeps the nonzero entries of `h` with the per-party digits of their row and
/// column, so every party's reduced operator comes out of one pass whose cost
/// scales with the number of nonzeros.
class PartialReducer {
public:
  PartialReducer(const DenseOperator& h, const TensorSpace& space) : space_(space) {
    const auto n = static_cast<Eigen::Index>(space.total());
    if (h.rows() != n || h.cols() != n)
      throw InvalidArgument("PartialReducer: operator does not match space");
    const std::size_t np = space.parties();
    for (Eigen::Index c = 0; c < n; ++c)
      for (Eigen::Index r = 0; r < n; ++r) {
        if (h(r, c) == Complex(0.0))
          continue;
        values_.push_back(h(r, c));
        for (std::size_t p = 0; p < np; ++p) {
          const std::size_t stride = space.stride(p);
          row_digits_.push_back(
              static_cast<std::uint32_t>((static_cast<std::size_t>(r) / stride) % space.dim(p)));
          col_digits_.push_back(
              static_cast<std::uint32_t>((static_cast<std::size_t>(c) / stride) % space.dim(p)));
        }
      }
  }

  const TensorSpace& space() const { return space_; }
  std::size_t nonzeros() const { return values_.size(); }

  /// reduced[l] = contraction of h against every factor except l; factors are
  /// used as given, without normalization.
  std::vector<DenseOperator> reduce_all(const std::vector<Ket>& factors) const {
    const std::size_t np = space_.parties();
    if (factors.size() != np)
      throw InvalidArgument("PartialReducer: wrong number of factors");
    for (std::size_t p = 0; p < np; ++p)
      if (static_cast<std::size_t>(factors[p].size()) != space_.dim(p))
        throw InvalidArgument("PartialReducer: factor dimension mismatch");
    std::vector<DenseOperator> out;
    out.reserve(np);
    for (std::size_t p = 0; p < np; ++p) {
      const auto d = static_cast<Eigen::Index>(space_.dim(p));
      out.push_back(DenseOperator::Zero(d, d));
    }
    std::vector<Complex> w(np), prefix(np + 1), suffix(np + 1);
    for (std::size_t e = 0; e < values_.size(); ++e) {
      const std::uint32_t* rd = &row_digits_[e * np];
      const std::uint32_t* cd = &col_digits_[e * np];
      for (std::size_t p = 0; p < np; ++p)
        w[p] = std::conj(factors[p][rd[p]]) * factors[p][cd[p]];
      prefix[0] = suffix[np] = Complex(1.0);
      for (std::size_t p = 0; p < np; ++p)
        prefix[p + 1] = prefix[p] * w[p];
      for (std::size_t p = np; p-- > 0;)
        suffix[p] = suffix[p + 1] * w[p];
      for (std::size_t l = 0; l < np; ++l)
        out[l](rd[l], cd[l]) += values_[e] * prefix[l] * suffix[l + 1];
    }
    return out;
  }

private:
  TensorSpace space_;
  std::vector<Complex> values_;
  std::vector<std::uint32_t> row_digits_;
  std::vector<std::uint32_t> col_digits_;
};

/// |<u|v>| / (|u| |v|)
inline Real fidelity_up_to_phase(const Ket& u, const Ket& v) {
  if (u.size() != v.size())
    throw InvalidArgument("fidelity_up_to_phase: dimension mismatch");
  const Real nu = u.norm();
  const Real nv = v.norm();
  if (nu == 0.0 || nv == 0.0)
    throw InvalidArgument("fidelity_up_to_phase: zero vector");
  return std::min(1.0, std::abs(u.dot(v)) / (nu * nv));
}

/// Per-factor overlaps multiply for product states.
inline Real fidelity_up_to_phase(const ProductState& u, const ProductState& v) {
  if (u.parties() != v.parties())
    throw InvalidArgument("fidelity_up_to_phase: party count mismatch");
  Real f = 1.0;
  for (std::size_t p = 0; p < u.parties(); ++p)
    f *= fidelity_up_to_phase(u.factors[p], v.factors[p]);
  return f;
}

inline Ket normalized(const Ket& v) {
  const Real n = v.norm();
  if (n == 0.0)
    throw InvalidArgument("normalized: zero vector");
  return v / n;
}

inline Ket basis_ket(std::size_t dim, std::size_t k) {
  if (k >= dim)
    throw InvalidArgument("basis_ket: index out of range");
  Ket v = Ket::Zero(static_cast<Eigen::Index>(dim));
  v[static_cast<Eigen::Index>(k)] = 1.0;
  return v;
}

/// Reduced density matrix of party `keep` for a composite pure state.
inline DenseOperator reduced_density(const Ket& psi, std::size_t keep,
                                     const TensorSpace& space) {
  if (static_cast<std::size_t>(psi.size()) != space.total())
    throw InvalidArgument("reduced_density: state dimension does not match space");
  if (keep >= space.parties())
    throw InvalidArgument("reduced_density: party index out of range");
  const auto dk = static_cast<Eigen::Index>(space.dim(keep));
  const std::size_t inner = space.stride(keep);
  const std::size_t outer = space.total() / (inner * space.dim(keep));
  DenseOperator rho = DenseOperator::Zero(dk, dk);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * inner * space.dim(keep) + in;
      for (Eigen::Index i = 0; i < dk; ++i)
        for (Eigen::Index j = 0; j < dk; ++j)
          rho(i, j) += psi[static_cast<Eigen::Index>(base + i * inner)] *
                       std::conj(psi[static_cast<Eigen::Index>(base + j * inner)]);
    }
  return rho;
}

} // namespace septraj
