// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "septraj/statespace.hpp"

namespace septraj {

/// Uniform grid tau_start, tau_start + h, ..., tau_end with `steps` intervals.
/// Time is dimensionless (tau = kappa t, hbar = 1).
struct TimeGrid {
  Real tau_start = 0.0;
  Real tau_end = 1.0;
  std::size_t steps = 1;

  TimeGrid() = default;
  TimeGrid(Real start, Real end, std::size_t n) : tau_start(start), tau_end(end), steps(n) {
    validate();
  }

  void validate() const {
    if (!(tau_end > tau_start))
      throw InvalidArgument("TimeGrid: tau_end must exceed tau_start");
    if (steps < 1)
      throw InvalidArgument("TimeGrid: steps must be >= 1");
  }

  Real step() const { return (tau_end - tau_start) / static_cast<Real>(steps); }
  Real at(std::size_t k) const {
    return k == steps ? tau_end : tau_start + static_cast<Real>(k) * step();
  }
  std::size_t points() const { return steps + 1; }

  bool operator==(const TimeGrid&) const = default;
};

enum class Method { spectral_exact, rk4 };

/// zero_phase keeps <x|dx/dtau> = 0 for every factor; physical restores the
/// energy phase exp(-i E tau / N) on each of the N factors.
enum class Gauge { physical, zero_phase };

struct IntegratorConfig {
  Method method = Method::rk4;
  bool renormalize_each_step = false;
  Gauge gauge = Gauge::zero_phase;
  Real tolerance = 1e-8;

  void validate() const {
    if (!(tolerance > 0.0))
      throw InvalidArgument("IntegratorConfig: tolerance must be > 0");
  }
};

enum class TrajectoryKind { composite, product };

/// Per-step states plus named per-step records (one value per grid point).
struct Trajectory {
  TimeGrid grid;
  TrajectoryKind kind = TrajectoryKind::composite;
  TensorSpace space;
  std::vector<Ket> composite;
  std::vector<ProductState> product;
  Gauge gauge = Gauge::zero_phase;
  /// phases[k][p]: factor p at step k equals exp(-i phases[k][p]) times its
  /// zero-phase-gauge counterpart. Empty when no phase bookkeeping exists.
  std::vector<std::vector<Real>> phases;
  std::map<std::string, std::vector<Real>> records;
  bool drift_flagged = false;
  Real max_norm_drift = 0.0;

  std::size_t size() const {
    return kind == TrajectoryKind::composite ? composite.size() : product.size();
  }

  /// Composite amplitudes at step k regardless of representation.
  Ket state(std::size_t k) const {
    return kind == TrajectoryKind::composite ? composite.at(k)
                                             : tensor_product(product.at(k));
  }

  const std::vector<Real>& record(const std::string& key) const {
    auto it = records.find(key);
    if (it == records.end())
      throw InvalidArgument("Trajectory: no record named '" + key + "'");
    return it->second;
  }
};

class NumericalFailure : public std::runtime_error {
public:
  NumericalFailure(const std::string& what, std::size_t step)
      : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const { return step_; }

private:
  std::size_t step_;
};

} // namespace septraj
