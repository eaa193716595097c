// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>

#include "septraj/analysis.hpp"
#include "septraj/cli/scenario.hpp"
#include "septraj/oracle.hpp"

namespace septraj::cli {

inline constexpr const char* kToolVersion = "0.3.0";
inline constexpr int kRecordSchemaVersion = 1;
inline constexpr Real kVonNeumannTolerance = 1e-6;
inline constexpr Real kOracleTolerance = 1e-8;
inline constexpr Real kSingleModeTolerance = 1e-10;

/// Exit codes shared by every subcommand.
enum ExitCode : int { exit_ok = 0, exit_check_failed = 1, exit_usage = 2, exit_runtime = 3 };

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  Real value = 0.0;
  Real threshold = 0.0;
};

/// Scalar summary of an SE/SSE pair; NaN marks quantities that do not apply.
struct Summary {
  static constexpr Real none = std::numeric_limits<Real>::quiet_NaN();
  Real q = none; ///< |<a0|b0>| for two equal-dimension parties
  Real se_recurrence = none;
  Real sse_recurrence = none;
  Real period_ratio = none;
  Real max_lambda_minus_se = none;
  Real max_lambda_minus_sse = none;
  Real se_max_norm_drift = 0.0;
  Real se_max_energy_drift = 0.0;
  Real sse_max_norm_drift = 0.0;
  Real sse_max_energy_drift = 0.0;
  Real max_vn_residual = 0.0;
  Real min_oracle_fidelity_se = none;
  Real min_oracle_fidelity_sse = none;
  Real min_se_equivalence = none; ///< single party: SSE vs SE fidelity
  Real action_se = 0.0;
  Real action_sse = 0.0;
};

struct RunRecord {
  std::string command;
  std::string scenario_name;
  std::uint64_t scenario_hash = 0;
  std::string version = kToolVersion;
  Real wall_clock_seconds = 0.0;
  Summary summary;
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
};

struct RunResult {
  HamiltonianDecomposition decomp;
  Trajectory se;
  Trajectory sse;
  Summary summary;
};

/// Shortest round-trip decimal form.
inline std::string format_real(Real v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline Real max_deviation(const std::vector<Real>& v, Real ref) {
  Real m = 0.0;
  for (Real x : v)
    m = std::max(m, std::abs(x - ref));
  return m;
}

inline Real nan_if_empty(const std::optional<Real>& v) { return v ? *v : Summary::none; }

/// Oracle fidelity per grid point; the closed form is in tau = kappa t.
inline std::vector<Real> oracle_fidelity(const ScenarioConfig& c, const Trajectory& traj) {
  const oracle::SwapScenario s(c.initial.factors[0], c.initial.factors[1]);
  std::vector<Real> f;
  f.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Real tau = c.kappa * traj.grid.at(k);
    if (traj.kind == TrajectoryKind::composite) {
      f.push_back(fidelity_up_to_phase(traj.composite[k], oracle::analytic_se_swap(s, tau)));
    } else {
      const auto [a, b] = oracle::analytic_sse_swap(s, tau);
      f.push_back(fidelity_up_to_phase(traj.product[k], ProductState{{a, b}}));
    }
  }
  return f;
}

inline Real min_of(const std::vector<Real>& v) { return *std::min_element(v.begin(), v.end()); }

/// Observable columns requested by the scenario, one vector per name.
inline std::vector<std::vector<Real>> observable_columns(const ScenarioConfig& c,
                                                         const Trajectory& traj) {
  std::vector<std::vector<Real>> cols;
  for (const auto& name : c.outputs) {
    const auto us = name.find('_');
    const std::string kind = name.substr(0, us);
    const std::string label = name.substr(us + 1);
    std::size_t party = 0;
    while (party_label(party, c.parties()) != label)
      ++party;
    std::vector<Real> col;
    col.reserve(traj.size());
    if (kind == "x" || kind == "p") {
      for (const auto& pt : phase_space_coords(traj, party, c.bosonic))
        col.push_back(kind == "x" ? pt[0] : pt[1]);
    } else {
      const std::size_t axis = kind == "sx" ? 0 : kind == "sy" ? 1 : 2;
      for (const auto& r : bloch_coords(traj, party))
        col.push_back(r[axis]);
    }
    cols.push_back(std::move(col));
  }
  return cols;
}

} // namespace detail

/// Propagates the scenario under the SE and the SSEs and summarizes both.
/// The SSE always uses RK4; `integrator.method` selects the SE propagator.
inline RunResult run_scenario(const ScenarioConfig& c) {
  RunResult r;
  r.decomp = build_hamiltonian(c);
  const DenseOperator h = assemble(r.decomp);
  const Ket psi0 = tensor_product(c.initial);
  r.se = evolve_se(h, psi0, c.grid, c.integrator, c.space());
  IntegratorConfig sse_cfg = c.integrator;
  sse_cfg.method = Method::rk4;
  sse_cfg.gauge = Gauge::physical;
  r.sse = evolve_sse_multipartite(r.decomp, c.initial, c.grid, sse_cfg);

  Summary& s = r.summary;
  s.se_max_norm_drift = r.se.max_norm_drift;
  s.sse_max_norm_drift = r.sse.max_norm_drift;
  s.se_max_energy_drift = detail::max_deviation(r.se.record("energy"), r.se.record("energy")[0]);
  s.sse_max_energy_drift =
      detail::max_deviation(r.sse.record("energy"), r.sse.record("energy")[0]);
  for (std::size_t p = 0; p < c.parties(); ++p)
    for (Real v : r.sse.record("vn_residual_" + party_label(p, c.parties())))
      s.max_vn_residual = std::max(s.max_vn_residual, v);

  if (c.parties() == 2) {
    const auto report = compare_trajectories(r.se, r.sse, r.decomp);
    s.se_recurrence = detail::nan_if_empty(report.se_period);
    s.sse_recurrence = detail::nan_if_empty(report.sse_period);
    s.period_ratio = detail::nan_if_empty(report.period_ratio);
    s.max_lambda_minus_se = report.max_lambda_minus_se;
    s.max_lambda_minus_sse = report.max_lambda_minus_sse;
    s.action_se = report.action_se;
    s.action_sse = report.action_sse;
    if (c.dims[0] == c.dims[1])
      s.q = std::abs(c.initial.factors[0].dot(c.initial.factors[1]));
  } else {
    s.se_recurrence = detail::nan_if_empty(estimate_recurrence(fidelity_to_initial(r.se), c.grid));
    s.sse_recurrence =
        detail::nan_if_empty(estimate_recurrence(fidelity_to_initial(r.sse), c.grid));
    if (!std::isnan(s.se_recurrence) && !std::isnan(s.sse_recurrence))
      s.period_ratio = s.sse_recurrence / s.se_recurrence;
    s.action_se = action(r.se, r.decomp).action;
    s.action_sse = action(r.sse, r.decomp).action;
  }
  if (c.has_swap_oracle()) {
    s.min_oracle_fidelity_se = detail::min_of(detail::oracle_fidelity(c, r.se));
    s.min_oracle_fidelity_sse = detail::min_of(detail::oracle_fidelity(c, r.sse));
  }
  if (c.parties() == 1) {
    Real worst = 1.0;
    for (std::size_t k = 0; k < r.se.size(); ++k)
      worst = std::min(worst, fidelity_up_to_phase(r.se.state(k), r.sse.state(k)));
    s.min_se_equivalence = worst;
  }
  return r;
}

/// CSV text for one trajectory: tau, norms, energy, observables,
/// lambda_minus (bipartite) and fidelity_oracle (swap oracle available).
inline std::string trajectory_csv(const ScenarioConfig& c, const Trajectory& traj) {
  std::vector<std::string> header{"tau"};
  std::vector<const std::vector<Real>*> cols;
  std::vector<std::vector<Real>> owned;
  owned.reserve(c.outputs.size() + 2);
  if (traj.kind == TrajectoryKind::composite) {
    header.push_back("norm");
    cols.push_back(&traj.record("norm"));
  } else {
    for (std::size_t p = 0; p < c.parties(); ++p) {
      const auto key = "norm_" + party_label(p, c.parties());
      header.push_back(key);
      cols.push_back(&traj.record(key));
    }
  }
  header.push_back("energy");
  cols.push_back(&traj.record("energy"));
  for (auto& col : detail::observable_columns(c, traj))
    owned.push_back(std::move(col));
  for (std::size_t i = 0; i < c.outputs.size(); ++i) {
    header.push_back(c.outputs[i]);
    cols.push_back(&owned[i]);
  }
  if (c.parties() == 2) {
    std::vector<Real> lm;
    lm.reserve(traj.size());
    for (std::size_t k = 0; k < traj.size(); ++k)
      lm.push_back(schmidt_coefficients(traj.state(k), traj.space).lambda_minus());
    owned.push_back(std::move(lm));
    header.push_back("lambda_minus");
    cols.push_back(&owned.back());
  }
  if (c.has_swap_oracle()) {
    owned.push_back(detail::oracle_fidelity(c, traj));
    header.push_back("fidelity_oracle");
    cols.push_back(&owned.back());
  }

  std::string out;
  for (std::size_t i = 0; i < header.size(); ++i)
    out += (i ? "," : "") + header[i];
  out += '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_real(traj.grid.at(k));
    for (const auto* col : cols) {
      out += ',';
      out += format_real((*col)[k]);
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json summary_json(const Summary& s) {
  auto num = [](Real v) -> nlohmann::json {
    if (std::isfinite(v))
      return v;
    return nullptr;
  };
  return {{"q", num(s.q)},
          {"se_recurrence", num(s.se_recurrence)},
          {"sse_recurrence", num(s.sse_recurrence)},
          {"period_ratio", num(s.period_ratio)},
          {"max_lambda_minus_se", num(s.max_lambda_minus_se)},
          {"max_lambda_minus_sse", num(s.max_lambda_minus_sse)},
          {"se_max_norm_drift", num(s.se_max_norm_drift)},
          {"se_max_energy_drift", num(s.se_max_energy_drift)},
          {"sse_max_norm_drift", num(s.sse_max_norm_drift)},
          {"sse_max_energy_drift", num(s.sse_max_energy_drift)},
          {"max_vn_residual", num(s.max_vn_residual)},
          {"min_oracle_fidelity_se", num(s.min_oracle_fidelity_se)},
          {"min_oracle_fidelity_sse", num(s.min_oracle_fidelity_sse)},
          {"min_se_equivalence", num(s.min_se_equivalence)},
          {"action_se", num(s.action_se)},
          {"action_sse", num(s.action_sse)}};
}

inline nlohmann::json record_json(const RunRecord& r) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << r.scenario_hash;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back(
        {{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}});
  return {{"schema_version", kRecordSchemaVersion},
          {"command", r.command},
          {"scenario", r.scenario_name},
          {"scenario_hash", hash.str()},
          {"version", r.version},
          {"wall_clock_seconds", r.wall_clock_seconds},
          {"summary", summary_json(r.summary)},
          {"checks", checks},
          {"passed", r.all_passed()}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f)
    throw IoError("failed writing " + path.string());
}

/// Propagates and writes <name>_se.csv, <name>_sse.csv and <name>.json.
inline RunRecord cmd_run(const ScenarioConfig& c, const std::filesystem::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_scenario(c);
  write_text(out_dir / (c.name + "_se.csv"), trajectory_csv(c, r.se));
  write_text(out_dir / (c.name + "_sse.csv"), trajectory_csv(c, r.sse));
  RunRecord rec;
  rec.command = "run";
  rec.scenario_name = c.name;
  rec.scenario_hash = scenario_hash(c.canonical);
  rec.summary = r.summary;
  rec.wall_clock_seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
  write_text(out_dir / (c.name + ".json"), record_json(rec).dump(2) + "\n");
  return rec;
}

/// Invariant checks for a run summary.
inline std::vector<CheckResult> evaluate_checks(const ScenarioConfig& c, const Summary& s) {
  const Real tol = c.integrator.tolerance;
  std::vector<CheckResult> out;
  auto at_most = [&](std::string name, Real value, Real threshold) {
    out.push_back({std::move(name), value <= threshold, value, threshold});
  };
  at_most("se_norm_drift", s.se_max_norm_drift, tol);
  at_most("se_energy_drift", s.se_max_energy_drift, tol);
  at_most("sse_norm_drift", s.sse_max_norm_drift, tol);
  at_most("sse_energy_drift", s.sse_max_energy_drift, tol);
  at_most("sse_von_neumann_residual", s.max_vn_residual, kVonNeumannTolerance);
  if (c.has_swap_oracle()) {
    at_most("se_oracle_infidelity", 1.0 - s.min_oracle_fidelity_se, kOracleTolerance);
    at_most("sse_oracle_infidelity", 1.0 - s.min_oracle_fidelity_sse, kOracleTolerance);
  }
  if (c.parties() == 1)
    at_most("single_party_se_equivalence", 1.0 - s.min_se_equivalence, kSingleModeTolerance);
  return out;
}

inline RunRecord cmd_verify(const ScenarioConfig& c, const std::filesystem::path& out_dir,
                            std::ostream& table) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult r = run_scenario(c);
  RunRecord rec;
  rec.command = "verify";
  rec.scenario_name = c.name;
  rec.scenario_hash = scenario_hash(c.canonical);
  rec.summary = r.summary;
  rec.checks = evaluate_checks(c, r.summary);
  rec.wall_clock_seconds =
      std::chrono::duration<Real>(std::chrono::steady_clock::now() - start).count();
  table << std::left << std::setw(30) << "check" << std::setw(8) << "result" << std::setw(26)
        << "value" << "threshold\n";
  for (const auto& chk : rec.checks)
    table << std::setw(30) << chk.name << std::setw(8) << (chk.passed ? "PASS" : "FAIL")
          << std::setw(26) << format_real(chk.value) << format_real(chk.threshold) << '\n';
  write_text(out_dir / (c.name + "_verify.json"), record_json(rec).dump(2) + "\n");
  return rec;
}

inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names{"kappa", "q-angle", "tau_max", "steps", "n_max"};
  return names;
}

/// Applies one sweep value to a scenario document.
inline void apply_sweep_value(YAML::Node& doc, const std::string& param, const std::string& value) {
  if (param == "kappa")
    apply_override(doc, "hamiltonian.kappa", value);
  else if (param == "tau_max")
    apply_override(doc, "grid.tau_max", value);
  else if (param == "steps")
    apply_override(doc, "grid.steps", value);
  else if (param == "n_max")
    apply_override(doc, "hamiltonian.n_max", value);
  else if (param == "q-angle")
    // second party rotated away from |0> by theta: q = cos(theta) against up
    apply_override(doc, "initial.1", "angle(" + value + ")");
  else
    throw ScenarioError("sweep: parameter '" + param + "' is not sweepable");
}

/// One summary row per value, in input order; instances run concurrently.
inline std::string cmd_sweep(const YAML::Node& doc, const std::string& param,
                             const std::vector<std::string>& values,
                             const std::filesystem::path& out_dir, std::string* name_out = nullptr) {
  const auto& allowed = sweepable_parameters();
  if (std::find(allowed.begin(), allowed.end(), param) == allowed.end())
    throw ScenarioError("sweep: parameter '" + param + "' is not sweepable");
  if (values.empty())
    throw ScenarioError("sweep: no values given");
  std::vector<ScenarioConfig> configs;
  for (const auto& v : values) {
    YAML::Node copy = YAML::Clone(doc);
    apply_sweep_value(copy, param, v);
    configs.push_back(parse_scenario(copy));
  }
  std::vector<std::future<Summary>> jobs;
  for (const auto& c : configs)
    jobs.push_back(std::async(std::launch::async, [&c] { return run_scenario(c).summary; }));

  std::string csv = "value,q,se_recurrence,sse_recurrence,period_ratio,max_lambda_minus_se,"
                    "sse_max_norm_drift,sse_max_energy_drift,se_max_norm_drift\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Summary s = jobs[i].get();
    csv += values[i];
    for (Real v : {s.q, s.se_recurrence, s.sse_recurrence, s.period_ratio, s.max_lambda_minus_se,
                   s.sse_max_norm_drift, s.sse_max_energy_drift, s.se_max_norm_drift})
      csv += "," + format_real(v);
    csv += '\n';
  }
  const std::string name = configs.front().name + "_sweep_" + param;
  write_text(out_dir / (name + ".csv"), csv);
  if (name_out)
    *name_out = name;
  return csv;
}

} // namespace septraj::cli
