// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "septraj/cli/commands.hpp"

namespace {

using namespace septraj;
using namespace septraj::cli;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw IoError("cannot read scenario file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

YAML::Node load_with_overrides(const std::string& path, const std::vector<std::string>& overrides) {
  YAML::Node doc = load_document(read_file(path));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("override '" + kv + "' is not of the form key=value");
    apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return doc;
}

void print_summary(const Summary& s) {
  const auto line = [](const char* name, Real v) {
    std::cout << "  " << std::left << std::setw(24) << name << format_real(v) << '\n';
  };
  line("q", s.q);
  line("se_recurrence", s.se_recurrence);
  line("sse_recurrence", s.sse_recurrence);
  line("period_ratio", s.period_ratio);
  line("max_lambda_minus_se", s.max_lambda_minus_se);
  line("sse_max_norm_drift", s.sse_max_norm_drift);
  line("sse_max_energy_drift", s.sse_max_energy_drift);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger vs separability-equation trajectories"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::string param;
  std::vector<std::string> values;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario_path, "Scenario YAML file")->required();
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--override", overrides, "Replace a scenario value, e.g. grid.steps=500");
  };
  auto* run = app.add_subcommand("run", "Propagate and write trajectory CSVs plus a JSON record");
  common(run);
  auto* verify = app.add_subcommand("verify", "Run the invariant checks and print a table");
  common(verify);
  auto* sweep = app.add_subcommand("sweep", "Summarize runs over a list of parameter values");
  common(sweep);
  sweep->add_option("--param", param, "kappa, q-angle, tau_max, steps or n_max")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    const YAML::Node doc = load_with_overrides(scenario_path, overrides);
    if (*run) {
      const auto rec = cmd_run(parse_scenario(doc), out_dir);
      std::cout << "wrote " << rec.scenario_name << "_se.csv, " << rec.scenario_name
                << "_sse.csv, " << rec.scenario_name << ".json to " << out_dir << '\n';
      print_summary(rec.summary);
      return exit_ok;
    }
    if (*verify) {
      const auto rec = cmd_verify(parse_scenario(doc), out_dir, std::cout);
      const bool ok = rec.all_passed();
      std::cout << (ok ? "all checks passed" : "some checks FAILED") << '\n';
      return ok ? exit_ok : exit_check_failed;
    }
    std::string name;
    std::cout << cmd_sweep(doc, param, values, out_dir, &name);
    std::cout << "wrote " << name << ".csv to " << out_dir << '\n';
    return exit_ok;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return exit_runtime;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
}
