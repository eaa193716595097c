// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "septraj/cli/commands.hpp"

using namespace septraj;
using namespace septraj::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimalSwap = R"Y(
system: qubit-pair
hamiltonian: {type: swap, kappa: 1}
initial: [up, plus]
grid: {tau_max: 6.2832}
)Y";

std::string read(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string scenario_file(const std::string& stem) {
  return read(fs::path(SEPTRAJ_SCENARIO_DIR) / (stem + ".yaml"));
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "septraj_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<Real>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error("missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

Csv parse_csv(const std::string& text) {
  Csv csv;
  std::stringstream lines(text);
  std::string line;
  std::getline(lines, line);
  std::stringstream h(line);
  for (std::string cell; std::getline(h, cell, ',');)
    csv.header.push_back(cell);
  while (std::getline(lines, line)) {
    std::vector<Real> row;
    std::stringstream r(line);
    for (std::string cell; std::getline(r, cell, ',');)
      row.push_back(std::stod(cell));
    csv.rows.push_back(std::move(row));
  }
  return csv;
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST(ParseScenario, MinimalSwapGetsDefaults) {
  const auto c = parse_scenario_text(kMinimalSwap);
  EXPECT_EQ(c.system, SystemKind::qubit_pair);
  EXPECT_EQ(c.dims, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(c.grid.steps, 2000u);
  EXPECT_EQ(c.n_max, 15u);
  EXPECT_EQ(c.integrator.tolerance, 1e-8);
  EXPECT_TRUE(c.has_swap_oracle());
  EXPECT_EQ(c.outputs.size(), 6u);
  EXPECT_EQ(c.name, "scenario");
}

TEST(ParseScenario, BosonicCoherentSetup) {
  const auto c = parse_scenario_text(scenario_file("boson_swap"));
  EXPECT_EQ(c.dims, (std::vector<std::size_t>{16, 16}));
  const Complex alpha = std::polar(0.5, M_PI / 4.0);
  const Ket expected = coherent_state(BosonicModeSpec{15, alpha});
  EXPECT_LE((c.initial.factors[0] - expected).norm(), 1e-12);
  EXPECT_NEAR(std::abs(c.initial.factors[0].dot(c.initial.factors[1])), std::exp(-0.5), 1e-6);
}

TEST(ParseScenario, NonHermitianMatrixReported) {
  const auto msg = error_of(R"Y(
system: custom
dims: [2, 1]
hamiltonian:
  type: matrix-literal
  matrix: [[1, 2], [0, 1]]
initial: [up, "basis(0)"]
)Y");
  EXPECT_NE(msg.find("not Hermitian"), std::string::npos) << msg;
  EXPECT_NE(msg.find("max|H - H^+| = 2"), std::string::npos) << msg;
}

TEST(ParseScenario, UnknownKeyNamed) {
  const auto msg = error_of(R"Y(
system: qubit-pair
hamiltonian: {type: swap, kapa: 1}
initial: [up, plus]
)Y");
  EXPECT_NE(msg.find("hamiltonian.kapa"), std::string::npos) << msg;
  EXPECT_NE(error_of(std::string(kMinimalSwap) + "colour: red\n").find("'colour'"),
            std::string::npos);
}

TEST(ParseScenario, InconsistentDimsNameBothFields) {
  auto msg = error_of(R"Y(
system: custom
dims: [2, 3]
hamiltonian: {type: swap}
initial: [up, "basis(0)"]
)Y");
  EXPECT_NE(msg.find("dims"), std::string::npos) << msg;
  EXPECT_NE(msg.find("hamiltonian.type"), std::string::npos) << msg;
  msg = error_of(R"Y(
system: qubit-pair
hamiltonian: {type: swap}
initial: [up, plus, down]
)Y");
  EXPECT_NE(msg.find("initial"), std::string::npos) << msg;
  EXPECT_NE(msg.find("dims"), std::string::npos) << msg;
  msg = error_of(R"Y(
system: qubit-pair
dims: [2, 3]
hamiltonian: {type: swap}
initial: [up, plus]
)Y");
  EXPECT_NE(msg.find("dims conflicts with system"), std::string::npos) << msg;
}

TEST(ParseScenario, RejectsBadStatesAndObservables) {
  EXPECT_NE(error_of(R"Y(
system: qubit-pair
hamiltonian: {type: swap}
initial: [up, "coherent(0.1, 0)"]
)Y").find("bosonic"),
            std::string::npos);
  EXPECT_NE(error_of(R"Y(
system: qubit-pair
hamiltonian: {type: swap}
initial: [up, "amplitudes([1, 0, 0])"]
)Y").find("dims"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimalSwap) + "outputs: [x_a]\n").find("x_a"),
            std::string::npos);
  EXPECT_NE(error_of(R"Y(
system: qubit-pair
hamiltonian: {type: swap}
initial: [up, sideways]
)Y").find("sideways"),
            std::string::npos);
}

TEST(Override, DottedPathsAndIndices) {
  YAML::Node doc = load_document(kMinimalSwap);
  apply_override(doc, "grid.steps", "20");
  apply_override(doc, "initial.1", "down");
  apply_override(doc, "integrator.method", "spectral");
  apply_override(doc, "hamiltonian.kappa", "2.5");
  const auto c = parse_scenario(doc);
  EXPECT_EQ(c.grid.steps, 20u);
  EXPECT_EQ(c.initial_spec[1], "down");
  EXPECT_EQ(c.integrator.method, Method::spectral_exact);
  EXPECT_EQ(c.kappa, 2.5);
  EXPECT_THROW(apply_override(doc, "initial.7", "up"), ScenarioError);
  EXPECT_THROW(apply_override(doc, "grid..steps", "1"), ScenarioError);
}

TEST(CmdRun, QubitSwapCsvLayoutAndOracle) {
  const auto dir = scratch("run_swap");
  const auto c = parse_scenario_text(scenario_file("qubit_swap"));
  cmd_run(c, dir);
  const auto sse = parse_csv(read(dir / "qubit_swap_sse.csv"));
  const auto se = parse_csv(read(dir / "qubit_swap_se.csv"));
  EXPECT_EQ(sse.header, (std::vector<std::string>{"tau", "norm_a", "norm_b", "energy", "sx_a",
                                                  "sy_a", "sz_a", "sx_b", "sy_b", "sz_b",
                                                  "lambda_minus", "fidelity_oracle"}));
  EXPECT_EQ(se.header[1], "norm");
  EXPECT_EQ(sse.rows.size(), c.grid.points());
  for (const auto& csv : {sse, se})
    for (const auto& row : csv.rows) {
      ASSERT_EQ(row.size(), csv.header.size());
      EXPECT_GE(row[csv.column("fidelity_oracle")], 1.0 - 1e-8);
    }
  // separable factors stay on the plane x + z = 1
  for (const auto& row : sse.rows)
    EXPECT_NEAR(row[sse.column("sx_a")] + row[sse.column("sz_a")], 1.0, 1e-8);
  const auto record = nlohmann::json::parse(read(dir / "qubit_swap.json"));
  EXPECT_EQ(record["schema_version"], kRecordSchemaVersion);
  EXPECT_EQ(record["version"], kToolVersion);
  EXPECT_EQ(record["scenario_hash"].get<std::string>().size(), 16u);
}

TEST(CmdRun, DeterministicLfOutput) {
  const auto c = parse_scenario_text(scenario_file("qubit_swap"));
  const auto d1 = scratch("det1"), d2 = scratch("det2");
  const auto r1 = cmd_run(c, d1);
  const auto r2 = cmd_run(c, d2);
  for (const char* f : {"qubit_swap_se.csv", "qubit_swap_sse.csv"}) {
    const auto a = read(d1 / f);
    EXPECT_EQ(a, read(d2 / f));
    EXPECT_EQ(a.find('\r'), std::string::npos);
  }
  EXPECT_EQ(r1.scenario_hash, r2.scenario_hash);
}

TEST(CmdRun, ZeroHamiltonianObservablesConstant) {
  const auto dir = scratch("zero");
  cmd_run(parse_scenario_text(scenario_file("zero_hamiltonian")), dir);
  for (const char* f : {"zero_hamiltonian_se.csv", "zero_hamiltonian_sse.csv"}) {
    const auto csv = parse_csv(read(dir / f));
    for (std::size_t col = 1; col < csv.header.size(); ++col)
      for (const auto& row : csv.rows)
        EXPECT_NEAR(row[col], csv.rows.front()[col], 1e-14) << f << " " << csv.header[col];
  }
}

TEST(CmdRun, ReportsNumericalFailureAndIoErrors) {
  YAML::Node doc = load_document(kMinimalSwap);
  apply_override(doc, "hamiltonian.kappa", "1e300");
  apply_override(doc, "grid.steps", "4");
  apply_override(doc, "grid.tau_max", "1000");
  EXPECT_THROW(cmd_run(parse_scenario(doc), scratch("nan")), NumericalFailure);

  const auto dir = scratch("io");
  std::ofstream(dir / "blocker") << "x";
  EXPECT_THROW(cmd_run(parse_scenario_text(kMinimalSwap), dir / "blocker"), IoError);
}

TEST(CmdVerify, DefaultSwapPasses) {
  std::ostringstream table;
  const auto rec = cmd_verify(parse_scenario_text(scenario_file("qubit_swap")), scratch("v1"), table);
  EXPECT_TRUE(rec.all_passed()) << table.str();
  EXPECT_NE(table.str().find("sse_oracle_infidelity"), std::string::npos);
}

TEST(CmdVerify, CoarseGridFailsWithDrift) {
  std::ostringstream table;
  const auto rec =
      cmd_verify(parse_scenario_text(scenario_file("coarse_grid")), scratch("v2"), table);
  EXPECT_FALSE(rec.all_passed());
  const auto it = std::find_if(rec.checks.begin(), rec.checks.end(),
                               [](const CheckResult& c) { return c.name == "sse_norm_drift"; });
  ASSERT_NE(it, rec.checks.end());
  EXPECT_FALSE(it->passed);
  EXPECT_GT(it->value, 1e-8);
  EXPECT_NE(table.str().find("FAIL"), std::string::npos);
}

TEST(CmdVerify, SinglePartyMatchesSchrodinger) {
  std::ostringstream table;
  const auto rec =
      cmd_verify(parse_scenario_text(scenario_file("single_party")), scratch("v3"), table);
  EXPECT_TRUE(rec.all_passed()) << table.str();
  EXPECT_TRUE(std::any_of(rec.checks.begin(), rec.checks.end(), [](const CheckResult& c) {
    return c.name == "single_party_se_equivalence" && c.passed;
  }));
}

TEST(CmdSweep, RecurrenceFollowsOverlap) {
  YAML::Node doc = load_document(kMinimalSwap);
  apply_override(doc, "grid.tau_max", "13.5");
  apply_override(doc, "name", "qsweep");
  std::vector<std::string> values;
  const std::vector<Real> qs{0.25, 0.5, 0.75, 1.0};
  for (Real q : qs)
    values.push_back(format_real(std::acos(q)));
  const auto csv = parse_csv(cmd_sweep(doc, "q-angle", values, scratch("sweep_q")));
  ASSERT_EQ(csv.rows.size(), qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    EXPECT_NEAR(csv.rows[i][csv.column("q")], qs[i], 1e-12);
    const Real rec = csv.rows[i][csv.column("sse_recurrence")];
    if (qs[i] < 1.0)
      EXPECT_NEAR(rec, M_PI / qs[i], 0.01 * M_PI / qs[i]);
    else
      EXPECT_TRUE(std::isnan(rec));
  }
}

TEST(CmdSweep, DriftShrinksWithSteps) {
  YAML::Node doc = load_document(scenario_file("qubit_swap"));
  const std::vector<std::string> values{"500", "1000", "2000", "4000"};
  const auto csv = parse_csv(cmd_sweep(doc, "steps", values, scratch("sweep_steps")));
  const auto col = csv.column("sse_max_energy_drift");
  for (std::size_t i = 1; i < values.size(); ++i) {
    const Real ratio = csv.rows[i - 1][col] / csv.rows[i][col];
    EXPECT_GT(ratio, 8.0) << "between " << values[i - 1] << " and " << values[i];
  }
}

TEST(CmdSweep, SingleValueMatchesRunSummary) {
  YAML::Node doc = load_document(kMinimalSwap);
  const auto csv = parse_csv(cmd_sweep(doc, "kappa", {"1"}, scratch("sweep_one")));
  const auto rec = cmd_run(parse_scenario(doc), scratch("sweep_one_run"));
  ASSERT_EQ(csv.rows.size(), 1u);
  EXPECT_EQ(csv.rows[0][csv.column("sse_recurrence")], rec.summary.sse_recurrence);
  EXPECT_EQ(csv.rows[0][csv.column("max_lambda_minus_se")], rec.summary.max_lambda_minus_se);
  EXPECT_EQ(csv.rows[0][csv.column("sse_max_norm_drift")], rec.summary.sse_max_norm_drift);
}

TEST(CmdSweep, RejectsUnknownParameter) {
  YAML::Node doc = load_document(kMinimalSwap);
  EXPECT_THROW(cmd_sweep(doc, "temperature", {"1"}, scratch("sweep_bad")), ScenarioError);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(std::stod(format_real(M_PI)), M_PI);
  EXPECT_EQ(format_real(std::nan("")), "nan");
}
