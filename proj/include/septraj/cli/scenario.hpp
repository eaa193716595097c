// Copyright The septraj Authors.
// SPDX-License-Identifier: Apache-2.0

// Scenario files: YAML documents describing a composite system, its
// Hamiltonian, the initial product state, the time grid and the requested
// observables. See README.md for the grammar.

#pragma once

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "septraj/dynamics.hpp"
#include "septraj/hamiltonians.hpp"

namespace septraj::cli {

inline constexpr std::size_t kDefaultNMax = 15;
inline constexpr std::size_t kStepsPerCycle = 2000;

/// Raised for malformed or inconsistent scenario documents.
class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SystemKind { qubit_pair, boson_pair, custom, multipartite };
enum class HamiltonianKind { swap, spin_spin, beam_splitter, matrix_literal };

struct ScenarioConfig {
  std::string name = "scenario";
  SystemKind system = SystemKind::qubit_pair;
  std::vector<std::size_t> dims;
  HamiltonianKind hamiltonian = HamiltonianKind::swap;
  Real kappa = 1.0;
  std::size_t n_max = kDefaultNMax;
  DenseOperator matrix;                  ///< matrix-literal only
  std::vector<std::string> initial_spec; ///< as written, for reports
  ProductState initial;
  TimeGrid grid;
  std::vector<std::string> outputs;
  IntegratorConfig integrator;
  std::vector<bool> bosonic;
  std::string canonical; ///< emitted YAML of the effective document

  std::size_t parties() const { return dims.size(); }
  TensorSpace space() const { return TensorSpace(dims); }

  /// The closed-form swap solution applies (H = kappa V on two equal factors).
  bool has_swap_oracle() const {
    return parties() == 2 && dims[0] == dims[1] &&
           (hamiltonian == HamiltonianKind::swap || hamiltonian == HamiltonianKind::spin_spin);
  }
};

inline std::string to_string(SystemKind k) {
  switch (k) {
  case SystemKind::qubit_pair: return "qubit-pair";
  case SystemKind::boson_pair: return "boson-pair";
  case SystemKind::custom: return "custom";
  case SystemKind::multipartite: return "multipartite";
  }
  return "?";
}

inline std::string to_string(HamiltonianKind k) {
  switch (k) {
  case HamiltonianKind::swap: return "swap";
  case HamiltonianKind::spin_spin: return "spin-spin";
  case HamiltonianKind::beam_splitter: return "beam-splitter";
  case HamiltonianKind::matrix_literal: return "matrix-literal";
  }
  return "?";
}

namespace detail {

inline void require_keys(const YAML::Node& node, const std::string& where,
                         const std::set<std::string>& allowed) {
  if (!node.IsMap())
    throw ScenarioError(where + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key))
      throw ScenarioError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& field) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ScenarioError(field + ": cannot read value '" + YAML::Dump(node) + "'");
  }
}

inline Complex complex_entry(const YAML::Node& node, const std::string& field) {
  if (node.IsSequence()) {
    if (node.size() != 2)
      throw ScenarioError(field + ": complex entries are [re, im]");
    return {scalar<Real>(node[0], field), scalar<Real>(node[1], field)};
  }
  return {scalar<Real>(node, field), 0.0};
}

/// Splits "name(args)" into name and args; plain "name" gives empty args.
inline std::pair<std::string, std::optional<std::string>> split_call(const std::string& text) {
  const auto open = text.find('(');
  if (open == std::string::npos)
    return {text, std::nullopt};
  if (text.back() != ')')
    throw ScenarioError("malformed state spec '" + text + "'");
  return {text.substr(0, open), text.substr(open + 1, text.size() - open - 2)};
}

inline Ket parse_state(const std::string& spec, std::size_t dim, bool bosonic,
                       const std::string& field) {
  const auto [name, args] = split_call(spec);
  const auto need_qubit = [&] {
    if (dim != 2)
      throw ScenarioError(field + ": '" + name + "' needs a qubit, but the party has dim " +
                          std::to_string(dim));
  };
  if (name == "up" || name == "down" || name == "plus") {
    need_qubit();
    if (name == "up")
      return basis_ket(2, 0);
    if (name == "down")
      return basis_ket(2, 1);
    return (basis_ket(2, 0) + basis_ket(2, 1)) / std::sqrt(2.0);
  }
  if (!args)
    throw ScenarioError(field + ": unknown state '" + spec + "'");
  YAML::Node list;
  try {
    list = YAML::Load("[" + *args + "]");
  } catch (const YAML::Exception&) {
    throw ScenarioError(field + ": malformed arguments in '" + spec + "'");
  }
  if (list.size() == 0)
    throw ScenarioError(field + ": '" + name + "' needs arguments");
  if (name == "basis") {
    const auto k = scalar<std::size_t>(list[0], field);
    if (list.size() != 1 || k >= dim)
      throw ScenarioError(field + ": basis index out of range for dim " + std::to_string(dim));
    return basis_ket(dim, k);
  }
  if (name == "angle") {
    // cos(theta)|0> + sin(theta)|1>; with a partner |0> the overlap is cos(theta)
    need_qubit();
    const Real theta = scalar<Real>(list[0], field);
    Ket v(2);
    v << std::cos(theta), std::sin(theta);
    return v;
  }
  if (name == "coherent") {
    if (!bosonic)
      throw ScenarioError(field + ": coherent states need a bosonic party");
    if (list.size() != 2)
      throw ScenarioError(field + ": coherent(re, im) takes two numbers");
    const Complex alpha(scalar<Real>(list[0], field), scalar<Real>(list[1], field));
    try {
      return coherent_state(BosonicModeSpec{dim - 1, alpha});
    } catch (const InvalidArgument& e) {
      throw ScenarioError(field + ": " + e.what());
    }
  }
  if (name == "amplitudes") {
    const YAML::Node amps = list.size() == 1 && list[0].IsSequence() ? list[0] : list;
    if (amps.size() != dim)
      throw ScenarioError(field + " has " + std::to_string(amps.size()) +
                          " amplitudes but dims entry is " + std::to_string(dim));
    Ket v(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i)
      v[static_cast<Eigen::Index>(i)] = complex_entry(amps[i], field);
    if (v.norm() == 0.0)
      throw ScenarioError(field + ": zero amplitude vector");
    return v / v.norm();
  }
  throw ScenarioError(field + ": unknown state '" + spec + "'");
}

inline std::vector<std::string> default_outputs(const ScenarioConfig& c) {
  std::vector<std::string> out;
  for (std::size_t p = 0; p < c.parties(); ++p) {
    const auto label = party_label(p, c.parties());
    if (c.bosonic[p]) {
      out.push_back("x_" + label);
      out.push_back("p_" + label);
    } else if (c.dims[p] == 2) {
      for (const char* axis : {"sx_", "sy_", "sz_"})
        out.push_back(axis + label);
    }
  }
  return out;
}

inline std::vector<std::string> available_outputs(const ScenarioConfig& c) {
  std::vector<std::string> out;
  for (std::size_t p = 0; p < c.parties(); ++p) {
    const auto label = party_label(p, c.parties());
    if (c.dims[p] == 2)
      for (const char* axis : {"sx_", "sy_", "sz_"})
        out.push_back(axis + label);
    if (c.bosonic[p]) {
      out.push_back("x_" + label);
      out.push_back("p_" + label);
    }
  }
  return out;
}

} // namespace detail

/// Validates a scenario document and fills defaults.
inline ScenarioConfig parse_scenario(const YAML::Node& doc) {
  using detail::scalar;
  detail::require_keys(doc, "", {"name", "system", "dims", "hamiltonian", "initial", "grid",
                                 "outputs", "integrator"});
  ScenarioConfig c;
  if (doc["name"])
    c.name = scalar<std::string>(doc["name"], "name");

  if (!doc["system"])
    throw ScenarioError("missing key 'system'");
  const auto system = scalar<std::string>(doc["system"], "system");
  if (system == "qubit-pair")
    c.system = SystemKind::qubit_pair;
  else if (system == "boson-pair")
    c.system = SystemKind::boson_pair;
  else if (system == "custom")
    c.system = SystemKind::custom;
  else if (system == "multipartite")
    c.system = SystemKind::multipartite;
  else
    throw ScenarioError("system: unknown system '" + system + "'");

  if (!doc["hamiltonian"])
    throw ScenarioError("missing key 'hamiltonian'");
  const YAML::Node ham = doc["hamiltonian"];
  detail::require_keys(ham, "hamiltonian", {"type", "kappa", "n_max", "matrix"});
  const auto type = scalar<std::string>(ham["type"], "hamiltonian.type");
  if (type == "swap")
    c.hamiltonian = HamiltonianKind::swap;
  else if (type == "spin-spin")
    c.hamiltonian = HamiltonianKind::spin_spin;
  else if (type == "beam-splitter")
    c.hamiltonian = HamiltonianKind::beam_splitter;
  else if (type == "matrix-literal")
    c.hamiltonian = HamiltonianKind::matrix_literal;
  else
    throw ScenarioError("hamiltonian.type: unknown Hamiltonian '" + type + "'");
  if (ham["kappa"])
    c.kappa = scalar<Real>(ham["kappa"], "hamiltonian.kappa");
  if (!std::isfinite(c.kappa) || c.kappa == 0.0)
    throw ScenarioError("hamiltonian.kappa must be finite and nonzero");
  if (ham["n_max"])
    c.n_max = scalar<std::size_t>(ham["n_max"], "hamiltonian.n_max");
  if (c.n_max < 1)
    throw ScenarioError("hamiltonian.n_max must be >= 1");

  if (doc["dims"])
    c.dims = scalar<std::vector<std::size_t>>(doc["dims"], "dims");
  const auto check_dims = [&](const std::vector<std::size_t>& implied, const std::string& by) {
    if (!doc["dims"])
      c.dims = implied;
    else if (c.dims != implied)
      throw ScenarioError("dims conflicts with " + by);
  };
  switch (c.system) {
  case SystemKind::qubit_pair:
    check_dims({2, 2}, "system: qubit-pair");
    break;
  case SystemKind::boson_pair:
    check_dims({c.n_max + 1, c.n_max + 1}, "hamiltonian.n_max (boson-pair uses n_max + 1 levels)");
    break;
  case SystemKind::custom:
    if (c.dims.size() != 2)
      throw ScenarioError("dims: custom systems need exactly two entries");
    break;
  case SystemKind::multipartite:
    if (c.dims.empty())
      throw ScenarioError("dims: multipartite systems need at least one entry");
    break;
  }
  for (auto d : c.dims)
    if (d < 1)
      throw ScenarioError("dims: every party needs dimension >= 1");
  c.bosonic.assign(c.dims.size(), c.system == SystemKind::boson_pair);

  std::size_t total = 1;
  for (auto d : c.dims)
    total *= d;
  switch (c.hamiltonian) {
  case HamiltonianKind::swap:
    if (c.dims.size() != 2 || c.dims[0] != c.dims[1])
      throw ScenarioError("dims conflicts with hamiltonian.type: swap needs two equal dims");
    break;
  case HamiltonianKind::spin_spin:
    if (c.system != SystemKind::qubit_pair)
      throw ScenarioError("system conflicts with hamiltonian.type: spin-spin needs qubit-pair");
    break;
  case HamiltonianKind::beam_splitter:
    if (c.system != SystemKind::boson_pair)
      throw ScenarioError("system conflicts with hamiltonian.type: beam-splitter needs boson-pair");
    break;
  case HamiltonianKind::matrix_literal: {
    if (!ham["matrix"] || !ham["matrix"].IsSequence())
      throw ScenarioError("hamiltonian.matrix: matrix-literal needs a list of rows");
    const YAML::Node rows = ham["matrix"];
    if (rows.size() != total)
      throw ScenarioError("hamiltonian.matrix has " + std::to_string(rows.size()) +
                          " rows but dims imply " + std::to_string(total));
    const auto n = static_cast<Eigen::Index>(total);
    c.matrix = DenseOperator(n, n);
    for (std::size_t r = 0; r < total; ++r) {
      if (!rows[r].IsSequence() || rows[r].size() != total)
        throw ScenarioError("hamiltonian.matrix row " + std::to_string(r) + " needs " +
                            std::to_string(total) + " entries to match dims");
      for (std::size_t col = 0; col < total; ++col)
        c.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) =
            detail::complex_entry(rows[r][col], "hamiltonian.matrix");
    }
    if (!c.matrix.allFinite())
      throw ScenarioError("hamiltonian.matrix has non-finite entries");
    const Real defect = hermiticity_defect(c.matrix);
    if (defect > kHermitianTolerance) {
      std::ostringstream msg;
      msg << "hamiltonian.matrix is not Hermitian: max|H - H^+| = " << defect << " > "
          << kHermitianTolerance;
      throw ScenarioError(msg.str());
    }
    break;
  }
  }
  if (ham["matrix"] && c.hamiltonian != HamiltonianKind::matrix_literal)
    throw ScenarioError("hamiltonian.matrix is only valid for matrix-literal");

  if (!doc["initial"] || !doc["initial"].IsSequence())
    throw ScenarioError("initial: expected a list with one state per party");
  const YAML::Node init = doc["initial"];
  if (init.size() != c.dims.size())
    throw ScenarioError("initial has " + std::to_string(init.size()) +
                        " entries but dims has " + std::to_string(c.dims.size()));
  for (std::size_t p = 0; p < init.size(); ++p) {
    const std::string field = "initial[" + std::to_string(p) + "]";
    const auto spec = scalar<std::string>(init[p], field);
    c.initial_spec.push_back(spec);
    c.initial.factors.push_back(detail::parse_state(spec, c.dims[p], c.bosonic[p], field));
  }

  Real tau_max = 2.0 * M_PI;
  std::optional<std::size_t> steps;
  if (doc["grid"]) {
    detail::require_keys(doc["grid"], "grid", {"tau_max", "steps"});
    if (doc["grid"]["tau_max"])
      tau_max = scalar<Real>(doc["grid"]["tau_max"], "grid.tau_max");
    if (doc["grid"]["steps"])
      steps = scalar<std::size_t>(doc["grid"]["steps"], "grid.steps");
  }
  if (!(tau_max > 0.0) || !std::isfinite(tau_max))
    throw ScenarioError("grid.tau_max must be positive and finite");
  if (!steps)
    steps = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(kStepsPerCycle * tau_max / (2.0 * M_PI))));
  if (*steps < 1)
    throw ScenarioError("grid.steps must be >= 1");
  c.grid = TimeGrid(0.0, tau_max, *steps);

  if (doc["integrator"]) {
    const YAML::Node ig = doc["integrator"];
    detail::require_keys(ig, "integrator", {"method", "renormalize_each_step", "tolerance"});
    if (ig["method"]) {
      const auto m = scalar<std::string>(ig["method"], "integrator.method");
      if (m == "rk4")
        c.integrator.method = Method::rk4;
      else if (m == "spectral")
        c.integrator.method = Method::spectral_exact;
      else
        throw ScenarioError("integrator.method: expected rk4 or spectral, got '" + m + "'");
    }
    if (ig["renormalize_each_step"])
      c.integrator.renormalize_each_step =
          scalar<bool>(ig["renormalize_each_step"], "integrator.renormalize_each_step");
    if (ig["tolerance"])
      c.integrator.tolerance = scalar<Real>(ig["tolerance"], "integrator.tolerance");
    if (!(c.integrator.tolerance > 0.0))
      throw ScenarioError("integrator.tolerance must be > 0");
  }

  const auto available = detail::available_outputs(c);
  if (doc["outputs"]) {
    c.outputs = scalar<std::vector<std::string>>(doc["outputs"], "outputs");
    for (const auto& o : c.outputs)
      if (std::find(available.begin(), available.end(), o) == available.end())
        throw ScenarioError("outputs: observable '" + o + "' is not defined for system " +
                            to_string(c.system));
  } else {
    c.outputs = detail::default_outputs(c);
  }

  YAML::Emitter out;
  out << doc;
  c.canonical = out.c_str();
  return c;
}

/// Sets `path` (dot separated; list indices as numbers) to the YAML value
/// `value`, creating intermediate maps as needed.
inline void apply_override(YAML::Node& doc, const std::string& path, const std::string& value) {
  if (path.empty())
    throw ScenarioError("override: empty key");
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty())
      throw ScenarioError("override: malformed key '" + path + "'");
    parts.push_back(part);
  }
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception& e) {
    throw ScenarioError("override " + path + ": " + e.what());
  }
  std::vector<YAML::Node> chain{doc};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node cur = chain.back();
    std::size_t index = 0;
    const auto [ptr, ec] =
        std::from_chars(parts[i].data(), parts[i].data() + parts[i].size(), index);
    if (cur.IsSequence() && ec == std::errc() && ptr == parts[i].data() + parts[i].size()) {
      if (index >= cur.size())
        throw ScenarioError("override: index out of range in '" + path + "'");
      chain.push_back(cur[index]);
    } else {
      chain.push_back(cur[parts[i]]);
    }
  }
  YAML::Node parent = chain.back();
  const std::string& last = parts.back();
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(last.data(), last.data() + last.size(), index);
  if (parent.IsSequence() && ec == std::errc() && ptr == last.data() + last.size()) {
    if (index >= parent.size())
      throw ScenarioError("override: index out of range in '" + path + "'");
    parent[index] = parsed;
  } else {
    parent[last] = parsed;
  }
}

inline YAML::Node load_document(const std::string& text) {
  try {
    YAML::Node doc = YAML::Load(text);
    if (!doc.IsMap())
      throw ScenarioError("scenario: top level must be a mapping");
    return doc;
  } catch (const YAML::Exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

inline ScenarioConfig parse_scenario_text(const std::string& text) {
  return parse_scenario(load_document(text));
}

inline HamiltonianDecomposition build_hamiltonian(const ScenarioConfig& c) {
  switch (c.hamiltonian) {
  case HamiltonianKind::swap:
    return build_swap_hamiltonian(c.dims[0], c.kappa);
  case HamiltonianKind::spin_spin:
    return build_spin_spin(c.kappa);
  case HamiltonianKind::beam_splitter:
    return build_beam_splitter_approx(c.kappa, c.n_max);
  case HamiltonianKind::matrix_literal:
    break;
  }
  HamiltonianDecomposition d;
  d.space = c.space();
  d.interaction = c.matrix;
  for (auto dim : c.dims)
    d.local_parts.push_back(DenseOperator::Zero(static_cast<Eigen::Index>(dim),
                                                static_cast<Eigen::Index>(dim)));
  return d;
}

/// 64-bit FNV-1a over the canonical scenario text.
inline std::uint64_t scenario_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

} // namespace septraj::cli
