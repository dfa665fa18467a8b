// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROWDSENSE_CONFIG_HPP_
#define CROWDSENSE_CONFIG_HPP_

// Experiment configuration: strict JSON parsing with defaults, and the
// resolved-config echo written next to results.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "crowdsense/errors.hpp"
#include "crowdsense/mechanisms.hpp"
#include "crowdsense/scenario.hpp"

namespace crowdsense {

using json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "crowdsense 1.0.0";
inline constexpr const char* kCsvSchema = "crowdsense-results v1";

struct ExperimentConfig {
  ScenarioParams scenario;
  std::vector<MechanismSpec> mechanisms;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::string output = "results";

  void validate() const {
    scenario.validate();
    if (iterations == 0) throw ConfigError("iterations: must be >= 1");
    if (mechanisms.empty()) throw ConfigError("mechanisms: at least one entry is required");
    std::set<std::string> names;
    for (const auto& m : mechanisms) {
      if (m.name.empty()) throw ConfigError("mechanisms[].name: must be non-empty");
      if (!names.insert(m.name).second) {
        throw ConfigError("mechanisms: duplicate name '" + m.name + "'");
      }
      try {
        m.config.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("mechanisms[" + m.name + "]: " + e.what());
      }
    }
  }
};

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown field '" + where + "." + key + "'");
  }
}

inline const json& require(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ConfigError("missing required field '" + where + "." + key + "'");
  }
  return *it;
}

template <typename T>
T read(const json& obj, const std::string& where, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

template <typename T>
T read_required(const json& obj, const std::string& where, const char* key) {
  const json& j = require(obj, where, key);
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + where + "." + key + "' has the wrong type");
  }
}

inline CostKind read_cost_kind(const json& obj, const std::string& where) {
  const auto s = read<std::string>(obj, where, "cost_kind", "uniform");
  try {
    return parse_cost_kind(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".cost_kind: " + e.what());
  }
}

inline std::string oracle_name(OracleKind k) {
  return k == OracleKind::mc_eu ? "mc_eu" : "best_case_u";
}

inline std::string objective_name(VmObjective k) {
  return k == VmObjective::value ? "value" : "expected_value";
}

}  // namespace detail

inline ScenarioParams parse_scenario(const json& j) {
  const std::string w = "scenario";
  detail::reject_unknown(j, w,
                         {"area_km", "grid_resolution_km", "n_users", "kernel", "kappa",
                          "alpha", "delta_c", "cost_kind", "rho", "min_distance_km"});
  ScenarioParams s;
  s.area_km = detail::read(j, w, "area_km", s.area_km);
  s.grid_resolution_km = detail::read(j, w, "grid_resolution_km", s.grid_resolution_km);
  s.n_users = detail::read_required<std::size_t>(j, w, "n_users");
  s.valuation.kappa = detail::read_required<double>(j, w, "kappa");
  s.valuation.alpha = detail::read(j, w, "alpha", 0.0);
  s.delta_c = detail::read(j, w, "delta_c", s.delta_c);
  s.cost_kind = detail::read_cost_kind(j, w);
  s.rho = detail::read(j, w, "rho", s.rho);
  s.min_distance_km = detail::read(j, w, "min_distance_km", s.min_distance_km);
  if (auto it = j.find("kernel"); it != j.end()) {
    detail::reject_unknown(*it, w + ".kernel", {"sill", "range_km"});
    s.kernel.sill = detail::read(*it, w + ".kernel", "sill", s.kernel.sill);
    s.kernel.range = detail::read(*it, w + ".kernel", "range_km", s.kernel.range);
  }
  return s;
}

inline MechanismSpec parse_mechanism(const json& j, std::size_t index) {
  const std::string w = "mechanisms[" + std::to_string(index) + "]";
  detail::reject_unknown(j, w,
                         {"name", "kind", "oracle", "gamma_grid", "tau", "mc_iterations",
                          "exact_max_size", "budget", "tau_ev", "vm_objective",
                          "singleton_fallback", "always_recompute"});
  MechanismSpec m;
  m.name = detail::read_required<std::string>(j, w, "name");
  try {
    m.kind = parse_mechanism_kind(detail::read_required<std::string>(j, w, "kind"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(w + ".kind: " + e.what());
  }
  MechanismConfig& c = m.config;
  const auto oracle = detail::read<std::string>(j, w, "oracle", "mc_eu");
  if (oracle == "mc_eu") {
    c.oracle_kind = OracleKind::mc_eu;
  } else if (oracle == "best_case_u") {
    c.oracle_kind = OracleKind::best_case_u;
  } else {
    throw ConfigError(w + ".oracle: expected 'mc_eu' or 'best_case_u'");
  }
  c.gamma_grid = detail::read(j, w, "gamma_grid", c.gamma_grid);
  c.tau = detail::read(j, w, "tau", c.tau);
  c.mc_iterations = detail::read(j, w, "mc_iterations", c.mc_iterations);
  c.exact_max_size = detail::read(j, w, "exact_max_size", c.exact_max_size);
  c.budget = detail::read(j, w, "budget", c.budget);
  c.tau_ev = detail::read(j, w, "tau_ev", c.tau_ev);
  const auto objective = detail::read<std::string>(j, w, "vm_objective", "value");
  if (objective == "value") {
    c.vm_objective = VmObjective::value;
  } else if (objective == "expected_value") {
    c.vm_objective = VmObjective::expected_value;
  } else {
    throw ConfigError(w + ".vm_objective: expected 'value' or 'expected_value'");
  }
  c.singleton_fallback = detail::read(j, w, "singleton_fallback", c.singleton_fallback);
  c.always_recompute = detail::read(j, w, "always_recompute", c.always_recompute);
  return m;
}

inline ExperimentConfig parse_config(const json& j) {
  detail::reject_unknown(j, "config", {"scenario", "mechanisms", "iterations", "seed", "output"});
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(detail::require(j, "config", "scenario"));
  const json& mechs = detail::require(j, "config", "mechanisms");
  if (!mechs.is_array()) throw ConfigError("config.mechanisms: expected an array");
  for (std::size_t i = 0; i < mechs.size(); ++i) {
    cfg.mechanisms.push_back(parse_mechanism(mechs[i], i));
  }
  cfg.iterations = detail::read_required<std::size_t>(j, "config", "iterations");
  cfg.seed = detail::read_required<std::uint64_t>(j, "config", "seed");
  cfg.output = detail::read(j, "config", "output", cfg.output);
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

inline json to_json(const ScenarioParams& s) {
  return {{"area_km", s.area_km},
          {"grid_resolution_km", s.grid_resolution_km},
          {"n_users", s.n_users},
          {"kernel", {{"sill", s.kernel.sill}, {"range_km", s.kernel.range}}},
          {"kappa", s.valuation.kappa},
          {"alpha", s.valuation.alpha},
          {"delta_c", s.delta_c},
          {"cost_kind", std::string(to_string(s.cost_kind))},
          {"rho", s.rho},
          {"min_distance_km", s.min_distance_km}};
}

inline json to_json(const MechanismSpec& m) {
  const MechanismConfig& c = m.config;
  return {{"name", m.name},
          {"kind", std::string(to_string(m.kind))},
          {"oracle", detail::oracle_name(c.oracle_kind)},
          {"gamma_grid", c.gamma_grid},
          {"tau", c.tau},
          {"mc_iterations", c.mc_iterations},
          {"exact_max_size", c.exact_max_size},
          {"budget", c.budget},
          {"tau_ev", c.tau_ev},
          {"vm_objective", detail::objective_name(c.vm_objective)},
          {"singleton_fallback", c.singleton_fallback},
          {"always_recompute", c.always_recompute}};
}

inline json to_json(const ExperimentConfig& cfg) {
  json mechs = json::array();
  for (const auto& m : cfg.mechanisms) mechs.push_back(to_json(m));
  return {{"scenario", to_json(cfg.scenario)},
          {"mechanisms", mechs},
          {"iterations", cfg.iterations},
          {"seed", cfg.seed},
          {"output", cfg.output}};
}

}  // namespace crowdsense

#endif  // CROWDSENSE_CONFIG_HPP_
