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

// Command-line front end: tutorial, run, sweep, map and selftest.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "crowdsense/config.hpp"
#include "crowdsense/harness.hpp"
#include "crowdsense/selftest.hpp"
#include "crowdsense/tutorial.hpp"

namespace {

using namespace crowdsense;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> mc_iters;
  std::size_t parallel = 1;
  bool timing = false;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "Override the master seed");
  cmd->add_option("--out", o.out, "Output path prefix (writes .csv and .json)");
  cmd->add_option("--iterations", o.iterations, "Override the iteration count");
  cmd->add_option("--mc-iters", o.mc_iters, "Override MC iterations for every mechanism");
  cmd->add_option("--parallel", o.parallel, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--timing", o.timing, "Record wall-clock time per row");
}

ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  ExperimentConfig cfg = load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.output = *o.out;
  if (o.iterations) cfg.iterations = *o.iterations;
  if (o.mc_iters) {
    for (auto& m : cfg.mechanisms) m.config.mc_iterations = *o.mc_iters;
  }
  cfg.validate();
  return cfg;
}

void print_checks(const char* heading, const std::vector<tutorial::Check>& checks) {
  std::printf("%s\n", heading);
  for (const auto& c : checks) {
    std::printf("  %-4s %-52s computed %10.6f  target %10.6f  residual %+.2e\n",
                c.pass() ? "ok" : "MISS", c.name.c_str(), c.computed, c.target, c.residual());
  }
}

int cmd_tutorial() {
  const tutorial::Report rep = tutorial::run();
  print_checks("Valuation diagnostic (3x3 grid at unit spacing, natural log, kappa = 10):",
               rep.diagnostic);
  print_checks("Pricing algebra with tabulated values:", rep.algebra);
  std::printf("algebra suite: %s\n", rep.algebra_ok() ? "PASS" : "FAIL");
  return rep.algebra_ok() ? kExitOk : kExitCheckFailed;
}

void print_suite(const selftest::SuiteResult& r) {
  std::printf("[%s] %d %s: %s (%.2f s)\n", selftest::to_string(r.status), r.id,
              r.title.c_str(), r.detail.c_str(), r.seconds);
}

int cmd_selftest(bool trends) {
  bool ok = true;
  for (const auto& r : selftest::property_suites()) {
    print_suite(r);
    ok = ok && r.status != selftest::Status::fail;
  }
  if (trends) {
    selftest::TrendReport rep;
    const auto r = selftest::trend_reproduction(2026, 50, &rep);
    print_suite(r);
    for (const auto& [name, pass] : rep.checks) std::printf("    %s %s\n", pass ? "ok  " : "MISS", name.c_str());
    for (const auto& note : rep.notes) std::printf("    %s\n", note.c_str());
    ok = ok && r.status != selftest::Status::fail;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posted-price crowd-sensing mechanism simulator"};
  app.require_subcommand(1);

  app.add_subcommand("tutorial", "Two-user worked example and pricing algebra checks");

  Overrides run_o;
  std::string run_config;
  auto* run = app.add_subcommand("run", "Run a paired mechanism comparison from a config");
  run->add_option("--config", run_config, "Experiment config (JSON)")->required();
  add_override_flags(run, run_o);

  Overrides sweep_o;
  std::string sweep_config, sweep_axis, sweep_values;
  auto* sweep = app.add_subcommand("sweep", "Repeat a run over values of n, kappa or rho");
  sweep->add_option("--config", sweep_config, "Experiment config (JSON)")->required();
  sweep->add_option("--axis", sweep_axis, "n, kappa or rho")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated axis values")->required();
  add_override_flags(sweep, sweep_o);

  std::string map_config, map_measurements, map_out = "radio_map.csv";
  std::optional<std::uint64_t> map_seed;
  auto* map = app.add_subcommand("map", "Posterior radio map on the grid from measurements");
  map->add_option("--config", map_config, "Experiment config (JSON)")->required();
  map->add_option("--measurements", map_measurements, "CSV of user_id,dBm");
  map->add_option("--out", map_out, "Output CSV");
  map->add_option("--seed", map_seed, "Override the master seed");

  bool trends = false;
  auto* self = app.add_subcommand("selftest", "Run the property suites");
  self->add_flag("--trends", trends, "Also run the desk-scale trend comparison (minutes)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  if (app.got_subcommand("tutorial")) return guarded([] { return cmd_tutorial(); });
  if (app.got_subcommand("selftest")) return guarded([&] { return cmd_selftest(trends); });
  if (app.got_subcommand("run")) {
    return guarded([&] {
      const auto cfg = load_with_overrides(run_config, run_o);
      return crowdsense::cmd_run(cfg, RunOptions{run_o.parallel, run_o.timing});
    });
  }
  if (app.got_subcommand("sweep")) {
    return guarded([&] {
      const auto cfg = load_with_overrides(sweep_config, sweep_o);
      return crowdsense::cmd_sweep(cfg, parse_sweep_axis(sweep_axis), parse_values(sweep_values),
                                   RunOptions{sweep_o.parallel, sweep_o.timing});
    });
  }
  if (app.got_subcommand("map")) {
    return guarded([&] {
      auto cfg = load_config(map_config);
      if (map_seed) cfg.seed = *map_seed;
      return crowdsense::cmd_map(cfg, map_measurements, map_out);
    });
  }
  return kExitConfigError;
}
