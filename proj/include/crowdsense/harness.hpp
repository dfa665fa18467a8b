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

#ifndef CROWDSENSE_HARNESS_HPP_
#define CROWDSENSE_HARNESS_HPP_

// Command implementations behind the CLI: run, sweep and map, result
// serialization, and the exit-code convention.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "crowdsense/config.hpp"
#include "crowdsense/errors.hpp"
#include "crowdsense/scenario.hpp"
#include "crowdsense/spatial_gp.hpp"

namespace crowdsense {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
};

// Runs body, mapping configuration problems to 2 and everything else to 3.
inline int guarded(const std::function<int()>& body, std::ostream& err = std::cerr) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntimeError;
  }
}

// Shortest representation that round-trips.
inline std::string format_number(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kCsvColumns =
    "iteration,mechanism,utility,value,payment,batches,offers,gamma_star,wall_ms";

inline void write_csv_header(std::ostream& out, const std::string& axis = "") {
  out << "# " << kCsvSchema << "\n";
  if (!axis.empty()) out << axis << ",";
  out << kCsvColumns << "\n";
}

inline void write_csv_rows(std::ostream& out, const std::vector<IterationRecord>& rows,
                           const std::string& axis_value = "") {
  for (const auto& r : rows) {
    if (!axis_value.empty()) out << axis_value << ",";
    out << r.iteration << "," << r.mechanism << "," << format_number(r.utility) << ","
        << format_number(r.value) << "," << format_number(r.payment) << "," << r.batches
        << "," << r.offers << "," << format_number(r.gamma_star) << ","
        << format_number(r.wall_ms) << "\n";
  }
}

inline json moments_json(const Moments& m) { return {{"mean", m.mean}, {"stderr", m.stderr_}}; }

inline json summary_json(const std::vector<MechanismSummary>& summary) {
  json arr = json::array();
  for (const auto& s : summary) {
    arr.push_back({{"mechanism", s.name},
                   {"utility", moments_json(s.utility)},
                   {"value", moments_json(s.value)},
                   {"payment", moments_json(s.payment)},
                   {"batches", moments_json(s.batches)},
                   {"offers", moments_json(s.offers)},
                   {"gamma_star", moments_json(s.gamma_star)}});
  }
  return arr;
}

inline std::ofstream open_output(const std::string& path) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write output file '" + path + "'");
  return out;
}

inline void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  auto out = open_output(path);
  out << text;
  finish_output(out, path);
}

inline json run_summary(const ExperimentConfig& cfg, const ComparisonResult& result) {
  return {{"artifact_version", kArtifactVersion},
          {"csv_schema", kCsvSchema},
          {"seed", cfg.seed},
          {"config", to_json(cfg)},
          {"summary", summary_json(result.summary)}};
}

// Writes <output>.csv and <output>.json.
inline int cmd_run(const ExperimentConfig& cfg, const RunOptions& opts = {},
                   std::ostream& log = std::cout) {
  cfg.validate();
  const ComparisonResult result =
      run_comparison(cfg.scenario, cfg.mechanisms, cfg.iterations, cfg.seed, opts);
  std::ostringstream csv;
  write_csv_header(csv);
  write_csv_rows(csv, result.rows);
  write_text(cfg.output + ".csv", csv.str());
  write_text(cfg.output + ".json", run_summary(cfg, result).dump(2) + "\n");
  for (const auto& s : result.summary) {
    log << s.name << ": utility " << s.utility.mean << " +/- " << s.utility.stderr_
        << ", batches " << s.batches.mean << ", offers " << s.offers.mean << "\n";
  }
  return kExitOk;
}

enum class SweepAxis { n, kappa, rho };

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "n") return SweepAxis::n;
  if (s == "kappa") return SweepAxis::kappa;
  if (s == "rho") return SweepAxis::rho;
  throw ConfigError("sweep axis must be one of n, kappa, rho");
}

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::n: return "n";
    case SweepAxis::kappa: return "kappa";
    case SweepAxis::rho: return "rho";
  }
  return "?";
}

inline ScenarioParams with_axis(ScenarioParams s, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::n:
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw ConfigError("sweep values for n must be positive integers");
      }
      s.n_users = static_cast<std::size_t>(value);
      break;
    case SweepAxis::kappa: s.valuation.kappa = value; break;
    case SweepAxis::rho: s.rho = value; break;
  }
  s.validate();
  return s;
}

struct SweepPoint {
  double value = 0.0;
  ComparisonResult result;
};

// Every point reuses the master seed, so points share user draws (users are
// generated in order, so smaller n is a prefix of larger n) and cost draws.
inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& cfg, SweepAxis axis,
                                         const std::vector<double>& values,
                                         const RunOptions& opts = {}) {
  cfg.validate();
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<ScenarioParams> points;
  for (double x : values) points.push_back(with_axis(cfg.scenario, axis, x));
  std::vector<SweepPoint> out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    out.push_back({values[k], run_comparison(points[k], cfg.mechanisms, cfg.iterations,
                                             cfg.seed, opts)});
  }
  return out;
}

inline int cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis,
                     const std::vector<double>& values, const RunOptions& opts = {},
                     std::ostream& log = std::cout) {
  const auto points = run_sweep(cfg, axis, values, opts);
  std::ostringstream csv;
  write_csv_header(csv, to_string(axis));
  json pts = json::array();
  for (const auto& p : points) {
    write_csv_rows(csv, p.result.rows, format_number(p.value));
    pts.push_back({{"value", p.value}, {"summary", summary_json(p.result.summary)}});
    for (const auto& s : p.result.summary) {
      log << to_string(axis) << "=" << p.value << " " << s.name << ": utility "
          << s.utility.mean << " +/- " << s.utility.stderr_ << "\n";
    }
  }
  write_text(cfg.output + ".csv", csv.str());
  const json summary = {{"artifact_version", kArtifactVersion},
                        {"csv_schema", kCsvSchema},
                        {"seed", cfg.seed},
                        {"axis", to_string(axis)},
                        {"config", to_json(cfg)},
                        {"points", pts}};
  write_text(cfg.output + ".json", summary.dump(2) + "\n");
  return kExitOk;
}

struct Measurement {
  std::size_t user = 0;
  double dbm = 0.0;
};

// Lines of "user_id,dBm". Blank lines, '#' comments and a header line whose
// first field is not a number are skipped.
inline std::vector<Measurement> parse_measurements(std::istream& in) {
  std::vector<Measurement> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("measurements line " + std::to_string(lineno) + ": expected 'user,dBm'");
    }
    const std::string a = line.substr(0, comma), b = line.substr(comma + 1);
    std::size_t user = 0;
    auto [p, ec] = std::from_chars(a.data(), a.data() + a.size(), user);
    if (ec != std::errc() || p != a.data() + a.size()) {
      if (out.empty() && lineno == 1) continue;  // header
      throw ConfigError("measurements line " + std::to_string(lineno) + ": bad user id");
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(b, &used);
      out.push_back({user, v});
    } catch (const std::exception&) {
      throw ConfigError("measurements line " + std::to_string(lineno) + ": bad dBm value");
    }
  }
  return out;
}

struct MapPoint {
  Location location;
  double mean = 0.0;
  double variance = 0.0;
};

// Posterior mean and variance at every grid site given user measurements.
// The field is zero-mean shadowing around a constant level; the level is
// the average of the measurements (0 without any).
inline std::vector<MapPoint> radio_map(const SiteField& field,
                                       const std::vector<Measurement>& measurements) {
  std::vector<std::size_t> ids;
  for (const auto& m : measurements) {
    if (m.user >= field.num_users()) {
      throw ConfigError("measurement for unknown user " + std::to_string(m.user));
    }
    ids.push_back(m.user);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw ConfigError("more than one measurement for a user");
  }
  const SiteSubset given(ids);
  double level = 0.0;
  for (const auto& m : measurements) level += m.dbm;
  if (!measurements.empty()) level /= static_cast<double>(measurements.size());
  std::vector<double> values(given.size());
  for (const auto& m : measurements) {
    const auto pos = std::lower_bound(given.begin(), given.end(), m.user) - given.begin();
    values[pos] = m.dbm - level;
  }
  std::vector<MapPoint> out;
  for (std::size_t g = 0; g < field.num_grid(); ++g) {
    const std::size_t site = field.num_users() + g;
    out.push_back({field.location(site), level + conditional_mean(field, site, given, values),
                   conditional_variance(field, site, given)});
  }
  return out;
}

inline int cmd_map(const ExperimentConfig& cfg, const std::string& measurements_path,
                   const std::string& out_path) {
  cfg.scenario.validate();
  std::vector<Measurement> ms;
  if (!measurements_path.empty()) {
    std::ifstream in(measurements_path);
    if (!in) throw ConfigError("cannot open measurements file '" + measurements_path + "'");
    ms = parse_measurements(in);
  }
  const World world = make_world(cfg.scenario, cfg.seed);
  std::ostringstream csv;
  csv << "# crowdsense-map v1\nx,y,mean,variance\n";
  for (const auto& p : radio_map(*world.field, ms)) {
    csv << format_number(p.location.x) << "," << format_number(p.location.y) << ","
        << format_number(p.mean) << "," << format_number(p.variance) << "\n";
  }
  write_text(out_path, csv.str());
  return kExitOk;
}

}  // namespace crowdsense

#endif  // CROWDSENSE_HARNESS_HPP_
