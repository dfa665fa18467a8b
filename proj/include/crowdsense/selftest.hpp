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

#ifndef CROWDSENSE_SELFTEST_HPP_
#define CROWDSENSE_SELFTEST_HPP_

// Property suites with pinned tolerances and instance counts. Each suite
// returns one verdict; the CLI selftest command and the acceptance binary
// both print them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "crowdsense/cost_models.hpp"
#include "crowdsense/expected_utility.hpp"
#include "crowdsense/mechanisms.hpp"
#include "crowdsense/random.hpp"
#include "crowdsense/scenario.hpp"
#include "crowdsense/spatial_gp.hpp"
#include "crowdsense/submodular.hpp"
#include "crowdsense/tutorial.hpp"
#include "crowdsense/valuation.hpp"

namespace crowdsense::selftest {

enum class Status { pass, fail, diagnostic };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::pass: return "PASS";
    case Status::fail: return "FAIL";
    case Status::diagnostic: return "DIAG";
  }
  return "?";
}

struct SuiteResult {
  int id = 0;
  std::string title;
  Status status = Status::fail;
  std::string detail;
  double seconds = 0.0;
  double limit_seconds = 0.0;  // 0 means no runtime bound
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Applies the runtime bound and fills in timing.
inline SuiteResult finish(SuiteResult r, bool ok, const Stopwatch& sw, std::string detail) {
  r.seconds = sw.seconds();
  const bool in_time = r.limit_seconds <= 0.0 || r.seconds < r.limit_seconds;
  if (r.status != Status::diagnostic) r.status = ok && in_time ? Status::pass : Status::fail;
  std::ostringstream os;
  os << detail;
  if (!in_time) os << "; exceeded " << r.limit_seconds << " s";
  r.detail = os.str();
  return r;
}

struct SmallWorld {
  std::shared_ptr<const SiteField> field;
  std::vector<UserProfile> users;
  ValueFn value;
};

// Users and grid points scattered over a 3 km square.
inline SmallWorld random_small_world(Rng& rng, std::size_t n, std::size_t grid_points = 40) {
  constexpr double kArea = 3.0;
  std::vector<UserSite> sites;
  std::vector<UserProfile> users;
  for (std::size_t i = 0; i < n; ++i) {
    const Location loc{kArea * uniform01(rng), kArea * uniform01(rng)};
    const double noise = 0.5 + 0.5 * uniform01(rng);
    const double lower = 0.1 + 0.1 * uniform01(rng);
    const double width = 0.2 + 0.8 * uniform01(rng);
    const CostDistribution cost = uniform01(rng) < 0.5
                                      ? CostDistribution::uniform(lower, width)
                                      : CostDistribution::truncated_normal(lower, width);
    const double rho = 0.5 + 0.5 * uniform01(rng);
    sites.push_back({loc, noise});
    users.push_back({i, loc, noise, cost, rho});
  }
  std::vector<Location> grid;
  for (std::size_t g = 0; g < grid_points; ++g) {
    grid.push_back({kArea * uniform01(rng), kArea * uniform01(rng)});
  }
  auto field = std::make_shared<const SiteField>(std::move(sites), std::move(grid), KernelSpec{});
  const ValuationParams params{1.0 + 7.0 * uniform01(rng), 0.0};
  return {field, std::move(users), MemoizedValue(GpValuation(field, params))};
}

inline EstimatorConfig exact_estimator() {
  return EstimatorConfig{ExpectationMode::exact, 1, kMaxExactOffers, 0};
}

inline double pick_gamma(Rng& rng) {
  const auto grid = default_gamma_grid();
  return grid[static_cast<std::size_t>(uniform01(rng) * grid.size())];
}

inline std::vector<double> all_subset_values(const SetFunctionOracle& f) {
  const std::size_t n = f.ground_size();
  std::vector<double> vals(std::size_t{1} << n);
  for (std::uint64_t m = 0; m < vals.size(); ++m) vals[m] = f(SiteSubset::from_mask(m));
  return vals;
}

// Smallest slack of f(A + i) - f(A) >= f(B + i) - f(B) over A <= B, i not in B.
inline double min_diminishing_slack(const std::vector<double>& vals, std::size_t n) {
  double worst = std::numeric_limits<double>::infinity();
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t b = 0; b <= full; ++b) {
    for (std::uint64_t a = b;; a = (a - 1) & b) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        if (b & bit) continue;
        const double da = vals[a | bit] - vals[a];
        const double db = vals[b | bit] - vals[b];
        worst = std::min(worst, da - db);
      }
      if (a == 0) break;
    }
  }
  return worst;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

// Criterion 1: pricing algebra on the two-user example.
inline SuiteResult two_user_algebra() {
  SuiteResult r{1, "two-user pricing algebra", Status::fail, "", 0.0, 1.0};
  Stopwatch sw;
  const auto checks = tutorial::algebra_suite();
  std::size_t failed = 0;
  std::string first_failure;
  for (const auto& c : checks) {
    if (!c.pass()) {
      if (failed++ == 0) first_failure = c.name + " = " + fmt(c.computed);
    }
  }
  std::string detail = std::to_string(checks.size() - failed) + "/" +
                       std::to_string(checks.size()) + " checks";
  if (failed) detail += ", first failure: " + first_failure;
  return finish(r, failed == 0, sw, detail);
}

// Criterion 2: tabulated valuation values. Reported, never gating.
inline SuiteResult table_diagnostic() {
  SuiteResult r{2, "two-user valuation table (diagnostic)", Status::pass, "", 0.0, 0.0};
  Stopwatch sw;
  double worst = 0.0;
  bool ok = true;
  for (const auto& c : tutorial::valuation_diagnostic()) {
    worst = std::max(worst, std::abs(c.residual()));
    ok = ok && c.pass();
  }
  if (!ok) r.status = Status::diagnostic;
  return finish(r, ok, sw, "max |residual| " + fmt(worst) + " (target <= 0.15)");
}

// Criterion 3: double greedy reaches a third of the optimum.
inline SuiteResult usm_third_bound(std::uint64_t seed = 3) {
  SuiteResult r{3, "double greedy 1/3 bound", Status::fail, "", 0.0, 30.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  double worst_ratio = std::numeric_limits<double>::infinity();
  std::size_t violations = 0, instances = 0;
  auto check = [&](const SetFunctionOracle& f) {
    const Maximum opt = brute_force_max(f);
    const double alg = f(usm_double_greedy(f));
    ++instances;
    if (alg < opt.value / 3.0 - 1e-12 * std::max(1.0, opt.value)) ++violations;
    if (opt.value > 0.0) worst_ratio = std::min(worst_ratio, alg / opt.value);
  };
  for (std::size_t k = 0; k < 200; ++k) {
    const std::size_t n = 2 + k % 9;
    check(random_submodular_instance(n, rng, k % 2 ? InstanceFamily::cut : InstanceFamily::coverage));
  }
  for (std::size_t k = 0; k < 50; ++k) {
    const std::size_t n = 2 + k % 7;
    const SmallWorld w = random_small_world(rng, n);
    const ShiftedEu eu(w.value, w.users, pick_gamma(rng), {}, exact_estimator());
    check(eu.oracle());
  }
  return finish(r, violations == 0, sw,
                std::to_string(instances) + " instances, " + std::to_string(violations) +
                    " violations, worst alg/opt " + fmt(worst_ratio));
}

// Bounded perturbation in [-1, 1] for subset `mask`, family k.
inline double perturbation(std::size_t k, std::uint64_t mask, std::size_t n,
                           std::uint64_t opt_mask, std::uint64_t salt) {
  const auto pop = [](std::uint64_t m) { return static_cast<double>(std::popcount(m)); };
  switch (k % 5) {
    case 0: return counter_uniform(salt, k, mask) < 0.5 ? -1.0 : 1.0;
    case 1: return 2.0 * counter_uniform(salt, k, mask) - 1.0;
    case 2: {
      const double in_opt = pop(mask & opt_mask) / std::max(1.0, pop(opt_mask));
      return 1.0 - 2.0 * in_opt;
    }
    case 3: return std::popcount(mask) % 2 ? -1.0 : 1.0;
    default: return 1.0 - 2.0 * pop(mask) / static_cast<double>(n);
  }
}

// Criterion 4: double greedy on an eps-accurate oracle.
inline SuiteResult noisy_oracle_bound(std::uint64_t seed = 4) {
  SuiteResult r{4, "double greedy with eps-noisy oracle", Status::fail, "", 0.0, 60.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  constexpr std::size_t kInstances = 20;
  constexpr std::size_t kPerturbations = 50;
  std::size_t trials = 0, violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (double eps : {0.01, 0.05}) {
    for (std::size_t k = 0; k < kInstances; ++k) {
      const std::size_t n = 3 + k % 6;
      const SmallWorld w = random_small_world(rng, n);
      const ShiftedEu eu(w.value, w.users, pick_gamma(rng), {}, exact_estimator());
      const SetFunctionOracle f = eu.oracle();
      const std::vector<double> vals = all_subset_values(f);
      const auto opt_it = std::max_element(vals.begin(), vals.end());
      const double opt = *opt_it;
      const std::uint64_t opt_mask = static_cast<std::uint64_t>(opt_it - vals.begin());
      const std::uint64_t salt = rng();
      for (std::size_t p = 0; p < kPerturbations; ++p) {
        SetFunctionOracle noisy(n, [&](const SiteSubset& s) {
          std::uint64_t mask = 0;
          for (std::size_t e : s) mask |= std::uint64_t{1} << e;
          return vals[mask] + eps * perturbation(p, mask, n, opt_mask, salt);
        });
        SiteSubset chosen = usm_double_greedy(noisy);
        std::uint64_t mask = 0;
        for (std::size_t e : chosen) mask |= std::uint64_t{1} << e;
        const double bound = opt / 3.0 - (2.0 * n + 2.0) * eps / 3.0;
        const double margin = vals[mask] - bound;
        worst_margin = std::min(worst_margin, margin);
        ++trials;
        if (margin < -1e-12) ++violations;
      }
    }
  }
  return finish(r, violations == 0, sw,
                std::to_string(trials) + " trials, " + std::to_string(violations) +
                    " violations, worst margin " + fmt(worst_margin));
}

// Criterion 5: greedy knapsack against the budgeted optimum.
inline SuiteResult knapsack_bound(std::uint64_t seed = 5) {
  SuiteResult r{5, "greedy knapsack 0.39 bound", Status::fail, "", 0.0, 60.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  constexpr double kRatio = 0.39;
  std::size_t violations = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 100; ++k) {
    const std::size_t n = 3 + k % 10;
    auto family = k % 2 ? InstanceFamily::facility_location : InstanceFamily::coverage;
    SetFunctionOracle f = random_submodular_instance(n, rng, family);
    std::vector<double> prices(n);
    double total = 0.0;
    for (auto& p : prices) total += (p = 0.1 + 0.9 * uniform01(rng));
    const double budget = total * (0.2 + 0.4 * uniform01(rng));
    const BudgetedInstance inst{f, prices, budget};
    const double alg = f(greedy_knapsack(inst));
    const double opt = brute_force_budgeted_max(inst).value;
    if (alg < kRatio * opt - 1e-12) ++violations;
    if (opt > 0.0) worst_ratio = std::min(worst_ratio, alg / opt);
  }
  return finish(r, violations == 0, sw,
                "100 instances, " + std::to_string(violations) + " violations, worst alg/opt " +
                    fmt(worst_ratio));
}

// Criterion 6: MI chain rule and diminishing returns on random fields.
inline SuiteResult mi_properties(std::uint64_t seed = 6) {
  SuiteResult r{6, "MI chain rule and submodularity", Status::fail, "", 0.0, 60.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  double worst_chain = 0.0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < 50; ++k) {
    const std::size_t n = 2 + k % 7;
    const SmallWorld w = random_small_world(rng, n);
    const SiteField& field = *w.field;
    SetFunctionOracle mi(n, [&](const SiteSubset& s) { return mutual_information(field, s); });
    const std::vector<double> vals = all_subset_values(mi);
    for (std::uint64_t a = 0; a < vals.size(); ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        if (a & bit) continue;
        const double direct = vals[a | bit] - vals[a];
        const double m = marginal_mi(field, i, SiteSubset::from_mask(a));
        const double scale = std::max({1.0, std::abs(vals[a | bit]), std::abs(vals[a])});
        worst_chain = std::max(worst_chain, std::abs(direct - m) / scale);
      }
    }
    worst_slack = std::min(worst_slack, min_diminishing_slack(vals, n));
  }
  const bool ok = worst_chain <= 1e-8 && worst_slack >= -1e-9;
  return finish(r, ok, sw,
                "50 fields, worst chain-rule error " + fmt(worst_chain) +
                    ", worst diminishing-returns slack " + fmt(worst_slack));
}

// Evaluation-scale world: 6 km square, 169-point grid, users at least
// 120 m apart. With this many grid sites per user, MI grows with every
// added user, which is what makes the valuation submodular.
inline World evaluation_world(std::size_t n, double kappa, std::uint64_t seed) {
  ScenarioParams p;
  p.n_users = n;
  p.valuation = {kappa, 0.0};
  p.min_distance_km = 0.12;
  return make_world(p, seed);
}

// Criterion 7: exact EU at fixed prices is submodular in the offered set.
inline SuiteResult eu_submodularity(std::uint64_t seed = 7) {
  SuiteResult r{7, "EU submodularity at fixed prices", Status::fail, "", 0.0, 0.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  double worst_slack = std::numeric_limits<double>::infinity();
  constexpr std::size_t kInstances = 50;
  for (std::size_t k = 0; k < kInstances; ++k) {
    const std::size_t n = 2 + k % 7;
    const World w = evaluation_world(n, 1.0 + 7.0 * uniform01(rng), rng());
    const ValueFn v = MemoizedValue(w.value_fn());
    std::vector<Offer> offers;
    for (const auto& u : w.users) {
      const double price = u.cost.lower() + uniform01(rng) * (u.cost.upper() - u.cost.lower());
      offers.push_back(make_offer(u, price));
    }
    SetFunctionOracle eu(n, [&](const SiteSubset& s) {
      OfferBatch b;
      for (std::size_t e : s) b.offers.push_back(offers[e]);
      return exact_eu(v, b);
    });
    worst_slack = std::min(worst_slack, min_diminishing_slack(all_subset_values(eu), n));
  }
  return finish(r, worst_slack >= -1e-9, sw,
                std::to_string(kInstances) + " instances, worst diminishing-returns slack " +
                    fmt(worst_slack));
}

// Criterion 8: MC estimate inside the CLT band, and bitwise repeatable.
inline SuiteResult mc_convergence(std::uint64_t seed = 8) {
  SuiteResult r{8, "MC convergence and determinism", Status::fail, "", 0.0, 0.0};
  Stopwatch sw;
  Rng rng = make_rng(seed);
  constexpr std::size_t kIters = 50000;
  constexpr double kSigmas = 3.0;
  std::size_t outside = 0, nondeterministic = 0;
  double worst_z = 0.0;
  for (std::size_t k = 0; k < 20; ++k) {
    const SmallWorld w = random_small_world(rng, 8);
    const OfferBatch batch = price_batch(w.users, pick_gamma(rng));
    const double exact = exact_eu(w.value, batch);
    const std::uint64_t stream = rng();
    const Estimate a = mc_eu(w.value, batch, kIters, stream);
    const Estimate b = mc_eu(w.value, batch, kIters, stream);
    if (std::memcmp(&a.mean, &b.mean, sizeof(double)) != 0 ||
        std::memcmp(&a.stddev, &b.stddev, sizeof(double)) != 0) {
      ++nondeterministic;
    }
    const double se = a.stddev / std::sqrt(static_cast<double>(kIters));
    const double z = se > 0.0 ? std::abs(a.mean - exact) / se : (a.mean == exact ? 0.0 : 1e300);
    worst_z = std::max(worst_z, z);
    if (z > kSigmas) ++outside;
  }
  return finish(r, outside == 0 && nondeterministic == 0, sw,
                "20 instances, " + std::to_string(outside) + " outside 3 sigma (worst z " +
                    fmt(worst_z) + "), " + std::to_string(nondeterministic) +
                    " non-repeatable");
}

inline std::vector<MechanismSpec> trend_mechanisms() {
  MechanismConfig eu;
  eu.oracle_kind = OracleKind::mc_eu;
  MechanismConfig u;
  u.oracle_kind = OracleKind::best_case_u;
  return {{"SE", MechanismKind::sequential, eu},
          {"SB-EU", MechanismKind::single_batch, eu},
          {"SB-u", MechanismKind::single_batch, u},
          {"MB-EU", MechanismKind::multi_batch, eu},
          {"MB-u", MechanismKind::multi_batch, u}};
}

inline ScenarioParams trend_scenario() {
  ScenarioParams s;
  s.n_users = 30;
  s.valuation = {4.0, 0.0};
  s.delta_c = 0.5;
  s.cost_kind = CostKind::uniform;
  s.rho = 1.0;
  return s;
}

struct TrendReport {
  std::vector<std::pair<std::string, bool>> checks;
  std::vector<std::string> notes;
};

inline const MechanismSummary& find_summary(const ComparisonResult& r, const std::string& name) {
  for (const auto& s : r.summary) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("no summary for " + name);
}

// Runs a sweep and checks each mechanism's mean utility is nondecreasing.
inline bool nondecreasing_sweep(const ScenarioParams& base, const std::vector<MechanismSpec>& mechs,
                                const std::string& axis, const std::vector<double>& values,
                                std::size_t iterations, std::uint64_t seed,
                                std::vector<std::string>& notes) {
  std::vector<ComparisonResult> results;
  for (double x : values) {
    ScenarioParams s = base;
    if (axis == "n") s.n_users = static_cast<std::size_t>(x);
    if (axis == "rho") s.rho = x;
    results.push_back(run_comparison(s, mechs, iterations, seed));
  }
  bool ok = true;
  for (const auto& m : mechs) {
    std::ostringstream os;
    os << axis << "-sweep " << m.name << ":";
    bool mono = true;
    for (std::size_t k = 0; k < results.size(); ++k) {
      const double u = find_summary(results[k], m.name).utility.mean;
      os << " " << fmt(u);
      if (k > 0 && u < find_summary(results[k - 1], m.name).utility.mean) mono = false;
    }
    if (!mono) os << " (decreasing step)";
    notes.push_back(os.str());
    ok = ok && mono;
  }
  return ok;
}

inline TrendReport trend_checks(std::uint64_t seed = 2026, std::size_t iterations = 50) {
  TrendReport rep;
  const auto mechs = trend_mechanisms();
  const ScenarioParams base = trend_scenario();
  const ComparisonResult res = run_comparison(base, mechs, iterations, seed);
  const auto& se = find_summary(res, "SE");
  const auto& sb_eu = find_summary(res, "SB-EU");
  const auto& sb_u = find_summary(res, "SB-u");
  const auto& mb_eu = find_summary(res, "MB-EU");
  const auto& mb_u = find_summary(res, "MB-u");
  std::ostringstream os;
  for (const auto& s : res.summary) {
    os << s.name << ": utility " << fmt(s.utility.mean) << " +/- " << fmt(s.utility.stderr_)
       << ", batches " << fmt(s.batches.mean) << ", gamma* " << fmt(s.gamma_star.mean) << "; ";
  }
  rep.notes.push_back(os.str());
  rep.checks.push_back({"(a) mean utility SB-EU >= SB-u", sb_eu.utility.mean >= sb_u.utility.mean});
  rep.checks.push_back({"(b) mean batches MB-EU < MB-u < SE",
                        mb_eu.batches.mean < mb_u.batches.mean && mb_u.batches.mean < se.batches.mean});
  double max_gamma = 0.0;
  for (const auto& row : res.rows) {
    if (row.mechanism == "SB-EU") max_gamma = std::max(max_gamma, row.gamma_star);
  }
  rep.checks.push_back({"(c) best single batch gamma* < 1 (max " + fmt(max_gamma) + ")",
                        max_gamma < 1.0});
  rep.checks.push_back({"(d) rho-sweep 0.2..1.0 nondecreasing",
                        nondecreasing_sweep(base, mechs, "rho", {0.2, 0.4, 0.6, 0.8, 1.0},
                                            iterations, seed, rep.notes)});
  rep.checks.push_back({"(e) n-sweep 10..60 nondecreasing",
                        nondecreasing_sweep(base, mechs, "n", {10, 20, 30, 40, 50, 60},
                                            iterations, seed, rep.notes)});
  return rep;
}

// Criterion 9: qualitative trends at desk scale.
inline SuiteResult trend_reproduction(std::uint64_t seed = 2026, std::size_t iterations = 50,
                                      TrendReport* out = nullptr) {
  SuiteResult r{9, "trend reproduction", Status::fail, "", 0.0, 900.0};
  Stopwatch sw;
  TrendReport rep = trend_checks(seed, iterations);
  bool ok = true;
  std::string failed;
  for (const auto& [name, pass] : rep.checks) {
    ok = ok && pass;
    if (!pass) failed += (failed.empty() ? "" : ", ") + name.substr(0, 3);
  }
  std::string detail = std::to_string(rep.checks.size()) + " orderings";
  if (!failed.empty()) detail += ", failed " + failed;
  if (out) *out = std::move(rep);
  return finish(r, ok, sw, detail);
}

inline std::vector<SuiteResult> property_suites() {
  return {two_user_algebra(), table_diagnostic(), usm_third_bound(), noisy_oracle_bound(),
          knapsack_bound(),   mi_properties(),    eu_submodularity(), mc_convergence()};
}

}  // namespace crowdsense::selftest

#endif  // CROWDSENSE_SELFTEST_HPP_
