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

#ifndef CROWDSENSE_TUTORIAL_HPP_
#define CROWDSENSE_TUTORIAL_HPP_

// The two-user worked example: valuation diagnostic on a 3x3 grid, the
// pricing algebra with tabulated values injected, the deterministic-cost
// selection, and the zero-currency degenerate case.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crowdsense/cost_models.hpp"
#include "crowdsense/expected_utility.hpp"
#include "crowdsense/mechanisms.hpp"
#include "crowdsense/spatial_gp.hpp"
#include "crowdsense/submodular.hpp"
#include "crowdsense/valuation.hpp"

namespace crowdsense::tutorial {

struct Check {
  std::string name;
  double computed = 0.0;
  double target = 0.0;
  double tolerance = 0.0;

  double residual() const { return computed - target; }
  bool pass() const { return std::abs(residual()) <= tolerance; }
};

struct Report {
  std::vector<Check> diagnostic;  // informational only
  std::vector<Check> algebra;     // decides the exit status

  bool algebra_ok() const {
    for (const auto& c : algebra) {
      if (!c.pass()) return false;
    }
    return true;
  }
};

// Tabulated two-user values, users 1 and 2 as ids 0 and 1.
struct ValueTable {
  std::string name;
  double v1, v2, v12;

  TableValuation valuation() const {
    return TableValuation({{SiteSubset{0}, v1}, {SiteSubset{1}, v2}, {SiteSubset{0, 1}, v12}});
  }
};

inline ValueTable constant_model() { return {"constant field", 4.0, 4.0, 4.0}; }
inline ValueTable gp_case1() { return {"GP, distinct locations", 2.18, 1.76, 3.48}; }
inline ValueTable gp_case2() { return {"GP, distinct noise", 2.18, 2.23, 3.82}; }

inline constexpr double kTutorialKappa = 10.0;

inline std::vector<Location> tutorial_grid() {
  std::vector<Location> g;
  for (int y = -1; y <= 1; ++y) {
    for (int x = -1; x <= 1; ++x) g.push_back({double(x), double(y)});
  }
  return g;
}

// Case 1 places user 2 at (0.5, y2) with equal noise; case 2 places both on
// the x axis with noise 0.5 and 0.2.
inline std::shared_ptr<SiteField> case1_field(double y2) {
  return std::make_shared<SiteField>(
      std::vector<UserSite>{{{-0.5, 0.0}, 0.5}, {{0.5, y2}, 0.5}}, tutorial_grid(),
      KernelSpec{});
}

inline std::shared_ptr<SiteField> case2_field() {
  return std::make_shared<SiteField>(
      std::vector<UserSite>{{{-0.5, 0.0}, 0.5}, {{0.5, 0.0}, 0.2}}, tutorial_grid(),
      KernelSpec{});
}

inline std::vector<UserProfile> tutorial_users() {
  return {UserProfile{0, {-0.5, 0.0}, 0.5, CostDistribution::uniform(1.0, 1.0), 1.0},
          UserProfile{1, {0.5, 0.0}, 0.2, CostDistribution::uniform(0.5, 1.0), 1.0}};
}

inline std::vector<double> percent_grid() {
  std::vector<double> g;
  for (int k = 1; k <= 100; ++k) g.push_back(k / 100.0);
  return g;
}

inline void add_value_rows(std::vector<Check>& out, const std::string& label,
                           const ValueFn& v, const ValueTable& t, double tol) {
  out.push_back({label + " v({1})", v(SiteSubset{0}), t.v1, tol});
  out.push_back({label + " v({2})", v(SiteSubset{1}), t.v2, tol});
  out.push_back({label + " v({1,2})", v(SiteSubset{0, 1}), t.v12, tol});
}

inline std::vector<Check> valuation_diagnostic(double tol = 0.15) {
  std::vector<Check> out;
  const ValuationParams params{kTutorialKappa, 0.0};
  add_value_rows(out, "case 1, user 2 at (0.5, 0.5):", GpValuation(case1_field(0.5), params),
                 gp_case1(), tol);
  add_value_rows(out, "case 1, user 2 at (0.5, -0.5):",
                 GpValuation(case1_field(-0.5), params), gp_case1(), tol);
  add_value_rows(out, "case 2:", GpValuation(case2_field(), params), gp_case2(), tol);
  return out;
}

// Exact EU of offering both users with per-user acceptance probabilities.
inline double two_user_eu(const ValueFn& v, const std::vector<UserProfile>& users, double g1,
                          double g2) {
  OfferBatch b;
  b.offers.push_back(make_offer(users[0], price_for_gamma(users[0], g1)));
  b.offers.push_back(make_offer(users[1], price_for_gamma(users[1], g2)));
  return exact_eu(v, b);
}

struct GridOptimum {
  double g1 = 0.0, g2 = 0.0, eu = 0.0;
};

inline GridOptimum per_user_grid_optimum(const ValueFn& v,
                                         const std::vector<UserProfile>& users) {
  GridOptimum best{0.0, 0.0, -1e300};
  for (double g1 : percent_grid()) {
    for (double g2 : percent_grid()) {
      const double eu = two_user_eu(v, users, g1, g2);
      if (eu > best.eu) best = {g1, g2, eu};
    }
  }
  return best;
}

inline std::vector<Check> algebra_suite() {
  constexpr double kGammaTol = 0.01;
  constexpr double kEuTol = 0.005;
  std::vector<Check> out;
  const auto users = tutorial_users();
  const ValueTable t = gp_case2();
  const ValueFn v = t.valuation();

  const PriceChoice c1 = best_single_price(t.v1, users[0].cost);
  out.push_back({"user 1 alone: gamma*", users[0].cost.cdf(c1.price), 0.59, kGammaTol});
  out.push_back({"user 1 alone: EU*", c1.gain, 0.3481, kEuTol});
  const PriceChoice c2 = best_single_price(t.v2, users[1].cost);
  out.push_back({"user 2 alone: gamma*", users[1].cost.cdf(c2.price), 0.865, kGammaTol});
  out.push_back({"user 2 alone: EU*", c2.gain, 0.748, kEuTol});

  // EU(gamma) for both users at a common gamma is a quadratic through 0.
  auto joint = [&](double g) { return two_user_eu(v, users, g, g); };
  const double e1 = joint(0.25), e2 = joint(0.5), e3 = joint(0.75);
  const double c0 = 3 * e1 - 3 * e2 + e3;
  const double quad = 8 * (e1 - 2 * e2 + e3);
  const double lin = 4 * (e2 - e1) - 0.75 * quad;
  out.push_back({"joint EU(gamma): constant term", c0, 0.0, 1e-6});
  out.push_back({"joint EU(gamma): gamma^2 coefficient", quad, -2.59, 1e-6});
  out.push_back({"joint EU(gamma): gamma coefficient", lin, 2.91, 1e-6});

  MechanismConfig cfg;
  cfg.gamma_grid = percent_grid();
  cfg.exact_max_size = kMaxExactOffers;
  const BatchDecision d = single_batch_offering(users, v, cfg);
  out.push_back({"single batch: batch size", double(d.batch.size()), 2.0, 0.0});
  out.push_back({"single batch: gamma*", d.gamma, 0.562, kGammaTol});
  out.push_back({"single batch: EU*", d.estimate, 0.817, kEuTol});

  const GridOptimum g = per_user_grid_optimum(v, users);
  out.push_back({"per-user gamma: gamma_1*", g.g1, 0.37, kGammaTol});
  out.push_back({"per-user gamma: gamma_2*", g.g2, 0.76, kGammaTol});
  out.push_back({"per-user gamma: EU*", g.eu, 0.87, kEuTol});

  // Known costs c1 = 2, c2 = 1.5: pay exactly the cost, maximize utility.
  const double cost[2] = {2.0, 1.5};
  for (const ValueTable& table : {constant_model(), gp_case1(), gp_case2()}) {
    const ValueFn tv = table.valuation();
    SetFunctionOracle utility(2, [&](const SiteSubset& s) {
      double u = tv(s);
      for (std::size_t i : s) u -= cost[i];
      return u;
    });
    const Maximum best = brute_force_max(utility);
    const bool only_user2 = best.subset == SiteSubset{1};
    out.push_back({"known costs, " + table.name + ": best set is {2}", only_user2 ? 1.0 : 0.0,
                   1.0, 0.0});
  }

  // Zero currency: every value is 0 and nothing is offered.
  const ValueFn zero = GpValuation(case2_field(), ValuationParams{0.0, 0.0});
  double max_abs = 0.0;
  for (const SiteSubset& s : {SiteSubset{0}, SiteSubset{1}, SiteSubset{0, 1}}) {
    max_abs = std::max(max_abs, std::abs(zero(s)));
  }
  out.push_back({"zero currency: max |v|", max_abs, 0.0, 0.0});
  const MechanismTranscript seq = sequential_offering(users, zero, cfg, accept_all_source());
  const BatchDecision sb = single_batch_offering(users, zero, cfg);
  out.push_back({"zero currency: offers sent", double(seq.offer_count + sb.batch.size()), 0.0,
                 0.0});
  return out;
}

inline Report run() { return Report{valuation_diagnostic(), algebra_suite()}; }

}  // namespace crowdsense::tutorial

#endif  // CROWDSENSE_TUTORIAL_HPP_
