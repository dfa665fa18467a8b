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

#include "crowdsense/scenario.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace crowdsense {
namespace {

std::vector<MechanismSpec> Specs() {
  MechanismConfig c;
  c.gamma_grid = {0.2, 0.4, 0.6, 0.8, 1.0};
  c.budget = 1.0;
  MechanismConfig u = c;
  u.oracle_kind = OracleKind::best_case_u;
  return {{"SE", MechanismKind::sequential, c},
          {"SB-EU", MechanismKind::single_batch, c},
          {"SB-u", MechanismKind::single_batch, u},
          {"MB-EU", MechanismKind::multi_batch, c},
          {"VM-MB", MechanismKind::vm_multi_batch, c}};
}

ScenarioParams Small(std::size_t n = 10) {
  ScenarioParams p;
  p.n_users = n;
  return p;
}

TEST(Topology, SingleUserInsideArea) {
  const auto pts = poisson_topology(6.0, 1, 3);
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_GE(pts[0].x, 0.0);
  EXPECT_LT(pts[0].x, 6.0);
  EXPECT_GE(pts[0].y, 0.0);
  EXPECT_LT(pts[0].y, 6.0);
  EXPECT_THROW(poisson_topology(6.0, 0, 3), std::invalid_argument);
}

TEST(Topology, QuadrantCountsPassChiSquare) {
  const std::size_t n = 10000;
  const auto pts = poisson_topology(6.0, n, 21);
  double count[4] = {0, 0, 0, 0};
  for (const auto& p : pts) count[(p.x >= 3.0) + 2 * (p.y >= 3.0)] += 1;
  double chi2 = 0.0;
  for (double c : count) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
  EXPECT_LT(chi2, 16.266);  // chi-square, 3 dof, upper 0.001 quantile
}

TEST(Topology, DeterministicAndNested) {
  const auto a = poisson_topology(6.0, 30, 8);
  const auto b = poisson_topology(6.0, 30, 8);
  const auto c = poisson_topology(6.0, 10, 8);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].y, b[i].y);
  }
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(a[i].x, c[i].x);
}

TEST(Topology, MinimumDistanceHonoured) {
  const auto pts = poisson_topology(6.0, 60, 9, 0.12);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) EXPECT_GE(distance(pts[i], pts[j]), 0.12);
  }
  EXPECT_THROW(poisson_topology(1.0, 50, 9, 1.0), ConfigError);
}

TEST(Grid, EvaluationGridHas169Points) {
  const auto g = make_grid(6.0, 0.45);
  EXPECT_EQ(g.size(), 169u);
  EXPECT_NEAR(g.front().x, 0.225, 1e-12);
  EXPECT_NEAR(g.back().y, 0.225 + 12 * 0.45, 1e-12);
}

TEST(Users, RangesAndSupport) {
  const auto locs = poisson_topology(6.0, 200, 4);
  const auto users = generate_users(locs, CostKind::uniform, 0.5, 5);
  for (std::size_t i = 0; i < users.size(); ++i) {
    EXPECT_EQ(users[i].id, i);
    EXPECT_GE(users[i].cost.lower(), 0.1);
    EXPECT_LE(users[i].cost.lower(), 0.2);
    EXPECT_NEAR(users[i].cost.upper(), users[i].cost.lower() + 0.5, 1e-12);
    EXPECT_GE(users[i].noise_variance, 0.5);
    EXPECT_LE(users[i].noise_variance, 1.0);
    EXPECT_EQ(users[i].rho, 1.0);
  }
  const auto again = generate_users(locs, CostKind::uniform, 0.5, 5);
  EXPECT_EQ(users[7].cost.lower(), again[7].cost.lower());
  const auto tn = generate_users(locs, CostKind::truncated_normal, 0.5, 5, 0.4);
  EXPECT_EQ(tn[0].cost.kind(), CostKind::truncated_normal);
  EXPECT_EQ(tn[0].rho, 0.4);
  EXPECT_THROW(generate_users(locs, CostKind::uniform, 0.0, 5), std::invalid_argument);
}

TEST(Params, Validation) {
  ScenarioParams p;
  EXPECT_NO_THROW(p.validate());
  p.n_users = 0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ScenarioParams{};
  p.rho = 1.5;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ScenarioParams{};
  p.grid_resolution_km = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = ScenarioParams{};
  p.valuation.kappa = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Outcomes, CertainAcceptanceAndTotalExpiry) {
  const auto locs = poisson_topology(6.0, 20, 4);
  const auto sure = generate_users(locs, CostKind::uniform, 0.5, 5, 1.0);
  const auto gone = generate_users(locs, CostKind::uniform, 0.5, 5, 0.0);
  for (std::uint64_t it = 0; it < 50; ++it) {
    const CostRealization a(sure, 3, it), b(gone, 3, it);
    OfferBatch hi, any;
    for (const auto& u : sure) hi.offers.push_back(make_offer(u, u.cost.upper()));
    for (const auto& u : gone) any.offers.push_back({u.id, 100.0, 0.0});
    for (Outcome o : simulate_outcomes(a, hi)) EXPECT_EQ(o, Outcome::accepted);
    for (Outcome o : simulate_outcomes(b, any)) EXPECT_EQ(o, Outcome::expired);
  }
}

TEST(Outcomes, AcceptanceFrequencyWithinBinomialBand) {
  UserProfile u{0, {}, 0.5, CostDistribution::uniform(0.15, 0.5), 0.7};
  for (auto kind : {CostKind::uniform, CostKind::truncated_normal}) {
    if (kind == CostKind::truncated_normal) u.cost = CostDistribution::truncated_normal(0.15, 0.5);
    const double price = 0.35;
    const OfferBatch b{{Offer{0, price, recruit_prob(u, price)}}};
    const std::vector<UserProfile> users{u};
    const std::size_t trials = 100000;
    std::size_t accepted = 0;
    for (std::size_t it = 0; it < trials; ++it) {
      const CostRealization r(users, 77, it);
      accepted += simulate_outcomes(r, b).front() == Outcome::accepted;
    }
    const double q = recruit_prob(u, price);
    const double sigma = std::sqrt(q * (1 - q) / trials);
    EXPECT_NEAR(double(accepted) / trials, q, 3 * sigma);
  }
}

TEST(Outcomes, UnknownUserIsAnError) {
  const auto users = generate_users(poisson_topology(6.0, 3, 1), CostKind::uniform, 0.5, 2);
  const CostRealization r(users, 1, 0);
  EXPECT_FALSE(r.covers(5));
  EXPECT_THROW(simulate_outcomes(r, OfferBatch{{Offer{5, 1.0, 1.0}}}), std::out_of_range);
}

// Within an iteration the answer depends only on (user, price), expiry does
// not depend on price, and acceptance is monotone in price.
TEST(Outcomes, PairedReplayIsFair) {
  const World w = make_world(Small(15), 12);
  for (std::uint64_t it = 0; it < 30; ++it) {
    const CostRealization r(w.users, 99, it);
    for (const auto& u : w.users) {
      Outcome prev = Outcome::rejected;
      for (int k = 0; k <= 10; ++k) {
        const double p = u.cost.lower() + u.cost.width() * k / 10.0;
        const OfferBatch one{{Offer{u.id, p, 0.0}}};
        const OfferBatch two{{Offer{u.id, p, 0.0}, Offer{(u.id + 1) % 15, p, 0.0}}};
        const Outcome o = simulate_outcomes(r, one).front();
        EXPECT_EQ(o, simulate_outcomes(r, two).front());
        EXPECT_EQ(o == Outcome::expired, r.expiry_coin(u.id) >= u.rho);
        if (prev == Outcome::accepted) {
          EXPECT_EQ(o, Outcome::accepted);
        }
        prev = o;
      }
    }
  }
}

TEST(Moments, MeanAndStandardError) {
  const std::vector<double> xs{1, 2, 3, 4};
  const Moments m = moments(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-12);
  EXPECT_EQ(moments(std::vector<double>{}).mean, 0.0);
  EXPECT_EQ(moments(std::vector<double>{7}).stderr_, 0.0);
}

TEST(Comparison, MechanismAgainstItselfGivesIdenticalColumns) {
  auto specs = Specs();
  specs.push_back(specs[1]);
  specs.back().name = "SB-EU copy";
  specs.push_back(specs[0]);
  specs.back().name = "SE copy";
  const auto res = run_comparison(Small(12), specs, 6, 31);
  const std::size_t m = specs.size();
  for (std::size_t it = 0; it < 6; ++it) {
    const auto& a = res.rows[it * m + 1];
    const auto& b = res.rows[it * m + m - 2];
    EXPECT_EQ(a.utility, b.utility);
    EXPECT_EQ(a.offers, b.offers);
    EXPECT_EQ(res.rows[it * m].utility, res.rows[it * m + m - 1].utility);
  }
}

TEST(Comparison, RowsConserveUtilityAndAreOrdered) {
  const auto specs = Specs();
  const auto res = run_comparison(Small(12), specs, 5, 32);
  ASSERT_EQ(res.rows.size(), 5 * specs.size());
  for (std::size_t k = 0; k < res.rows.size(); ++k) {
    const auto& r = res.rows[k];
    EXPECT_EQ(r.iteration, k / specs.size());
    EXPECT_EQ(r.mechanism, specs[k % specs.size()].name);
    EXPECT_EQ(r.utility, r.value - r.payment);
    EXPECT_EQ(r.wall_ms, 0.0);
  }
  ASSERT_EQ(res.summary.size(), specs.size());
  double sum = 0.0;
  for (std::size_t it = 0; it < 5; ++it) sum += res.rows[it * specs.size() + 2].utility;
  EXPECT_NEAR(res.summary[2].utility.mean, sum / 5, 1e-12);
}

TEST(Comparison, ParallelMatchesSerial) {
  const auto specs = Specs();
  const auto a = run_comparison(Small(12), specs, 7, 33);
  const auto b = run_comparison(Small(12), specs, 7, 33, RunOptions{3, false});
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].utility, b.rows[k].utility);
    EXPECT_EQ(a.rows[k].batches, b.rows[k].batches);
    EXPECT_EQ(a.rows[k].gamma_star, b.rows[k].gamma_star);
  }
}

TEST(Comparison, SeedStreamsAreIsolated) {
  const std::uint64_t s = 34;
  const std::uint64_t streams[] = {world_stream(s), user_stream(s), cost_stream(s), mc_stream(s)};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < i; ++j) EXPECT_NE(streams[i], streams[j]);
  }
  // MC effort changes only the mechanisms, never the world or the costs.
  auto few = Specs();
  auto many = Specs();
  for (auto& m : many) m.config.mc_iterations = 500;
  const World w = make_world(Small(12), s);
  const auto a = run_comparison(w, few, 3, s);
  const auto b = run_comparison(w, many, 3, s);
  EXPECT_EQ(a.rows[0].utility, b.rows[0].utility);  // sequential uses no MC
  const CostRealization r1(w.users, cost_stream(s), 2), r2(w.users, cost_stream(s), 2);
  EXPECT_EQ(r1.cost(4), r2.cost(4));
  EXPECT_EQ(make_world(Small(12), s).users[3].location.x, w.users[3].location.x);
}

TEST(Comparison, TimingOnlyWhenRequested) {
  const auto specs = Specs();
  const auto res = run_comparison(Small(8), specs, 2, 35, RunOptions{1, true});
  double total = 0.0;
  for (const auto& r : res.rows) total += r.wall_ms;
  EXPECT_GT(total, 0.0);
}

TEST(Comparison, RejectsEmptyInputs) {
  EXPECT_THROW(run_comparison(Small(), Specs(), 0, 1), ConfigError);
  EXPECT_THROW(run_comparison(Small(), std::vector<MechanismSpec>{}, 1, 1), ConfigError);
}

// Nearly deterministic costs: every EU-based mechanism prices at gamma = 1,
// every offer is accepted, and USM-EU and USM-u select the same batch.
TEST(Comparison, NearlyDeterministicCostsCollapseToCertainty) {
  ScenarioParams p = Small(12);
  p.delta_c = 1e-9;
  auto specs = Specs();
  const auto res = run_comparison(p, specs, 4, 36);
  const std::size_t m = specs.size();
  for (std::size_t it = 0; it < 4; ++it) {
    const auto& se = res.rows[it * m];
    const auto& eu = res.rows[it * m + 1];
    const auto& bu = res.rows[it * m + 2];
    EXPECT_EQ(eu.gamma_star, 1.0);
    EXPECT_EQ(bu.gamma_star, 1.0);
    EXPECT_EQ(eu.utility, bu.utility);
    EXPECT_NEAR(se.utility, eu.utility, 0.05 * std::abs(eu.utility));
  }
}

TEST(Comparison, SingleBatchEuBeatsUtilityBaselineOnAverage) {
  const auto specs = Specs();
  ScenarioParams p = Small(30);
  const auto res = run_comparison(p, specs, 50, 2026);
  EXPECT_GE(res.summary[1].utility.mean, res.summary[2].utility.mean);
}

}  // namespace
}  // namespace crowdsense
