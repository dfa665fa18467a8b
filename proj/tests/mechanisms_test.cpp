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

#include "crowdsense/mechanisms.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "crowdsense/scenario.hpp"
#include "crowdsense/tutorial.hpp"

namespace crowdsense {
namespace {

constexpr MechanismKind kAllKinds[] = {
    MechanismKind::sequential, MechanismKind::single_batch, MechanismKind::multi_batch,
    MechanismKind::vm_single_batch, MechanismKind::vm_multi_batch};

World DenseWorld(std::size_t n, std::uint64_t seed, double kappa = 4.0, double rho = 1.0) {
  ScenarioParams s;
  s.n_users = n;
  s.grid_resolution_km = 0.3;
  s.min_distance_km = 0.3;
  s.valuation.kappa = kappa;
  s.rho = rho;
  return make_world(s, seed);
}

World EvalWorld(std::size_t n, std::uint64_t seed, double rho = 1.0) {
  ScenarioParams s;
  s.n_users = n;
  s.rho = rho;
  return make_world(s, seed);
}

MechanismConfig Coarse(std::uint64_t seed, double budget = 1.5) {
  MechanismConfig c;
  c.gamma_grid = {0.2, 0.4, 0.6, 0.8, 1.0};
  c.seed = seed;
  c.budget = budget;
  return c;
}

// Audits a transcript against its own rounds.
void Audit(const MechanismTranscript& t, const ValueFn& v) {
  std::set<std::size_t> seen;
  double paid = 0.0;
  std::vector<std::size_t> got;
  std::size_t offers = 0;
  for (const Round& r : t.rounds) {
    ASSERT_EQ(r.outcomes.size(), r.batch.size());
    for (std::size_t j = 0; j < r.batch.size(); ++j) {
      const Offer& o = r.batch.offers[j];
      EXPECT_TRUE(seen.insert(o.user).second) << "user " << o.user << " offered twice";
      if (r.outcomes[j] == Outcome::accepted) {
        paid += o.price;
        got.push_back(o.user);
      }
      ++offers;
    }
  }
  EXPECT_EQ(t.recruited, SiteSubset(got));
  EXPECT_DOUBLE_EQ(t.total_payment, paid);
  EXPECT_EQ(t.achieved_value, v(t.recruited));
  EXPECT_EQ(t.achieved_utility, t.achieved_value - t.total_payment);
  EXPECT_EQ(t.batch_count, t.rounds.size());
  EXPECT_EQ(t.offer_count, offers);
}

TEST(Config, Validation) {
  MechanismConfig c;
  EXPECT_NO_THROW(c.validate());
  c.gamma_grid = {};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.gamma_grid = {0.5, 0.4};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.gamma_grid = {0.0, 0.5};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = MechanismConfig{};
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = MechanismConfig{};
  c.mc_iterations = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = MechanismConfig{};
  c.budget = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(default_gamma_grid().size(), 20u);
  EXPECT_DOUBLE_EQ(default_gamma_grid().front(), 0.05);
  EXPECT_DOUBLE_EQ(default_gamma_grid().back(), 1.0);
}

TEST(Kinds, NamesRoundTrip) {
  for (auto k : kAllKinds) EXPECT_EQ(parse_mechanism_kind(to_string(k)), k);
  EXPECT_THROW(parse_mechanism_kind("auction"), std::invalid_argument);
}

TEST(Sequential, FirstOfferGoesToBetterUser) {
  const ValueFn v = tutorial::gp_case2().valuation();
  const auto users = tutorial::tutorial_users();
  const auto t = sequential_offering(users, v, MechanismConfig{}, accept_all_source());
  ASSERT_FALSE(t.rounds.empty());
  ASSERT_EQ(t.rounds.front().batch.size(), 1u);
  EXPECT_EQ(t.rounds.front().batch.offers.front().user, 1u);
  EXPECT_NEAR(t.rounds.front().batch.offers.front().price, 1.365, 1e-6);
  EXPECT_NEAR(t.rounds.front().estimate, 0.748225, 1e-6);
  Audit(t, v);
}

TEST(Sequential, HighThresholdSendsNothing) {
  const ValueFn v = tutorial::gp_case2().valuation();
  MechanismConfig c;
  c.tau = 5.0;
  const auto t = sequential_offering(tutorial::tutorial_users(), v, c, accept_all_source());
  EXPECT_TRUE(t.rounds.empty());
  EXPECT_EQ(t.achieved_utility, 0.0);
}

TEST(Sequential, ModularAcceptAllRaisesUtilityEachRound) {
  const std::vector<double> w{1.5, 2.0, 0.9, 1.2, 3.0};
  const ValueFn v = [&](const SiteSubset& s) {
    double t = 0.0;
    for (std::size_t i : s) t += w[i];
    return t;
  };
  std::vector<UserProfile> users;
  for (std::size_t i = 0; i < w.size(); ++i) {
    users.push_back({i, {}, 0.5, CostDistribution::uniform(0.2 + 0.1 * i, 0.5), 1.0});
  }
  const auto t = sequential_offering(users, v, MechanismConfig{}, accept_all_source());
  EXPECT_EQ(t.rounds.size(), w.size());
  double u = 0.0;
  for (const Round& r : t.rounds) {
    const Offer& o = r.batch.offers.front();
    const double next = u + w[o.user] - o.price;
    EXPECT_GT(next, u);
    u = next;
  }
  EXPECT_NEAR(t.achieved_utility, u, 1e-12);
}

TEST(Sequential, AlwaysRecomputeStillOffersEachUserOnce) {
  const World w = EvalWorld(12, 5);
  MechanismConfig c = Coarse(3);
  c.always_recompute = true;
  const CostRealization r(w.users, 9, 0);
  Audit(sequential_offering(w.users, w.value_fn(), c, realization_source(r)), w.value_fn());
}

TEST(SingleBatch, TwoUserWorkedExample) {
  const ValueFn v = tutorial::gp_case2().valuation();
  MechanismConfig c;
  c.gamma_grid.clear();
  for (int k = 1; k <= 100; ++k) c.gamma_grid.push_back(0.01 * k);
  c.exact_max_size = 20;
  const BatchDecision d = single_batch_offering(tutorial::tutorial_users(), v, c);
  EXPECT_NEAR(d.gamma, 0.56, 0.01 + 1e-12);
  EXPECT_EQ(d.batch.users(), (SiteSubset{0, 1}));
  EXPECT_NEAR(d.estimate, 0.82, 0.01);
}

TEST(SingleBatch, OraclesAgreeAtCertainAcceptance) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const World w = DenseWorld(8, 700 + seed, 8.0);
    const ValueFn v = MemoizedValue(w.value_fn());
    MechanismConfig eu;
    eu.gamma_grid = {1.0};
    eu.exact_max_size = 20;
    MechanismConfig bc = eu;
    bc.oracle_kind = OracleKind::best_case_u;
    const BatchDecision a = single_batch_offering(w.users, v, eu);
    const BatchDecision b = single_batch_offering(w.users, v, bc);
    EXPECT_EQ(a.batch.users(), b.batch.users());
    for (const Offer& o : a.batch.offers) {
      EXPECT_EQ(o.price, w.users[o.user].cost.upper());
      EXPECT_EQ(o.recruit_prob, 1.0);
    }
    if (!a.batch.empty()) {
      EXPECT_NEAR(a.estimate, v(a.batch.users()) - a.batch.face_value(), 1e-12);
    }
  }
}

TEST(SingleBatch, EmptyCandidatesGiveEmptyBatch) {
  const BatchDecision d = single_batch_offering({}, ConstantValuation(1.0), Coarse(0));
  EXPECT_TRUE(d.batch.empty());
  EXPECT_EQ(d.gamma, 0.2);
}

TEST(SingleBatch, ZeroValueSendsNothing) {
  const World w = EvalWorld(6, 1);
  const auto t = single_batch_run(w.users, ConstantValuation(0.0), Coarse(0), accept_all_source());
  EXPECT_TRUE(t.rounds.empty());
}

TEST(MultiBatch, AcceptAllAtCertaintyStopsWithinTwoRounds) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const World w = EvalWorld(10, 20 + seed);
    MechanismConfig c = Coarse(seed);
    c.gamma_grid = {1.0};
    const auto t = multi_batch_offering(w.users, w.value_fn(), c, accept_all_source());
    EXPECT_LE(t.rounds.size(), 2u);
    Audit(t, w.value_fn());
  }
}

TEST(MultiBatch, TotalExpiryYieldsZeroUtility) {
  const World w = EvalWorld(10, 30, 0.0);
  const CostRealization r(w.users, 4, 0);
  const auto t = multi_batch_offering(w.users, w.value_fn(), Coarse(1), realization_source(r));
  EXPECT_EQ(t.achieved_utility, 0.0);
  EXPECT_TRUE(t.recruited.empty());
  Audit(t, w.value_fn());
}

TEST(MultiBatch, SendGateRespectsThreshold) {
  const World w = EvalWorld(15, 31);
  MechanismConfig c = Coarse(2);
  const CostRealization r(w.users, 4, 1);
  const auto t = multi_batch_offering(w.users, w.value_fn(), c, realization_source(r));
  for (const Round& round : t.rounds) EXPECT_GT(round.estimate, c.tau);
}

TEST(VmSingleBatch, ZeroBudgetGivesEmptyBatchAtFirstGamma) {
  const World w = EvalWorld(8, 40);
  const BatchDecision d = vm_single_batch(w.users, w.value_fn(), Coarse(0, 0.0));
  EXPECT_TRUE(d.batch.empty());
  EXPECT_EQ(d.gamma, 0.2);
}

TEST(VmSingleBatch, CertainAcceptanceReducesToBudgetedValue) {
  const World w = DenseWorld(7, 41);
  MechanismConfig c = Coarse(0, 1.0);
  c.gamma_grid = {1.0};
  const BatchDecision d = vm_single_batch(w.users, w.value_fn(), c);
  EXPECT_LE(d.batch.face_value(), 1.0 + 1e-12);
  EXPECT_NEAR(d.estimate, w.value_fn()(d.batch.users()), 1e-12);
}

TEST(VmSingleBatch, ExpectedValueBound) {
  const double bound = 1.0 - 1.0 / std::sqrt(std::exp(1.0));
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const World w = DenseWorld(4 + seed % 5, 800 + seed);
    const ValueFn v = MemoizedValue(w.value_fn());
    for (auto obj : {VmObjective::value, VmObjective::expected_value}) {
      MechanismConfig c = Coarse(seed, 0.3 + 0.2 * seed);
      c.exact_max_size = 20;
      c.vm_objective = obj;
      const BatchDecision d = vm_single_batch(w.users, v, c);
      const OfferBatch priced = price_batch(w.users, d.gamma);
      std::vector<double> prices;
      for (const auto& o : priced.offers) prices.push_back(o.price);
      const BudgetedInstance inst{
          SetFunctionOracle(priced.size(),
                            [&](const SiteSubset& s) {
                              return v(detail::ids_of(priced, s));
                            }),
          prices, c.budget};
      const double opt = brute_force_budgeted_max(inst).value;
      EXPECT_LE(d.batch.face_value(), c.budget + 1e-12);
      EXPECT_GE(exact_ev(v, d.batch), bound * d.gamma * opt - 1e-12);
    }
  }
}

TEST(VmMultiBatch, BudgetBelowCheapestPriceSendsNothing) {
  const World w = EvalWorld(6, 42);
  const auto t = vm_multi_batch(w.users, w.value_fn(), Coarse(0, 0.05), accept_all_source());
  EXPECT_TRUE(t.rounds.empty());
}

TEST(VmMultiBatch, FaceValueWithinBudget) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const World w = EvalWorld(12, 50 + seed);
    const double budget = 0.3 * (1 + seed % 4);
    MechanismConfig c = Coarse(seed, budget);
    if (seed % 2) c.gamma_grid = {1.0};
    const CostRealization r(w.users, 7, seed);
    const auto t = vm_multi_batch(w.users, w.value_fn(), c, seed % 3 ? realization_source(r)
                                                                     : accept_all_source());
    EXPECT_LE(t.total_payment, t.face_value() + 1e-12);
    EXPECT_LE(t.face_value(), budget + 1e-9);
    Audit(t, w.value_fn());
  }
}

TEST(AllMechanisms, AuditAndDeterminism) {
  const World w = EvalWorld(14, 60);
  const ValueFn v = MemoizedValue(w.value_fn());
  for (std::uint64_t it = 0; it < 3; ++it) {
    const CostRealization r(w.users, 11, it);
    for (auto k : kAllKinds) {
      const MechanismConfig c = Coarse(17);
      const auto a = run_mechanism(k, w.users, v, c, realization_source(r));
      const auto b = run_mechanism(k, w.users, v, c, realization_source(r));
      Audit(a, v);
      ASSERT_EQ(a.rounds.size(), b.rounds.size()) << to_string(k);
      for (std::size_t j = 0; j < a.rounds.size(); ++j) {
        EXPECT_EQ(a.rounds[j].outcomes, b.rounds[j].outcomes);
        EXPECT_EQ(a.rounds[j].gamma, b.rounds[j].gamma);
        EXPECT_EQ(a.rounds[j].estimate, b.rounds[j].estimate);
        ASSERT_EQ(a.rounds[j].batch.size(), b.rounds[j].batch.size());
        for (std::size_t q = 0; q < a.rounds[j].batch.size(); ++q) {
          EXPECT_EQ(a.rounds[j].batch.offers[q].user, b.rounds[j].batch.offers[q].user);
          EXPECT_EQ(a.rounds[j].batch.offers[q].price, b.rounds[j].batch.offers[q].price);
        }
      }
      EXPECT_EQ(a.achieved_utility, b.achieved_utility);
    }
  }
}

TEST(AllMechanisms, CacheDoesNotChangeResults) {
  const World w = EvalWorld(14, 61);
  const ValueFn v = MemoizedValue(w.value_fn());
  for (auto k : {MechanismKind::single_batch, MechanismKind::multi_batch,
                 MechanismKind::vm_single_batch, MechanismKind::vm_multi_batch}) {
    DecisionCache cache;
    for (std::uint64_t it = 0; it < 4; ++it) {
      const CostRealization r(w.users, 12, it);
      const MechanismConfig c = Coarse(18);
      const auto plain = run_mechanism(k, w.users, v, c, realization_source(r));
      const auto cached = run_mechanism(k, w.users, v, c, realization_source(r), &cache);
      EXPECT_EQ(plain.recruited, cached.recruited);
      EXPECT_EQ(plain.achieved_utility, cached.achieved_utility);
      EXPECT_EQ(plain.batch_count, cached.batch_count);
    }
    EXPECT_GT(cache.hits(), 0u) << to_string(k);
  }
}

TEST(AllMechanisms, SourceMustAnswerEveryOffer) {
  const World w = EvalWorld(8, 62);
  const OutcomeSource bad = [](const OfferBatch&) { return OutcomeVector{}; };
  EXPECT_THROW(single_batch_run(w.users, w.value_fn(), Coarse(0), bad), std::exception);
}

}  // namespace
}  // namespace crowdsense
