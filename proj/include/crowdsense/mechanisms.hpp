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

#ifndef CROWDSENSE_MECHANISMS_HPP_
#define CROWDSENSE_MECHANISMS_HPP_

// Posted-price offering mechanisms: sequential offering, single- and
// multi-batch offering driven by double-greedy user selection, and the
// budget-constrained value-maximization variants driven by greedy knapsack.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <tuple>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdsense/expected_utility.hpp"
#include "crowdsense/random.hpp"
#include "crowdsense/site_subset.hpp"
#include "crowdsense/submodular.hpp"
#include "crowdsense/valuation.hpp"

namespace crowdsense {

// Which set function the double greedy maximizes for a fixed gamma.
enum class OracleKind {
  best_case_u,  // v(A) - p_gamma(A) + p_gamma(S): assumes every offer is taken
  mc_eu,        // estimated EU_gamma(A) + p0
};

// Objective handed to greedy knapsack in the budgeted variants.
enum class VmObjective {
  value,           // v(. | recruited)
  expected_value,  // EV_gamma(. | recruited)
};

inline std::vector<double> default_gamma_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(k / 20.0);
  return grid;
}

struct MechanismConfig {
  std::vector<double> gamma_grid = default_gamma_grid();
  double tau = 0.01;
  OracleKind oracle_kind = OracleKind::mc_eu;
  std::size_t mc_iterations = 50;
  std::size_t exact_max_size = 12;
  double budget = 0.0;   // VM variants only
  double tau_ev = 0.01;  // VM multi-batch send threshold on marginal EV
  VmObjective vm_objective = VmObjective::value;
  bool singleton_fallback = true;
  bool always_recompute = false;  // sequential: re-price after every offer
  std::uint64_t seed = 0;

  void validate() const {
    if (gamma_grid.empty()) {
      throw std::invalid_argument("MechanismConfig: gamma grid is empty");
    }
    for (std::size_t k = 0; k < gamma_grid.size(); ++k) {
      check_gamma(gamma_grid[k]);
      if (k > 0 && !(gamma_grid[k] > gamma_grid[k - 1])) {
        throw std::invalid_argument("MechanismConfig: gamma grid must be ascending");
      }
    }
    if (!(tau > 0.0)) throw std::invalid_argument("MechanismConfig: tau must be > 0");
    if (mc_iterations == 0) {
      throw std::invalid_argument("MechanismConfig: mc_iterations must be >= 1");
    }
    if (!(budget >= 0.0)) {
      throw std::invalid_argument("MechanismConfig: budget must be >= 0");
    }
  }

  EstimatorConfig estimator(std::uint64_t stream) const {
    return EstimatorConfig{ExpectationMode::automatic, mc_iterations,
                           exact_max_size, stream};
  }
};

enum class Outcome { expired, rejected, accepted };
using OutcomeVector = std::vector<Outcome>;

// Answers a batch with one outcome per offer, in offer order.
using OutcomeSource = std::function<OutcomeVector(const OfferBatch&)>;

inline OutcomeSource accept_all_source() {
  return [](const OfferBatch& b) {
    return OutcomeVector(b.size(), Outcome::accepted);
  };
}

struct Round {
  OfferBatch batch;
  OutcomeVector outcomes;
  double gamma = 0.0;     // desired recruit probability used to price the batch
  double estimate = 0.0;  // estimate that justified sending it
};

struct MechanismTranscript {
  std::vector<Round> rounds;
  SiteSubset recruited;
  double total_payment = 0.0;
  double achieved_value = 0.0;
  double achieved_utility = 0.0;
  std::size_t batch_count = 0;
  std::size_t offer_count = 0;

  double first_gamma() const { return rounds.empty() ? 0.0 : rounds.front().gamma; }
  double face_value() const {
    double total = 0.0;
    for (const auto& r : rounds) total += r.batch.face_value();
    return total;
  }
};

inline MechanismTranscript finalize_transcript(std::vector<Round> rounds,
                                               const ValueFn& v) {
  MechanismTranscript t;
  std::vector<std::size_t> ids;
  for (const auto& r : rounds) {
    for (std::size_t k = 0; k < r.batch.size(); ++k) {
      if (r.outcomes.at(k) == Outcome::accepted) {
        ids.push_back(r.batch.offers[k].user);
        t.total_payment += r.batch.offers[k].price;
      }
    }
    t.offer_count += r.batch.size();
  }
  t.recruited = SiteSubset(std::move(ids));
  t.achieved_value = v(t.recruited);
  t.achieved_utility = t.achieved_value - t.total_payment;
  t.batch_count = rounds.size();
  t.rounds = std::move(rounds);
  return t;
}

struct BatchDecision {
  OfferBatch batch;
  double gamma = 0.0;
  double estimate = 0.0;  // EU (or EV) of the batch given the recruited set
};

// Batch decisions are pure functions of (candidates, recruited set, budget,
// seed) for a fixed value function and config. Replaying one world many
// times repeats the early decisions, so callers may share a cache across
// runs of the same mechanism. Not thread-safe.
class DecisionCache {
 public:
  using Key = std::tuple<std::uint64_t, SiteSubset, SiteSubset, double>;

  template <typename Compute>
  const BatchDecision& get(const Key& key, Compute&& compute) {
    auto it = entries_.find(key);
    if (it == entries_.end()) it = entries_.emplace(key, compute()).first;
    else ++hits_;
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t hits() const { return hits_; }

 private:
  std::map<Key, BatchDecision> entries_;
  std::size_t hits_ = 0;
};

namespace detail {

inline SiteSubset ids_of_users(std::span<const UserProfile> users) {
  std::vector<std::size_t> ids;
  for (const auto& u : users) ids.push_back(u.id);
  return SiteSubset(std::move(ids));
}

inline std::vector<UserProfile> sorted_by_id(std::span<const UserProfile> users) {
  std::vector<UserProfile> out(users.begin(), users.end());
  std::sort(out.begin(), out.end(),
            [](const UserProfile& a, const UserProfile& b) { return a.id < b.id; });
  return out;
}

inline SiteSubset ids_of(const OfferBatch& priced, const SiteSubset& local) {
  std::vector<std::size_t> ids;
  ids.reserve(local.size());
  for (std::size_t k : local) ids.push_back(priced.offers[k].user);
  return SiteSubset(std::move(ids));
}

inline OfferBatch restrict(const OfferBatch& priced, const SiteSubset& local) {
  OfferBatch b;
  for (std::size_t k : local) b.offers.push_back(priced.offers[k]);
  return b;
}

inline constexpr std::uint64_t kRescoreStream = 0x7265736373ull;

inline void record_outcomes(const Round& round, SiteSubset& recruited) {
  for (std::size_t k = 0; k < round.batch.size(); ++k) {
    if (round.outcomes.at(k) == Outcome::accepted) {
      recruited = recruited.with(round.batch.offers[k].user);
    }
  }
}

inline std::vector<UserProfile> drop_offered(std::vector<UserProfile> users,
                                             const OfferBatch& batch) {
  const SiteSubset offered = batch.users();
  std::erase_if(users, [&](const UserProfile& u) { return offered.contains(u.id); });
  return users;
}

inline OutcomeVector ask(const OutcomeSource& source, const OfferBatch& batch) {
  OutcomeVector out = source(batch);
  if (out.size() != batch.size()) {
    throw std::runtime_error("outcome source returned the wrong number of outcomes");
  }
  return out;
}

}  // namespace detail

// One batch: for every gamma in the grid, price all candidates at gamma,
// select users by double greedy on the chosen oracle, and keep the
// candidate batch with the highest estimated EU. Each gamma's selection uses
// its own MC substream; the final comparison re-scores all candidates on one
// common substream. Equal scores go to the larger gamma. The sweep stops at
// the first gamma whose selection is empty.
inline BatchDecision single_batch_offering(std::span<const UserProfile> users,
                                           const ValueFn& v,
                                           const MechanismConfig& cfg,
                                           const SiteSubset& recruited = {}) {
  cfg.validate();
  const std::vector<UserProfile> cands = detail::sorted_by_id(users);
  BatchDecision none{OfferBatch{}, cfg.gamma_grid.front(), 0.0};
  if (cands.empty()) return none;

  const double base = recruited.empty() ? 0.0 : v(recruited);
  struct Candidate {
    double gamma;
    OfferBatch batch;
  };
  std::vector<Candidate> found;
  for (std::size_t k = 0; k < cfg.gamma_grid.size(); ++k) {
    const double gamma = cfg.gamma_grid[k];
    const ShiftedEu eu(v, cands, gamma, recruited,
                       cfg.estimator(derive_seed(cfg.seed, k)));
    SiteSubset local;
    if (cfg.oracle_kind == OracleKind::mc_eu) {
      local = usm_double_greedy(eu.oracle());
    } else {
      const OfferBatch& priced = eu.priced();
      const double all_prices = priced.face_value();
      SetFunctionOracle best_case(priced.size(), [&](const SiteSubset& s) {
        return v(set_union(detail::ids_of(priced, s), recruited)) - base -
               detail::restrict(priced, s).face_value() + all_prices;
      });
      local = usm_double_greedy(best_case);
    }
    if (local.empty()) break;
    found.push_back({gamma, eu.batch_for(local)});
  }

  const EstimatorConfig rescore = cfg.estimator(derive_seed(cfg.seed, detail::kRescoreStream));
  BatchDecision best = none;
  bool have = false;
  for (auto& c : found) {
    const double score = conditional_marginal_eu(v, c.batch, recruited, rescore);
    if (have ? score >= best.estimate : score > 0.0) {
      best = {std::move(c.batch), c.gamma, score};
      have = true;
    }
  }
  return best;
}

// One offer per round: price every unoffered user at its best single price
// against the currently recruited set, offer to the best while its EU beats
// tau, and re-price only after an acceptance.
inline MechanismTranscript sequential_offering(std::span<const UserProfile> users,
                                               const ValueFn& v,
                                               const MechanismConfig& cfg,
                                               const OutcomeSource& source) {
  cfg.validate();
  const std::vector<UserProfile> cands = detail::sorted_by_id(users);
  const std::size_t n = cands.size();
  std::vector<bool> offered(n, false);
  std::vector<Round> rounds;
  SiteSubset recruited;
  std::size_t offered_count = 0;

  while (offered_count < n) {
    const double base = recruited.empty() ? 0.0 : v(recruited);
    std::vector<PriceChoice> choice(n);
    std::vector<double> eu(n, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < n; ++k) {
      if (offered[k]) continue;
      const double marginal = v(recruited.with(cands[k].id)) - base;
      choice[k] = best_single_price(marginal, cands[k].cost);
      eu[k] = choice[k].gain * cands[k].rho;
    }

    bool reprice = false;
    while (!reprice) {
      std::size_t pick = n;
      for (std::size_t k = 0; k < n; ++k) {
        if (!offered[k] && (pick == n || eu[k] > eu[pick])) pick = k;
      }
      if (pick == n || !(eu[pick] > cfg.tau)) {
        return finalize_transcript(std::move(rounds), v);
      }
      Round round;
      round.batch.offers.push_back(make_offer(cands[pick], choice[pick].price));
      round.gamma = round.batch.offers.front().recruit_prob;
      round.estimate = eu[pick];
      round.outcomes = detail::ask(source, round.batch);
      offered[pick] = true;
      ++offered_count;
      if (round.outcomes.front() == Outcome::accepted) {
        recruited = recruited.with(cands[pick].id);
        reprice = true;
      } else if (cfg.always_recompute) {
        reprice = true;
      }
      rounds.push_back(std::move(round));
    }
  }
  return finalize_transcript(std::move(rounds), v);
}

// Sends the best single batch once.
inline MechanismTranscript single_batch_run(std::span<const UserProfile> users,
                                            const ValueFn& v,
                                            const MechanismConfig& cfg,
                                            const OutcomeSource& source,
                                            DecisionCache* cache = nullptr) {
  auto compute = [&] { return single_batch_offering(users, v, cfg); };
  BatchDecision d = cache ? cache->get({cfg.seed, detail::ids_of_users(users), {}, 0.0}, compute)
                          : compute();
  std::vector<Round> rounds;
  if (!d.batch.empty()) {
    Round r{std::move(d.batch), {}, d.gamma, d.estimate};
    r.outcomes = detail::ask(source, r.batch);
    rounds.push_back(std::move(r));
  }
  return finalize_transcript(std::move(rounds), v);
}

// Repeated single batches on the users not yet offered, each conditioned on
// the users recruited so far, while the batch's marginal EU beats tau.
inline MechanismTranscript multi_batch_offering(std::span<const UserProfile> users,
                                                const ValueFn& v,
                                                const MechanismConfig& cfg,
                                                const OutcomeSource& source,
                                                DecisionCache* cache = nullptr) {
  cfg.validate();
  std::vector<UserProfile> remaining = detail::sorted_by_id(users);
  std::vector<Round> rounds;
  SiteSubset recruited;
  for (std::uint64_t r = 0; !remaining.empty(); ++r) {
    MechanismConfig round_cfg = cfg;
    round_cfg.seed = derive_seed(cfg.seed, r);
    auto compute = [&] { return single_batch_offering(remaining, v, round_cfg, recruited); };
    BatchDecision d =
        cache ? cache->get({round_cfg.seed, detail::ids_of_users(remaining), recruited, 0.0},
                           compute)
              : compute();
    if (d.batch.empty() || !(d.estimate > cfg.tau)) break;
    Round round{std::move(d.batch), {}, d.gamma, d.estimate};
    round.outcomes = detail::ask(source, round.batch);
    detail::record_outcomes(round, recruited);
    remaining = detail::drop_offered(std::move(remaining), round.batch);
    rounds.push_back(std::move(round));
  }
  return finalize_transcript(std::move(rounds), v);
}

// Budgeted batch: for every gamma, greedy knapsack over gamma-prices with
// the configured objective, keeping the batch of highest estimated EV. The
// hard budget applies to the face value of the batch.
inline BatchDecision vm_single_batch(std::span<const UserProfile> users,
                                     const ValueFn& v, const MechanismConfig& cfg,
                                     const SiteSubset& recruited = {},
                                     double budget = -1.0) {
  cfg.validate();
  if (budget < 0.0) budget = cfg.budget;
  const std::vector<UserProfile> cands = detail::sorted_by_id(users);
  BatchDecision none{OfferBatch{}, cfg.gamma_grid.front(), 0.0};
  if (cands.empty()) return none;
  const double base = recruited.empty() ? 0.0 : v(recruited);

  struct Candidate {
    double gamma;
    OfferBatch batch;
  };
  std::vector<Candidate> found;
  for (std::size_t k = 0; k < cfg.gamma_grid.size(); ++k) {
    const double gamma = cfg.gamma_grid[k];
    const OfferBatch priced = price_batch(cands, gamma);
    const EstimatorConfig est = cfg.estimator(derive_seed(cfg.seed, k));
    SetFunctionOracle::Evaluator objective;
    if (cfg.vm_objective == VmObjective::value) {
      objective = [&](const SiteSubset& s) {
        return v(set_union(detail::ids_of(priced, s), recruited)) - base;
      };
    } else {
      objective = [&](const SiteSubset& s) {
        return conditional_marginal_ev(v, detail::restrict(priced, s), recruited, est);
      };
    }
    std::vector<double> prices;
    for (const auto& o : priced.offers) prices.push_back(o.price);
    BudgetedInstance inst{SetFunctionOracle(priced.size(), objective),
                          std::move(prices), budget};
    const SiteSubset local = greedy_knapsack(inst, cfg.singleton_fallback);
    if (!local.empty()) found.push_back({gamma, detail::restrict(priced, local)});
  }

  const EstimatorConfig rescore = cfg.estimator(derive_seed(cfg.seed, detail::kRescoreStream));
  BatchDecision best = none;
  bool have = false;
  for (auto& c : found) {
    const double score = conditional_marginal_ev(v, c.batch, recruited, rescore);
    if (have ? score >= best.estimate : score > 0.0) {
      best = {std::move(c.batch), c.gamma, score};
      have = true;
    }
  }
  return best;
}

inline MechanismTranscript vm_single_batch_run(std::span<const UserProfile> users,
                                               const ValueFn& v,
                                               const MechanismConfig& cfg,
                                               const OutcomeSource& source,
                                               DecisionCache* cache = nullptr) {
  auto compute = [&] { return vm_single_batch(users, v, cfg); };
  BatchDecision d =
      cache ? cache->get({cfg.seed, detail::ids_of_users(users), {}, cfg.budget}, compute)
            : compute();
  std::vector<Round> rounds;
  if (!d.batch.empty()) {
    Round r{std::move(d.batch), {}, d.gamma, d.estimate};
    r.outcomes = detail::ask(source, r.batch);
    rounds.push_back(std::move(r));
  }
  return finalize_transcript(std::move(rounds), v);
}

// Budgeted multi-batch. The running budget drops by the full face value of
// each batch sent, whether or not its offers are accepted.
inline MechanismTranscript vm_multi_batch(std::span<const UserProfile> users,
                                          const ValueFn& v,
                                          const MechanismConfig& cfg,
                                          const OutcomeSource& source,
                                          DecisionCache* cache = nullptr) {
  cfg.validate();
  std::vector<UserProfile> remaining = detail::sorted_by_id(users);
  std::vector<Round> rounds;
  SiteSubset recruited;
  double budget = cfg.budget;
  for (std::uint64_t r = 0; !remaining.empty() && budget > 0.0; ++r) {
    MechanismConfig round_cfg = cfg;
    round_cfg.seed = derive_seed(cfg.seed, r);
    auto compute = [&] {
      return vm_single_batch(remaining, v, round_cfg, recruited, budget);
    };
    BatchDecision d =
        cache ? cache->get({round_cfg.seed, detail::ids_of_users(remaining), recruited, budget},
                           compute)
              : compute();
    if (d.batch.empty() || !(d.estimate > cfg.tau_ev)) break;
    budget -= d.batch.face_value();
    Round round{std::move(d.batch), {}, d.gamma, d.estimate};
    round.outcomes = detail::ask(source, round.batch);
    detail::record_outcomes(round, recruited);
    remaining = detail::drop_offered(std::move(remaining), round.batch);
    rounds.push_back(std::move(round));
  }
  return finalize_transcript(std::move(rounds), v);
}

enum class MechanismKind {
  sequential,
  single_batch,
  multi_batch,
  vm_single_batch,
  vm_multi_batch,
};

inline std::string_view to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::sequential: return "sequential";
    case MechanismKind::single_batch: return "single_batch";
    case MechanismKind::multi_batch: return "multi_batch";
    case MechanismKind::vm_single_batch: return "vm_single_batch";
    case MechanismKind::vm_multi_batch: return "vm_multi_batch";
  }
  return "unknown";
}

inline MechanismKind parse_mechanism_kind(std::string_view s) {
  for (auto k : {MechanismKind::sequential, MechanismKind::single_batch,
                 MechanismKind::multi_batch, MechanismKind::vm_single_batch,
                 MechanismKind::vm_multi_batch}) {
    if (s == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown mechanism kind '" + std::string(s) + "'");
}

inline MechanismTranscript run_mechanism(MechanismKind kind,
                                         std::span<const UserProfile> users,
                                         const ValueFn& v,
                                         const MechanismConfig& cfg,
                                         const OutcomeSource& source,
                                         DecisionCache* cache = nullptr) {
  switch (kind) {
    case MechanismKind::sequential: return sequential_offering(users, v, cfg, source);
    case MechanismKind::single_batch: return single_batch_run(users, v, cfg, source, cache);
    case MechanismKind::multi_batch:
      return multi_batch_offering(users, v, cfg, source, cache);
    case MechanismKind::vm_single_batch:
      return vm_single_batch_run(users, v, cfg, source, cache);
    case MechanismKind::vm_multi_batch: return vm_multi_batch(users, v, cfg, source, cache);
  }
  throw std::invalid_argument("unknown mechanism kind");
}

}  // namespace crowdsense

#endif  // CROWDSENSE_MECHANISMS_HPP_
