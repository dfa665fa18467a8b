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

#ifndef CROWDSENSE_SCENARIO_HPP_
#define CROWDSENSE_SCENARIO_HPP_

// Experiment worlds, cost realizations, outcome simulation, and paired
// comparisons of mechanisms on shared realizations.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crowdsense/cost_models.hpp"
#include "crowdsense/errors.hpp"
#include "crowdsense/expected_utility.hpp"
#include "crowdsense/mechanisms.hpp"
#include "crowdsense/random.hpp"
#include "crowdsense/spatial_gp.hpp"
#include "crowdsense/valuation.hpp"

namespace crowdsense {

// Named substreams of the master seed.
inline std::uint64_t world_stream(std::uint64_t master) { return derive_seed(master, "world"); }
inline std::uint64_t user_stream(std::uint64_t master) { return derive_seed(master, "users"); }
inline std::uint64_t cost_stream(std::uint64_t master) { return derive_seed(master, "costs"); }
inline std::uint64_t mc_stream(std::uint64_t master) { return derive_seed(master, "mc"); }

struct ScenarioParams {
  double area_km = 6.0;
  double grid_resolution_km = 0.45;
  std::size_t n_users = 30;
  KernelSpec kernel{};
  ValuationParams valuation{4.0, 0.0};
  CostKind cost_kind = CostKind::uniform;
  double delta_c = 0.5;
  double rho = 1.0;
  double min_distance_km = 0.0;  // 0 disables thinning

  void validate() const {
    if (!(area_km > 0.0) || !std::isfinite(area_km)) {
      throw ConfigError("area_km must be > 0");
    }
    if (!(grid_resolution_km > 0.0) || !std::isfinite(grid_resolution_km)) {
      throw ConfigError("grid_resolution_km must be > 0");
    }
    if (n_users == 0) throw ConfigError("n_users must be >= 1");
    if (!(delta_c > 0.0)) throw ConfigError("delta_c must be > 0");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (!(min_distance_km >= 0.0)) throw ConfigError("min_distance_km must be >= 0");
    try {
      kernel.validate();
      valuation.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

// floor(area / res) points per side, inset by half a resolution.
inline std::vector<Location> make_grid(double area_km, double res_km) {
  const auto per_side = static_cast<std::size_t>(std::floor(area_km / res_km + 1e-9));
  std::vector<Location> grid;
  grid.reserve(per_side * per_side);
  for (std::size_t r = 0; r < per_side; ++r) {
    for (std::size_t c = 0; c < per_side; ++c) {
      grid.push_back({res_km / 2 + c * res_km, res_km / 2 + r * res_km});
    }
  }
  return grid;
}

// n i.i.d. uniform points in [0, area]^2. With min_distance > 0 each point
// is redrawn until it is at least that far from all earlier points. Points
// are drawn in order, so a smaller n yields a prefix of a larger one.
inline std::vector<Location> poisson_topology(double area_km, std::size_t n,
                                              std::uint64_t seed,
                                              double min_distance_km = 0.0) {
  if (n == 0) throw std::invalid_argument("poisson_topology: n must be >= 1");
  constexpr int kMaxAttempts = 100000;
  Rng rng = make_rng(seed);
  std::vector<Location> pts;
  pts.reserve(n);
  while (pts.size() < n) {
    int attempts = 0;
    for (;;) {
      const Location p{area_km * uniform01(rng), area_km * uniform01(rng)};
      bool ok = true;
      for (const auto& q : pts) {
        if (distance(p, q) < min_distance_km) {
          ok = false;
          break;
        }
      }
      if (ok) {
        pts.push_back(p);
        break;
      }
      if (++attempts >= kMaxAttempts) {
        throw ConfigError("poisson_topology: cannot place " + std::to_string(n) +
                          " users at the requested minimum distance");
      }
    }
  }
  return pts;
}

// Lower cost bound ~ U[0.1, 0.2], noise variance ~ U[0.5, 1], support width
// delta_c. User ids follow location order.
inline std::vector<UserProfile> generate_users(std::span<const Location> locations,
                                               CostKind kind, double delta_c,
                                               std::uint64_t seed, double rho = 1.0) {
  if (!(delta_c > 0.0)) throw std::invalid_argument("generate_users: delta_c must be > 0");
  Rng rng = make_rng(seed);
  std::vector<UserProfile> users;
  users.reserve(locations.size());
  for (std::size_t i = 0; i < locations.size(); ++i) {
    const double lower = 0.1 + 0.1 * uniform01(rng);
    const double noise = 0.5 + 0.5 * uniform01(rng);
    CostDistribution cost = kind == CostKind::uniform
                                ? CostDistribution::uniform(lower, delta_c)
                                : CostDistribution::truncated_normal(lower, delta_c);
    UserProfile u{i, locations[i], noise, cost, rho};
    u.validate();
    users.push_back(std::move(u));
  }
  return users;
}

struct World {
  std::vector<UserProfile> users;
  std::shared_ptr<const SiteField> field;
  ValuationParams valuation;

  ValueFn value_fn() const { return GpValuation(field, valuation); }
};

inline World make_world(const ScenarioParams& params, std::uint64_t master_seed) {
  params.validate();
  World w;
  const auto locations = poisson_topology(params.area_km, params.n_users,
                                          world_stream(master_seed), params.min_distance_km);
  w.users = generate_users(locations, params.cost_kind, params.delta_c,
                           user_stream(master_seed), params.rho);
  std::vector<UserSite> sites;
  for (const auto& u : w.users) sites.push_back({u.location, u.noise_variance});
  w.field = std::make_shared<SiteField>(std::move(sites),
                                        make_grid(params.area_km, params.grid_resolution_km),
                                        params.kernel);
  w.valuation = params.valuation;
  return w;
}

// One iteration's private costs and expiry coins. Draws are keyed by
// (iteration, user id), so every mechanism, and every world sharing user
// ids, sees the same environment in a given iteration.
class CostRealization {
 public:
  CostRealization(std::span<const UserProfile> users, std::uint64_t stream,
                  std::uint64_t iteration) {
    for (const auto& u : users) {
      Entry e;
      e.cost = u.cost.inv_cdf(counter_uniform(stream, iteration, 2 * u.id));
      e.coin = counter_uniform(stream, iteration, 2 * u.id + 1);
      e.rho = u.rho;
      entries_.emplace(u.id, e);
    }
  }

  double cost(std::size_t user) const { return at(user).cost; }
  double expiry_coin(std::size_t user) const { return at(user).coin; }
  double rho(std::size_t user) const { return at(user).rho; }
  bool covers(std::size_t user) const { return entries_.count(user) > 0; }

 private:
  struct Entry {
    double cost = 0.0;
    double coin = 0.0;
    double rho = 1.0;
  };
  const Entry& at(std::size_t user) const {
    auto it = entries_.find(user);
    if (it == entries_.end()) {
      throw std::out_of_range("CostRealization: unknown user " + std::to_string(user));
    }
    return it->second;
  }
  std::unordered_map<std::size_t, Entry> entries_;
};

// An offer expires iff the user's coin >= rho; otherwise it is accepted iff
// the realized cost is at most the price.
inline OutcomeVector simulate_outcomes(const CostRealization& r, const OfferBatch& batch) {
  OutcomeVector out;
  out.reserve(batch.size());
  for (const auto& o : batch.offers) {
    if (r.expiry_coin(o.user) >= r.rho(o.user)) {
      out.push_back(Outcome::expired);
    } else {
      out.push_back(r.cost(o.user) <= o.price ? Outcome::accepted : Outcome::rejected);
    }
  }
  return out;
}

inline OutcomeSource realization_source(const CostRealization& r) {
  return [&r](const OfferBatch& b) { return simulate_outcomes(r, b); };
}

struct MechanismSpec {
  std::string name;
  MechanismKind kind = MechanismKind::single_batch;
  MechanismConfig config;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::string mechanism;
  double utility = 0.0;
  double value = 0.0;
  double payment = 0.0;
  std::size_t batches = 0;
  std::size_t offers = 0;
  double gamma_star = 0.0;
  double wall_ms = 0.0;
};

struct Moments {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / xs.size();
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / (xs.size() - 1) / xs.size());
  }
  return m;
}

struct MechanismSummary {
  std::string name;
  Moments utility, value, payment, batches, offers, gamma_star;
};

struct ComparisonResult {
  std::vector<IterationRecord> rows;  // iteration-major, mechanism order within
  std::vector<MechanismSummary> summary;
};

struct RunOptions {
  std::size_t parallel = 1;
  bool record_timing = false;  // wall_ms stays 0 otherwise, keeping output reproducible
};

inline std::vector<MechanismSummary> summarize(const std::vector<IterationRecord>& rows,
                                               std::span<const MechanismSpec> mechs) {
  std::vector<MechanismSummary> out;
  for (const auto& m : mechs) {
    std::vector<double> u, v, p, b, o, g;
    for (const auto& r : rows) {
      if (r.mechanism != m.name) continue;
      u.push_back(r.utility);
      v.push_back(r.value);
      p.push_back(r.payment);
      b.push_back(static_cast<double>(r.batches));
      o.push_back(static_cast<double>(r.offers));
      g.push_back(r.gamma_star);
    }
    out.push_back({m.name, moments(u), moments(v), moments(p), moments(b), moments(o),
                   moments(g)});
  }
  return out;
}

// Paired replay: each iteration draws one realization and feeds it to every
// mechanism. Mechanism-internal MC streams derive from the master seed and
// the mechanism kind, not from the iteration or the list position, so two
// entries of the same kind share draws. Iterations are split
// across workers; each worker owns its value cache and decision caches, and
// rows are merged by iteration index.
inline ComparisonResult run_comparison(const World& world,
                                       std::span<const MechanismSpec> mechs,
                                       std::size_t iterations, std::uint64_t master_seed,
                                       const RunOptions& opts = {}) {
  if (iterations == 0) throw ConfigError("iterations must be >= 1");
  if (mechs.empty()) throw ConfigError("at least one mechanism is required");
  std::vector<MechanismConfig> configs;
  for (std::size_t m = 0; m < mechs.size(); ++m) {
    MechanismConfig c = mechs[m].config;
    c.seed = derive_seed(mc_stream(master_seed), to_string(mechs[m].kind));
    c.validate();
    configs.push_back(std::move(c));
  }
  const std::uint64_t costs = cost_stream(master_seed);
  std::vector<IterationRecord> rows(iterations * mechs.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.parallel, iterations));

  auto work = [&](std::size_t w) {
    MemoizedValue memo(world.value_fn());
    const ValueFn v = memo;
    std::vector<DecisionCache> caches(mechs.size());
    for (std::size_t it = w; it < iterations; it += workers) {
      const CostRealization real(world.users, costs, it);
      const OutcomeSource source = realization_source(real);
      for (std::size_t m = 0; m < mechs.size(); ++m) {
        const auto t0 = std::chrono::steady_clock::now();
        const MechanismTranscript t =
            run_mechanism(mechs[m].kind, world.users, v, configs[m], source, &caches[m]);
        const auto t1 = std::chrono::steady_clock::now();
        IterationRecord& r = rows[it * mechs.size() + m];
        r.iteration = it;
        r.mechanism = mechs[m].name;
        r.utility = t.achieved_utility;
        r.value = t.achieved_value;
        r.payment = t.total_payment;
        r.batches = t.batch_count;
        r.offers = t.offer_count;
        r.gamma_star = t.first_gamma();
        r.wall_ms = opts.record_timing
                        ? std::chrono::duration<double, std::milli>(t1 - t0).count()
                        : 0.0;
      }
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  ComparisonResult result;
  result.summary = summarize(rows, mechs);
  result.rows = std::move(rows);
  return result;
}

inline ComparisonResult run_comparison(const ScenarioParams& params,
                                       std::span<const MechanismSpec> mechs,
                                       std::size_t iterations, std::uint64_t master_seed,
                                       const RunOptions& opts = {}) {
  return run_comparison(make_world(params, master_seed), mechs, iterations, master_seed,
                        opts);
}

}  // namespace crowdsense

#endif  // CROWDSENSE_SCENARIO_HPP_
