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

#ifndef CROWDSENSE_SUBMODULAR_HPP_
#define CROWDSENSE_SUBMODULAR_HPP_

// Set-function maximizers: the deterministic double greedy for unconstrained
// submodular maximization, the cost-benefit greedy under a knapsack budget,
// and exhaustive oracles for checking both.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crowdsense/random.hpp"
#include "crowdsense/site_subset.hpp"

namespace crowdsense {

// f : 2^{0..n-1} -> R with a query counter.
class SetFunctionOracle {
 public:
  using Evaluator = std::function<double(const SiteSubset&)>;

  SetFunctionOracle(std::size_t n, Evaluator f)
      : n_(n), f_(std::move(f)), queries_(std::make_shared<std::size_t>(0)) {}

  std::size_t ground_size() const { return n_; }

  double operator()(const SiteSubset& s) const {
    ++*queries_;
    return f_(s);
  }

  std::size_t queries() const { return *queries_; }
  void reset_queries() const { *queries_ = 0; }

 private:
  std::size_t n_;
  Evaluator f_;
  std::shared_ptr<std::size_t> queries_;
};

// Single pass in ascending index order. Running values f(A) and f(B) are
// carried forward, so the oracle is queried exactly 2n + 2 times.
inline SiteSubset usm_double_greedy(const SetFunctionOracle& f) {
  const std::size_t n = f.ground_size();
  SiteSubset a;
  SiteSubset b = SiteSubset::range(n);
  double fa = f(a);
  double fb = f(b);
  for (std::size_t u = 0; u < n; ++u) {
    SiteSubset a_plus = a.with(u);
    SiteSubset b_minus = b.without(u);
    const double fa_plus = f(a_plus);
    const double fb_minus = f(b_minus);
    const double gain_add = fa_plus - fa;
    const double gain_drop = fb_minus - fb;
    if (gain_add >= gain_drop) {
      a = std::move(a_plus);
      fa = fa_plus;
    } else {
      b = std::move(b_minus);
      fb = fb_minus;
    }
  }
  return a;
}

struct Maximum {
  SiteSubset subset;
  double value = 0.0;
};

inline constexpr std::size_t kMaxEnumeration = 20;

namespace detail {

// Smaller cardinality first, then lexicographic.
inline bool preferred(const SiteSubset& x, const SiteSubset& y) {
  if (x.size() != y.size()) return x.size() < y.size();
  return x < y;
}

}  // namespace detail

inline Maximum brute_force_max(const SetFunctionOracle& f) {
  const std::size_t n = f.ground_size();
  if (n > kMaxEnumeration) {
    throw std::invalid_argument("brute_force_max: ground set too large to enumerate");
  }
  Maximum best{SiteSubset{}, f(SiteSubset{})};
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    SiteSubset s = SiteSubset::from_mask(mask);
    const double v = f(s);
    if (v > best.value || (v == best.value && detail::preferred(s, best.subset))) {
      best = {std::move(s), v};
    }
  }
  return best;
}

struct BudgetedInstance {
  SetFunctionOracle oracle;
  std::vector<double> prices;  // per ground element, >= 0
  double budget = 0.0;

  void validate() const {
    if (prices.size() != oracle.ground_size()) {
      throw std::invalid_argument("BudgetedInstance: one price per element required");
    }
    for (double p : prices) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("BudgetedInstance: prices must be finite and >= 0");
      }
    }
    if (!(budget >= 0.0)) {
      throw std::invalid_argument("BudgetedInstance: budget must be >= 0");
    }
  }
};

inline double total_price(const BudgetedInstance& inst, const SiteSubset& s) {
  double p = 0.0;
  for (std::size_t i : s) p += inst.prices[i];
  return p;
}

// Cost-benefit greedy under a knapsack budget. An element leaves the
// candidate pool once it is the best-ratio pick, whether or not it fit.
// Ratio ties go to the lower index. The final singleton comparison can be
// switched off.
inline SiteSubset greedy_knapsack(const BudgetedInstance& inst,
                                  bool singleton_fallback = true) {
  inst.validate();
  const auto& f = inst.oracle;
  const std::size_t n = f.ground_size();
  std::vector<bool> pool(n, true);
  std::size_t remaining = n;
  SiteSubset chosen;
  double spent = 0.0;
  double f_chosen = f(chosen);

  auto ratio = [](double gain, double price) {
    if (price > 0.0) return gain / price;
    if (gain > 0.0) return std::numeric_limits<double>::infinity();
    if (gain < 0.0) return -std::numeric_limits<double>::infinity();
    return 0.0;
  };

  while (remaining > 0) {
    std::size_t pick = n;
    double best_ratio = -std::numeric_limits<double>::infinity();
    double pick_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!pool[j]) continue;
      const double fj = f(chosen.with(j));
      const double r = ratio(fj - f_chosen, inst.prices[j]);
      if (pick == n || r > best_ratio) {
        pick = j;
        best_ratio = r;
        pick_value = fj;
      }
    }
    pool[pick] = false;
    --remaining;
    if (spent + inst.prices[pick] <= inst.budget) {
      chosen = chosen.with(pick);
      spent += inst.prices[pick];
      f_chosen = pick_value;
    }
  }

  if (singleton_fallback) {
    std::size_t best_single = n;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (inst.prices[i] > inst.budget) continue;
      const double v = f(SiteSubset{i});
      if (v > best_value) {
        best_value = v;
        best_single = i;
      }
    }
    if (best_single != n && best_value > f_chosen) {
      return SiteSubset{best_single};
    }
  }
  return chosen;
}

// Exhaustive optimum over budget-feasible subsets.
inline Maximum brute_force_budgeted_max(const BudgetedInstance& inst) {
  inst.validate();
  const auto& f = inst.oracle;
  const std::size_t n = f.ground_size();
  if (n > kMaxEnumeration) {
    throw std::invalid_argument(
        "brute_force_budgeted_max: ground set too large to enumerate");
  }
  Maximum best{SiteSubset{}, f(SiteSubset{})};
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    SiteSubset s = SiteSubset::from_mask(mask);
    if (total_price(inst, s) > inst.budget) continue;
    const double v = f(s);
    if (v > best.value || (v == best.value && detail::preferred(s, best.subset))) {
      best = {std::move(s), v};
    }
  }
  return best;
}

enum class InstanceFamily {
  coverage,  // weighted set cover: monotone, submodular, f(0) = 0
  cut,       // weighted graph cut: submodular, nonnegative, non-monotone
  facility_location,  // sum over clients of the best served weight: monotone
};

// Random test instance with n <= 14 elements.
template <class Engine>
SetFunctionOracle random_submodular_instance(std::size_t n, Engine& rng,
                                             InstanceFamily family) {
  if (n > 14) {
    throw std::invalid_argument("random_submodular_instance: n must be <= 14");
  }
  if (family == InstanceFamily::coverage) {
    const std::size_t items = 2 * n + 4;
    std::vector<double> weight(items);
    for (auto& w : weight) w = 0.1 + 0.9 * uniform01(rng);
    std::vector<std::uint64_t> covers(n, 0);
    for (std::size_t e = 0; e < n; ++e) {
      for (std::size_t t = 0; t < items; ++t) {
        if (uniform01(rng) < 0.3) covers[e] |= std::uint64_t{1} << t;
      }
    }
    return SetFunctionOracle(n, [weight, covers](const SiteSubset& s) {
      std::uint64_t covered = 0;
      for (std::size_t e : s) covered |= covers[e];
      double total = 0.0;
      for (std::size_t t = 0; t < weight.size(); ++t) {
        if (covered >> t & 1u) total += weight[t];
      }
      return total;
    });
  }
  if (family == InstanceFamily::facility_location) {
    const std::size_t clients = 2 * n + 2;
    std::vector<double> w(n * clients);
    for (auto& x : w) x = uniform01(rng);
    return SetFunctionOracle(n, [w, clients](const SiteSubset& s) {
      double total = 0.0;
      for (std::size_t c = 0; c < clients; ++c) {
        double best = 0.0;
        for (std::size_t e : s) best = std::max(best, w[e * clients + c]);
        total += best;
      }
      return total;
    });
  }
  struct Edge {
    std::size_t a;
    std::size_t b;
    double w;
  };
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (uniform01(rng) < 0.5) edges.push_back({a, b, uniform01(rng)});
    }
  }
  return SetFunctionOracle(n, [edges](const SiteSubset& s) {
    double total = 0.0;
    for (const auto& e : edges) {
      if (s.contains(e.a) != s.contains(e.b)) total += e.w;
    }
    return total;
  });
}

}  // namespace crowdsense

#endif  // CROWDSENSE_SUBMODULAR_HPP_
