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

#ifndef CROWDSENSE_EXPECTED_UTILITY_HPP_
#define CROWDSENSE_EXPECTED_UTILITY_HPP_

// Pricing rule, recruit probabilities and the expectation engine for
// expected utility (value minus payments) and expected value of a batch of
// posted-price offers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crowdsense/cost_models.hpp"
#include "crowdsense/random.hpp"
#include "crowdsense/site_subset.hpp"
#include "crowdsense/spatial_gp.hpp"
#include "crowdsense/submodular.hpp"
#include "crowdsense/valuation.hpp"

namespace crowdsense {

struct UserProfile {
  std::size_t id = 0;  // site index in the SiteField
  Location location;
  double noise_variance = 0.0;
  CostDistribution cost = CostDistribution::uniform(1.0, 1.0);
  double rho = 1.0;  // probability that an offer does not expire

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) {
      throw std::invalid_argument("UserProfile: rho must lie in [0, 1]");
    }
  }
};

inline void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma must lie in (0, 1]");
  }
}

// F^{-1}(min(gamma / rho, 1)).
inline double price_for_gamma(const UserProfile& user, double gamma) {
  check_gamma(gamma);
  const double q = user.rho > 0.0 ? std::min(gamma / user.rho, 1.0) : 1.0;
  return user.cost.inv_cdf(q);
}

// rho * F(price); paying above the support's upper end buys nothing extra.
inline double recruit_prob(const UserProfile& user, double price) {
  return user.rho * user.cost.cdf(std::min(price, user.cost.upper()));
}

struct Offer {
  std::size_t user = 0;
  double price = 0.0;
  double recruit_prob = 0.0;
};

struct OfferBatch {
  std::vector<Offer> offers;

  std::size_t size() const { return offers.size(); }
  bool empty() const { return offers.empty(); }

  SiteSubset users() const {
    std::vector<std::size_t> ids;
    ids.reserve(offers.size());
    for (const auto& o : offers) ids.push_back(o.user);
    return SiteSubset(std::move(ids));
  }

  double face_value() const {
    double total = 0.0;
    for (const auto& o : offers) total += o.price;
    return total;
  }
};

inline Offer make_offer(const UserProfile& user, double price) {
  const double p = std::min(price, user.cost.upper());
  return Offer{user.id, p, recruit_prob(user, p)};
}

// Offers to every listed user at the gamma-pricing rule.
inline OfferBatch price_batch(std::span<const UserProfile> users, double gamma) {
  OfferBatch batch;
  batch.offers.reserve(users.size());
  for (const auto& u : users) {
    batch.offers.push_back(make_offer(u, price_for_gamma(u, gamma)));
  }
  std::sort(batch.offers.begin(), batch.offers.end(),
            [](const Offer& a, const Offer& b) { return a.user < b.user; });
  return batch;
}

enum class ExpectationMode { automatic, exact, monte_carlo };

struct EstimatorConfig {
  ExpectationMode mode = ExpectationMode::automatic;
  std::size_t mc_iterations = 50;
  std::size_t exact_max_size = 12;  // automatic mode enumerates up to this size
  std::uint64_t stream = 0;         // MC substream key
};

struct Estimate {
  double mean = 0.0;
  double stddev = 0.0;  // per-sample standard deviation
  std::size_t samples = 0;
};

inline constexpr std::size_t kMaxExactOffers = 20;

namespace detail {

inline SiteSubset merge_ids(std::vector<std::size_t>& scratch,
                            const SiteSubset& base) {
  scratch.insert(scratch.end(), base.begin(), base.end());
  return SiteSubset(std::move(scratch));
}

// E[v(B_y u R) - v(R) - pay * p(B_y)] by enumerating outcome vectors. Offers
// with recruit probability 0 or 1 are not branched on.
inline double exact_expectation(const ValueFn& v, const OfferBatch& batch,
                                const SiteSubset& recruited, bool pay) {
  if (batch.size() > kMaxExactOffers) {
    throw std::invalid_argument("exact expectation: batch too large to enumerate");
  }
  if (batch.empty()) return 0.0;
  const double base = recruited.empty() ? 0.0 : v(recruited);
  std::vector<const Offer*> sure;
  std::vector<const Offer*> uncertain;
  for (const auto& o : batch.offers) {
    if (o.recruit_prob >= 1.0) sure.push_back(&o);
    else if (o.recruit_prob > 0.0) uncertain.push_back(&o);
  }
  const std::size_t k = uncertain.size();
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    double prob = 1.0;
    double payment = 0.0;
    std::vector<std::size_t> ids;
    ids.reserve(sure.size() + k + recruited.size());
    for (const Offer* o : sure) {
      ids.push_back(o->user);
      payment += o->price;
    }
    for (std::size_t b = 0; b < k; ++b) {
      const Offer* o = uncertain[b];
      if (mask >> b & 1u) {
        prob *= o->recruit_prob;
        ids.push_back(o->user);
        payment += o->price;
      } else {
        prob *= 1.0 - o->recruit_prob;
      }
    }
    const double gain = v(merge_ids(ids, recruited)) - base;
    total += prob * (pay ? gain - payment : gain);
  }
  return total;
}

// Sample average over outcome vectors. Offer for user i in iteration t is
// recruited iff counter_uniform(stream, t, i) < gamma_i, so two batches
// sharing a stream see identical draws for the users they share.
inline Estimate mc_expectation(const ValueFn& v, const OfferBatch& batch,
                               const SiteSubset& recruited, bool pay,
                               std::size_t iterations, std::uint64_t stream) {
  if (iterations == 0) {
    throw std::invalid_argument("Monte-Carlo estimate needs at least one iteration");
  }
  Estimate est;
  est.samples = iterations;
  if (batch.empty()) return est;
  const double base = recruited.empty() ? 0.0 : v(recruited);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t t = 0; t < iterations; ++t) {
    std::vector<std::size_t> ids;
    ids.reserve(batch.size() + recruited.size());
    double payment = 0.0;
    for (const auto& o : batch.offers) {
      if (counter_uniform(stream, t, o.user) < o.recruit_prob) {
        ids.push_back(o.user);
        payment += o.price;
      }
    }
    const double gain = v(merge_ids(ids, recruited)) - base;
    const double x = pay ? gain - payment : gain;
    const double delta = x - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (x - mean);
  }
  est.mean = mean;
  est.stddev = iterations > 1 ? std::sqrt(m2 / static_cast<double>(iterations - 1)) : 0.0;
  return est;
}

inline void check_disjoint(const OfferBatch& batch, const SiteSubset& recruited) {
  for (const auto& o : batch.offers) {
    if (recruited.contains(o.user)) {
      throw std::invalid_argument("offer batch overlaps the recruited set");
    }
  }
}

inline bool use_exact(const OfferBatch& batch, const EstimatorConfig& cfg) {
  switch (cfg.mode) {
    case ExpectationMode::exact: return true;
    case ExpectationMode::monte_carlo: return false;
    case ExpectationMode::automatic: break;
  }
  return batch.size() <= std::min(cfg.exact_max_size, kMaxExactOffers);
}

}  // namespace detail

inline double exact_eu(const ValueFn& v, const OfferBatch& batch,
                       const SiteSubset& recruited = {}) {
  detail::check_disjoint(batch, recruited);
  return detail::exact_expectation(v, batch, recruited, true);
}

inline Estimate mc_eu(const ValueFn& v, const OfferBatch& batch,
                      std::size_t iterations, std::uint64_t stream,
                      const SiteSubset& recruited = {}) {
  detail::check_disjoint(batch, recruited);
  return detail::mc_expectation(v, batch, recruited, true, iterations, stream);
}

inline double exact_ev(const ValueFn& v, const OfferBatch& batch,
                       const SiteSubset& recruited = {}) {
  detail::check_disjoint(batch, recruited);
  return detail::exact_expectation(v, batch, recruited, false);
}

inline Estimate mc_ev(const ValueFn& v, const OfferBatch& batch,
                      std::size_t iterations, std::uint64_t stream,
                      const SiteSubset& recruited = {}) {
  detail::check_disjoint(batch, recruited);
  return detail::mc_expectation(v, batch, recruited, false, iterations, stream);
}

// Marginal EU of `batch` given the already-recruited users, exact or MC per
// the estimator configuration. With recruited = {} this is plain EU.
inline double conditional_marginal_eu(const ValueFn& v, const OfferBatch& batch,
                                      const SiteSubset& recruited,
                                      const EstimatorConfig& cfg = {}) {
  detail::check_disjoint(batch, recruited);
  if (detail::use_exact(batch, cfg)) {
    return detail::exact_expectation(v, batch, recruited, true);
  }
  return detail::mc_expectation(v, batch, recruited, true, cfg.mc_iterations,
                                cfg.stream).mean;
}

inline double conditional_marginal_ev(const ValueFn& v, const OfferBatch& batch,
                                      const SiteSubset& recruited,
                                      const EstimatorConfig& cfg = {}) {
  detail::check_disjoint(batch, recruited);
  if (detail::use_exact(batch, cfg)) {
    return detail::exact_expectation(v, batch, recruited, false);
  }
  return detail::mc_expectation(v, batch, recruited, false, cfg.mc_iterations,
                                cfg.stream).mean;
}

// A -> EU_gamma(A | recruited) + p0 over a ground set of candidate users,
// where p0 = sum over the ground set of gamma_i * p_gamma({i}). Subsets are
// given in local ground-set positions.
class ShiftedEu {
 public:
  ShiftedEu(ValueFn v, std::span<const UserProfile> ground, double gamma,
            SiteSubset recruited = {}, EstimatorConfig cfg = {})
      : v_(std::move(v)),
        priced_(price_batch(ground, gamma)),
        recruited_(std::move(recruited)),
        cfg_(cfg),
        gamma_(gamma) {
    // price_batch sorts by user id; keep ground order aligned with it.
    for (const auto& o : priced_.offers) p0_ += o.recruit_prob * o.price;
  }

  double gamma() const { return gamma_; }
  double p0() const { return p0_; }
  std::size_t ground_size() const { return priced_.size(); }
  const OfferBatch& priced() const { return priced_; }

  OfferBatch batch_for(const SiteSubset& local) const {
    OfferBatch b;
    b.offers.reserve(local.size());
    for (std::size_t k : local) b.offers.push_back(priced_.offers.at(k));
    return b;
  }

  double eu(const SiteSubset& local) const {
    return conditional_marginal_eu(v_, batch_for(local), recruited_, cfg_);
  }

  double operator()(const SiteSubset& local) const { return eu(local) + p0_; }

  SetFunctionOracle oracle() const {
    return SetFunctionOracle(ground_size(),
                             [self = *this](const SiteSubset& s) { return self(s); });
  }

 private:
  ValueFn v_;
  OfferBatch priced_;
  SiteSubset recruited_;
  EstimatorConfig cfg_;
  double gamma_;
  double p0_ = 0.0;
};

inline ShiftedEu shifted_eu(ValueFn v, std::span<const UserProfile> ground,
                            double gamma, SiteSubset recruited = {},
                            EstimatorConfig cfg = {}) {
  return ShiftedEu(std::move(v), ground, gamma, std::move(recruited), cfg);
}

struct PriceChoice {
  double price = 0.0;
  double gain = 0.0;  // (marginal_v - price) * F(price)
};

// Maximizes (marginal_v - p) * F(p) over the cost support: a 256-point scan
// followed by golden-section refinement around the best scan point.
inline PriceChoice best_single_price(double marginal_v, const CostDistribution& dist) {
  if (!std::isfinite(marginal_v)) {
    throw std::invalid_argument("best_single_price: marginal value must be finite");
  }
  constexpr int kGrid = 256;
  const double lo = dist.lower();
  const double hi = dist.upper();
  const double step = (hi - lo) / (kGrid - 1);
  auto objective = [&](double p) { return (marginal_v - p) * dist.cdf(p); };

  int best_k = 0;
  double best = objective(lo);
  for (int k = 1; k < kGrid; ++k) {
    const double g = objective(lo + k * step);
    if (g > best) {
      best = g;
      best_k = k;
    }
  }
  PriceChoice choice{lo + best_k * step, best};

  double a = lo + std::max(best_k - 1, 0) * step;
  double b = lo + std::min(best_k + 1, kGrid - 1) * step;
  constexpr double kInvPhi = 0.6180339887498949;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > 1e-9) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  const double p = 0.5 * (a + b);
  const double g = objective(p);
  if (g > choice.gain) choice = {p, g};
  return choice;
}

}  // namespace crowdsense

#endif  // CROWDSENSE_EXPECTED_UTILITY_HPP_
