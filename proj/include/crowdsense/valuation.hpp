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

#ifndef CROWDSENSE_VALUATION_HPP_
#define CROWDSENSE_VALUATION_HPP_

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "crowdsense/site_subset.hpp"
#include "crowdsense/spatial_gp.hpp"

namespace crowdsense {

// v(A) = kappa * log(1 + MI(A) + alpha * |A|).
struct ValuationParams {
  double kappa = 1.0;  // money per log-unit of MI
  double alpha = 0.0;  // nats per user

  // kappa == 0 is accepted as a degenerate "worthless data" setting.
  void validate() const {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw std::invalid_argument("ValuationParams: kappa must be >= 0");
    }
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw std::invalid_argument("ValuationParams: alpha must be >= 0");
    }
  }
};

inline double value(const SiteField& field, const ValuationParams& params,
                    const SiteSubset& a) {
  if (a.empty()) return 0.0;
  const double mi = mutual_information(field, a);
  return params.kappa *
         std::log1p(mi + params.alpha * static_cast<double>(a.size()));
}

inline double marginal_value(const SiteField& field,
                             const ValuationParams& params, std::size_t i,
                             const SiteSubset& a) {
  if (a.contains(i)) {
    throw std::invalid_argument("marginal_value: user already in the set");
  }
  return value(field, params, a.with(i)) - value(field, params, a);
}

// Any set valuation over user ids. Mechanisms take one of these.
using ValueFn = std::function<double(const SiteSubset&)>;

class GpValuation {
 public:
  GpValuation(std::shared_ptr<const SiteField> field, ValuationParams params)
      : field_(std::move(field)), params_(params) {
    params_.validate();
  }

  double operator()(const SiteSubset& a) const {
    return value(*field_, params_, a);
  }

  const SiteField& field() const { return *field_; }
  const ValuationParams& params() const { return params_; }

 private:
  std::shared_ptr<const SiteField> field_;
  ValuationParams params_;
};

// Every non-empty set is worth v0. Not submodular-normalized beyond v(0) = 0.
class ConstantValuation {
 public:
  explicit ConstantValuation(double v0) : v0_(v0) {}
  double operator()(const SiteSubset& a) const { return a.empty() ? 0.0 : v0_; }

 private:
  double v0_;
};

// Explicit lookup table; used to inject published values.
class TableValuation {
 public:
  explicit TableValuation(std::map<SiteSubset, double> table)
      : table_(std::move(table)) {}

  double operator()(const SiteSubset& a) const {
    if (a.empty()) return 0.0;
    auto it = table_.find(a);
    if (it == table_.end()) {
      throw std::out_of_range("TableValuation: subset not in table");
    }
    return it->second;
  }

 private:
  std::map<SiteSubset, double> table_;
};

// Caches a deterministic valuation. Not thread-safe: one instance per worker.
class MemoizedValue {
 public:
  explicit MemoizedValue(ValueFn inner)
      : state_(std::make_shared<State>(std::move(inner))) {}

  double operator()(const SiteSubset& a) const {
    auto& cache = state_->cache;
    auto it = cache.find(a);
    if (it != cache.end()) return it->second;
    const double v = state_->inner(a);
    cache.emplace(a, v);
    return v;
  }

  std::size_t cached() const { return state_->cache.size(); }

 private:
  struct State {
    explicit State(ValueFn f) : inner(std::move(f)) {}
    ValueFn inner;
    std::unordered_map<SiteSubset, double, SiteSubsetHash> cache;
  };
  std::shared_ptr<State> state_;
};

}  // namespace crowdsense

#endif  // CROWDSENSE_VALUATION_HPP_
