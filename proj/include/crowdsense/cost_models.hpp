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

#ifndef CROWDSENSE_COST_MODELS_HPP_
#define CROWDSENSE_COST_MODELS_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>

#include "crowdsense/random.hpp"

namespace crowdsense {

enum class CostKind { uniform, truncated_normal };

inline std::string_view to_string(CostKind kind) {
  return kind == CostKind::uniform ? "uniform" : "truncated-normal";
}

inline CostKind parse_cost_kind(std::string_view s) {
  if (s == "uniform" || s == "UN") return CostKind::uniform;
  if (s == "truncated-normal" || s == "truncated_normal" || s == "TN") {
    return CostKind::truncated_normal;
  }
  throw std::invalid_argument("unknown cost kind '" + std::string(s) + "'");
}

inline double standard_normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

// A user's private sensing cost, supported on [lower, lower + width].
// The truncated-normal kind is N(lower, (width/3)^2) restricted to the support.
class CostDistribution {
 public:
  static CostDistribution uniform(double lower, double width) {
    return CostDistribution(CostKind::uniform, lower, width);
  }
  static CostDistribution truncated_normal(double lower, double width) {
    return CostDistribution(CostKind::truncated_normal, lower, width);
  }

  CostDistribution(CostKind kind, double lower, double width)
      : kind_(kind), lower_(lower), width_(width) {
    if (!(lower > 0.0) || !std::isfinite(lower)) {
      throw std::invalid_argument("CostDistribution: lower must be positive");
    }
    if (!(width > 0.0) || !std::isfinite(width)) {
      throw std::invalid_argument("CostDistribution: width must be positive");
    }
  }

  CostKind kind() const { return kind_; }
  double lower() const { return lower_; }
  double width() const { return width_; }
  double upper() const { return lower_ + width_; }

  double cdf(double c) const {
    if (c <= lower_) return 0.0;
    if (c >= upper()) return 1.0;
    if (kind_ == CostKind::uniform) return (c - lower_) / width_;
    const double sigma = width_ / 3.0;
    return (standard_normal_cdf((c - lower_) / sigma) - 0.5) / TruncatedMass();
  }

  double pdf(double c) const {
    if (c < lower_ || c > upper()) return 0.0;
    if (kind_ == CostKind::uniform) return 1.0 / width_;
    const double sigma = width_ / 3.0;
    const double z = (c - lower_) / sigma;
    return std::exp(-0.5 * z * z) / (std::sqrt(2.0 * std::numbers::pi) * sigma) /
           TruncatedMass();
  }

  // Unique c in the support with cdf(c) == gamma. The truncated-normal
  // branch bisects on cdf() down to machine resolution of the support.
  double inv_cdf(double gamma) const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
      throw std::invalid_argument("inv_cdf: probability outside [0, 1]");
    }
    if (gamma == 0.0) return lower_;
    if (gamma == 1.0) return upper();
    if (kind_ == CostKind::uniform) return lower_ + gamma * width_;
    double lo = lower_;
    double hi = upper();
    for (int iter = 0; iter < 200 && hi - lo > 0.0; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (cdf(mid) < gamma) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  // Inverse-CDF transform of a single uniform variate.
  template <class Engine>
  double sample(Engine& rng) const {
    return inv_cdf(uniform01(rng));
  }

  friend bool operator==(const CostDistribution&, const CostDistribution&) = default;

 private:
  static double TruncatedMass() {
    static const double mass = standard_normal_cdf(3.0) - 0.5;
    return mass;
  }

  CostKind kind_;
  double lower_;
  double width_;
};

}  // namespace crowdsense

#endif  // CROWDSENSE_COST_MODELS_HPP_
