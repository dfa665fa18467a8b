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

#include "crowdsense/random.hpp"

#include <cmath>
#include <set>

#include <gtest/gtest.h>

namespace crowdsense {
namespace {

TEST(Random, DerivedSeedsAreDeterministicAndDistinct) {
  EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
  EXPECT_NE(derive_seed(7, 3), derive_seed(7, 4));
  EXPECT_NE(derive_seed(7, 3), derive_seed(8, 3));
  EXPECT_EQ(derive_seed(7, "costs"), derive_seed(7, "costs"));
  EXPECT_NE(derive_seed(7, "costs"), derive_seed(7, "mc"));
}

TEST(Random, CounterUniformIsInUnitIntervalAndRepeatable) {
  std::set<double> seen;
  for (std::uint64_t a = 0; a < 50; ++a) {
    for (std::uint64_t b = 0; b < 50; ++b) {
      const double u = counter_uniform(1, a, b);
      ASSERT_GE(u, 0.0);
      ASSERT_LT(u, 1.0);
      EXPECT_EQ(u, counter_uniform(1, a, b));
      seen.insert(u);
    }
  }
  EXPECT_EQ(seen.size(), 2500u);
}

TEST(Random, CounterUniformMomentsMatchUniform) {
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = counter_uniform(9, k, 0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12, 2e-3);
}

TEST(Random, Uniform01FromEngine) {
  Rng a = make_rng(5), b = make_rng(5);
  for (int k = 0; k < 100; ++k) {
    const double u = uniform01(a);
    EXPECT_EQ(u, uniform01(b));
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

}  // namespace
}  // namespace crowdsense
