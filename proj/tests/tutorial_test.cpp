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

#include "crowdsense/tutorial.hpp"

#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

namespace crowdsense::tutorial {
namespace {

TEST(Tutorial, AlgebraSuitePasses) {
  for (const Check& c : algebra_suite()) {
    EXPECT_TRUE(c.pass()) << c.name << ": computed " << c.computed << ", target " << c.target;
  }
}

TEST(Tutorial, RunsWellUnderOneSecond) {
  const auto t0 = std::chrono::steady_clock::now();
  const Report r = run();
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_TRUE(r.algebra_ok());
  EXPECT_LT(s, 1.0);
}

// Closed form for a common gamma: prices 1 + g and 0.5 + g, so
// EU = g(1-g)(1.18-g) + g(1-g)(1.73-g) + g^2 (2.32-2g) = 2.91 g - 2.59 g^2.
TEST(Tutorial, JointCurveMatchesHandExpansion) {
  const ValueFn v = gp_case2().valuation();
  const auto users = tutorial_users();
  for (double g : percent_grid()) {
    const double hand =
        g * (1 - g) * (1.18 - g) + g * (1 - g) * (1.73 - g) + g * g * (2.32 - 2 * g);
    EXPECT_NEAR(two_user_eu(v, users, g, g), hand, 1e-12);
    EXPECT_NEAR(hand, 2.91 * g - 2.59 * g * g, 1e-12);
  }
}

TEST(Tutorial, JointOptimumIsVertexOfParabola) {
  const double vertex = 2.91 / (2 * 2.59);
  EXPECT_NEAR(vertex, 0.5618, 1e-4);
  EXPECT_NEAR(2.91 * vertex - 2.59 * vertex * vertex, 0.8174, 1e-4);
}

TEST(Tutorial, PerUserOptimumBeatsCommonGamma) {
  const ValueFn v = gp_case2().valuation();
  const GridOptimum g = per_user_grid_optimum(v, tutorial_users());
  EXPECT_GT(g.eu, 2.91 * 0.56 - 2.59 * 0.56 * 0.56);
  EXPECT_NEAR(g.g1, 0.37, 0.01);
  EXPECT_NEAR(g.g2, 0.76, 0.01);
}

TEST(Tutorial, CaseTwoValuationsNearTable) {
  const ValuationParams p{kTutorialKappa, 0.0};
  const GpValuation v(case2_field(), p);
  EXPECT_NEAR(v(SiteSubset{0}), 2.18, 0.15);
  EXPECT_NEAR(v(SiteSubset{1}), 2.23, 0.15);
  EXPECT_NEAR(v(SiteSubset{0, 1}), 3.82, 0.15);
  EXPECT_GT(v(SiteSubset{1}), v(SiteSubset{0}));  // less noisy user is worth more
}

TEST(Tutorial, DiagnosticRowsReportResiduals) {
  const auto rows = valuation_diagnostic();
  EXPECT_EQ(rows.size(), 9u);
  for (const Check& c : rows) {
    EXPECT_TRUE(std::isfinite(c.residual()));
    EXPECT_EQ(c.tolerance, 0.15);
  }
}

TEST(Tutorial, CheckResidualSemantics) {
  const Check c{"x", 1.004, 1.0, 0.005};
  EXPECT_NEAR(c.residual(), 0.004, 1e-12);
  EXPECT_TRUE(c.pass());
  EXPECT_FALSE((Check{"y", 1.006, 1.0, 0.005}.pass()));
}

}  // namespace
}  // namespace crowdsense::tutorial
