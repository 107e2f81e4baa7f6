#include <cmath>

#include <gtest/gtest.h>

#include "acimlab/skew.hpp"

using namespace acimlab;

TEST(SkewStep, OriginWithZeroFiberIsFixed) {
  const SkewState s{0.0, 0.0};
  EXPECT_EQ(skew_step(presets::example4(), s), s);
}

TEST(SkewStep, UpperFiberTakesSecondMap) {
  // p1(1/4) = 1/2, so w = 0.9 selects T2 and rescales to (0.9 - 0.5)/0.5
  const auto st = skew_step_with_branch(presets::example4(), {0.25, 0.9});
  EXPECT_EQ(st.branch, 1);
  EXPECT_NEAR(st.next.x, 0.46022410381342864, 1e-15);
  EXPECT_NEAR(st.next.w, 0.8, 1e-15);
}

TEST(SkewStep, LowerFiberTakesFirstMap) {
  const auto st = skew_step_with_branch(presets::example4(), {0.25, 0.2});
  EXPECT_EQ(st.branch, 0);
  EXPECT_NEAR(st.next.x, 0.42677669529663688, 1e-15);
  EXPECT_NEAR(st.next.w, 0.4, 1e-15);
}

TEST(SkewStep, FiberBoundaryBelongsToSecondBranch) {
  EXPECT_EQ(skew_step_with_branch(presets::example4(), {0.25, 0.5}).branch, 1);
}

TEST(SkewStep, RejectsDegenerateSecondBranch) {
  EXPECT_THROW(skew_step(presets::pure_t1(), {0.3, 1.0}), std::domain_error);
  EXPECT_THROW(skew_step(presets::example4(), {0.3, 1.1}), std::domain_error);
}

TEST(SkewOrbit, StaysInTheSquare) {
  const auto sys = presets::example4();
  SkewState s = random_fiber_start(0.37, 3);
  for (int t = 0; t < 1'000'000; ++t) {
    s = skew_step(sys, s);
    ASSERT_GE(s.w, 0.0);
    ASSERT_LE(s.w, 1.0);
    ASSERT_GE(s.x, 0.0);
    ASSERT_LE(s.x, 1.0);
  }
}

TEST(SkewOrbit, ProjectionFollowsFiredBranch) {
  const auto sys = presets::example4(0.6, 0.3);
  const auto o = skew_orbit(sys, random_fiber_start(0.71, 9), 5000);
  for (std::size_t t = 0; t < o.symbols.size(); ++t) {
    EXPECT_EQ(o.states[t + 1].x, sys.map(o.symbols[t])(o.states[t].x));
  }
}

TEST(Lyapunov, ZeroAtOrigin) {
  EXPECT_EQ(horizontal_lyapunov(presets::example4(), {0.0, 0.0}, 1000), 0.0);
}

TEST(Lyapunov, PositiveForGenericStart) {
  EXPECT_GT(horizontal_lyapunov(presets::example4(), random_fiber_start(0.3, 1), 200000), 0.1);
}

TEST(Lyapunov, DeterministicCaseMatchesDirectSum) {
  // p1 = 1 on the skew side (w < 1 always picks T1)
  const RandomMapSystem sys({presets::lsv_map(0.5, 2.0, -1.0), presets::lsv_map(0.25, 1.5, -0.75)},
                            ProbabilityField({ProbabilityComponent::constant(1.0),
                                              ProbabilityComponent::constant(0.0)}));
  const auto t1 = sys.map(0);
  double x = 0.3, s = 0.0;
  for (int t = 0; t < 10000; ++t) {
    s += std::log(derivative(t1, x));
    x = t1(x);
  }
  EXPECT_NEAR(horizontal_lyapunov(sys, {0.3, 0.5}, 10000), s / 10000, 1e-12);
}

TEST(Marginal, ConsistentWithUlamDensity) {
  const auto rep = marginal_consistency(presets::example4(), random_fiber_start(0.3, 4), 2'000'000, 128);
  EXPECT_LT(rep.distance, 0.03);
  EXPECT_NEAR(rep.empirical.integral(), 1.0, 1e-12);
}

TEST(Marginal, RequiresPositiveProbabilities) {
  EXPECT_THROW(marginal_consistency(presets::pure_t1(), {0.3, 0.5}, 1000, 64), ConfigError);
}

TEST(Histogram2d, HasUnitMass) {
  const auto d = skew_histogram_2d(presets::example4(), random_fiber_start(0.3, 2), 100000, 16, 1000);
  double s = 0.0;
  for (double v : d) s += v / 256.0;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(Skew, RequiresTwoMaps) {
  const RandomMapSystem sys({presets::lsv_map(0.5, 2.0, -1.0), presets::lsv_map(0.3, 2.0, -1.0),
                             presets::lsv_map(0.2, 2.0, -1.0)},
                            ProbabilityField({ProbabilityComponent::constant(0.2),
                                              ProbabilityComponent::constant(0.3),
                                              ProbabilityComponent::constant(0.5)}));
  EXPECT_THROW(skew_step(sys, {0.3, 0.5}), ConfigError);
}
