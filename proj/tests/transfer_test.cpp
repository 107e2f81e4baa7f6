#include <cmath>

#include <gtest/gtest.h>

#include "acimlab/transfer.hpp"

using namespace acimlab;

namespace {

// c with c(1 + sqrt(2c)) = 1/2, from mpmath
constexpr double kC = 0.28492014549902663;

RandomMapSystem deterministic_t1() {
  return RandomMapSystem({presets::lsv_map(0.5, 2.0, -1.0), presets::lsv_map(0.25, 1.5, -0.75)},
                         ProbabilityField({ProbabilityComponent::constant(1.0),
                                           ProbabilityComponent::constant(0.0)}));
}

}  // namespace

TEST(BuildUlam, SingleCellIsIdentity) {
  const auto M = build_ulam(presets::example4(), 1);
  ASSERT_EQ(M.n(), 1u);
  EXPECT_NEAR(M.entry(0, 0), 1.0, 1e-15);
}

TEST(BuildUlam, TwoCellWorkedExample) {
  const auto M = build_ulam(presets::example4(), 2);
  EXPECT_NEAR(M.entry(0, 0), 0.554493654227990937, 1e-13);
  EXPECT_NEAR(M.entry(0, 1), 0.445506345772009063, 1e-13);
  EXPECT_NEAR(M.entry(1, 0), 0.6111111111111111, 1e-13);
  EXPECT_NEAR(M.entry(1, 1), 0.3888888888888889, 1e-13);
}

TEST(BuildUlam, TwoCellPureT1) {
  const auto M = build_ulam(presets::pure_t1(), 2);
  EXPECT_NEAR(M.entry(0, 0), 2 * kC, 1e-13);
  EXPECT_NEAR(M.entry(0, 1), 1 - 2 * kC, 1e-13);
  EXPECT_NEAR(M.entry(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(M.entry(1, 1), 0.5, 1e-15);
}

TEST(BuildUlam, RowsAreStochastic) {
  for (std::size_t n : {3, 17, 256, 2048}) {
    const auto M = build_ulam(presets::example4(0.7, 0.3), n);
    EXPECT_LE(M.max_row_sum_error(), 1e-12) << n;
    EXPECT_GE(M.min_entry(), 0.0);
  }
}

TEST(BuildUlam, ThreadCountDoesNotChangeEntries) {
  TransferConfig one, many;
  many.threads = 4;
  const auto a = build_ulam(presets::example4(), 300, one);
  const auto b = build_ulam(presets::example4(), 300, many);
  EXPECT_EQ(a.cols(), b.cols());
  EXPECT_EQ(a.vals(), b.vals());
}

TEST(BuildUlam, NonConvergentQuadratureNamesTheCell) {
  const auto p1 = ProbabilityComponent::callable(
      [](double x) { return 0.5 + 0.4 * std::sin(1.0 / (x + 1e-12)); }, "oscillating");
  const auto p2 = ProbabilityComponent::complement(std::span(&p1, 1));
  const RandomMapSystem sys({presets::lsv_map(0.5, 2.0, -1.0), presets::lsv_map(0.25, 1.5, -0.75)},
                            ProbabilityField({p1, p2}));
  try {
    build_ulam(sys, 4);
    FAIL() << "expected QuadratureError";
  } catch (const QuadratureError& e) {
    EXPECT_EQ(e.cell(), 0u);
  }
}

TEST(BuildUlam, RejectsZeroCells) { EXPECT_THROW(build_ulam(presets::example4(), 0), ConfigError); }

TEST(Stationary, TrivialMatrices) {
  const auto r1 = stationary_density(UlamMatrix::from_dense({{1.0}}));
  EXPECT_TRUE(r1.converged);
  EXPECT_EQ(r1.density[0], 1.0);
  const auto r2 = stationary_density(UlamMatrix::from_dense({{0.5, 0.5}, {0.5, 0.5}}));
  EXPECT_TRUE(r2.converged);
  EXPECT_EQ(r2.density[0], 1.0);
  EXPECT_EQ(r2.density[1], 1.0);
}

TEST(Stationary, FixedPointOfMatrix) {
  TransferConfig cfg;
  cfg.power_iteration_tol = 1e-13;
  const auto M = build_ulam(presets::example4(), 1024);
  const auto r = stationary_density(M, cfg);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.density.integral(), 1.0, 1e-12);
  EXPECT_LE(l1_distance(M.transport(r.density), r.density), 1e-12);
}

TEST(Stationary, ReportsNonConvergence) {
  // period-two chain never settles
  TransferConfig cfg;
  cfg.max_iterations = 50;
  const auto r = stationary_density(UlamMatrix::from_dense({{0.0, 1.0}, {1.0, 0.0}}), cfg,
                                    GridFunction(std::vector<double>{2.0, 0.0}));
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 50u);
}

TEST(Stationary, IndependentOfStart) {
  TransferConfig cfg;
  cfg.power_iteration_tol = 1e-13;
  const auto M = build_ulam(presets::example4(), 512);
  const auto a = stationary_density(M, cfg);
  CounterRng rng(3);
  for (int t = 0; t < 3; ++t) {
    const auto f0 = random_cone_element(512, {8.0, 0.5}, rng);
    const auto b = stationary_density(M, cfg, f0);
    ASSERT_TRUE(b.converged);
    EXPECT_LE(l1_distance(a.density, b.density), 1e-8);
  }
}

TEST(ApplyExact, WorkedExampleConstantDensity) {
  // mpmath: three preimage terms (two left, T1 right at 0.95)
  const GridFunction one(64, 1.0);
  EXPECT_NEAR(apply_exact(presets::example4(), one, 0.9), 0.594967989022119557, 1e-12);
}

TEST(ApplyExact, DeterministicAtOne) {
  EXPECT_NEAR(apply_exact(deterministic_t1(), GridFunction(16, 1.0), 1.0), 0.9, 1e-14);
}

TEST(ApplyExact, RightEndReadsLeftLimitOfProbabilities) {
  // mpmath: left preimages at 1/2 use p_k(1/2-), T2 has no right preimage of 1
  EXPECT_NEAR(apply_exact(presets::example4(), GridFunction(64, 1.0), 1.0), 0.585820640278717814, 1e-12);
}

TEST(ApplyExact, OriginOnlyCountsFixedPoint) {
  // both left branches fix 0 with derivative 1, so L f(0) = (p1(0) + p2(0)) f(0)
  const auto f = GridFunction::sample(32, [](double x) { return 2.0 - x; });
  EXPECT_NEAR(apply_exact(presets::example4(), f, 0.0), f[0], 1e-15);
}

TEST(ApplyExact, ZeroMapsToZero) {
  EXPECT_EQ(apply_exact(presets::example4(), GridFunction(32, 0.0), 0.3), 0.0);
}

TEST(ExactOperator, LinearAndPositive) {
  const auto sys = presets::example4();
  const auto op = ExactOperator::at_midpoints(sys, 128);
  CounterRng rng(8);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_nonincreasing_density(128, rng);
    const auto g = random_cone_element(128, {8.0, 0.5}, rng);
    const double a = rng.uniform(0.0, 3.0), b = rng.uniform(-2.0, 2.0);
    const auto lhs = op.apply(f.scaled(a) + g.scaled(b));
    const auto lf = op.apply(f), lg = op.apply(g);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      EXPECT_NEAR(lhs[i], a * lf[i] + b * lg[i], 1e-11 * (1 + std::abs(lhs[i])));
      EXPECT_GE(lf[i], 0.0);
    }
  }
}

TEST(ExactOperator, PreservesNonincreasing) {
  const auto sys = presets::example4();
  CounterRng rng(12);
  for (int t = 0; t < 20; ++t) {
    const auto f = random_cone_element(512, {8.0, 0.5}, rng);
    EXPECT_TRUE(cone_check(exact_image(sys, f), {1e300, 0.5}, 1e-9).nonincreasing);
  }
}

TEST(UlamMatrix, TransportPreservesMass) {
  const auto M = build_ulam(presets::example4(), 200);
  CounterRng rng(14);
  const auto f = random_nonincreasing_density(200, rng);
  EXPECT_NEAR(M.transport(f).integral(), 1.0, 1e-12);
}

TEST(UlamMatrix, IteratesCompose) {
  const auto M = build_ulam(presets::example4(), 64);
  CounterRng rng(15);
  const auto f = random_nonincreasing_density(64, rng);
  const auto twice = M.transport(M.transport(f));
  // (fM)M == f(M M) computed column by column
  GridFunction via(64);
  for (std::size_t j = 0; j < 64; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
      double mm = 0.0;
      for (std::size_t k = 0; k < 64; ++k) mm += M.entry(i, k) * M.entry(k, j);
      s += f[i] * mm;
    }
    via[j] = s;
  }
  EXPECT_LE(l1_distance(twice, via), 1e-13);
}

TEST(ConeInvariance, HoldsAtHypothesisConstant) {
  const auto rep = verify_cone_invariance(presets::example4(), {8.0, 0.5}, 200, 512, 1);
  EXPECT_TRUE(rep.within_hypothesis);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_EQ(rep.trials, 200u);
}

TEST(ConeInvariance, ConstantDensityImageStaysInCone) {
  const auto img = exact_image(presets::example4(), GridFunction(1024, 1.0));
  EXPECT_TRUE(cone_check(img, {8.0, 0.5}, kInvarianceSlack).pass());
}

TEST(ConeInvariance, UndersizedConstantIsFlagged) {
  const auto rep = verify_cone_invariance(presets::example4(), {1.0, 0.5}, 20, 256, 1);
  EXPECT_FALSE(rep.within_hypothesis);
  EXPECT_EQ(rep.trials, 20u);
}

TEST(LowerBound, PositiveForWorkedExample) {
  const auto rep = verify_lower_bound(presets::example4(), {8.0, 0.5}, 200, 512);
  EXPECT_TRUE(rep.positive());
  EXPECT_EQ(rep.per_start.size(), 5u);
}

TEST(LowerBound, PositiveForPureT1) {
  EXPECT_TRUE(verify_lower_bound(presets::pure_t1(), {8.0, 0.5}, 200, 512).positive());
}

TEST(LowerBound, StationaryStartKeepsItsMinimum) {
  TransferConfig cfg;
  cfg.power_iteration_tol = 1e-13;
  const auto M = build_ulam(presets::example4(), 256);
  const auto h = stationary_density(M, cfg).density;
  const auto rep = lower_bound_from(M, {h}, 50);
  const double hmin = *std::min_element(h.values().begin(), h.values().end());
  EXPECT_NEAR(rep.gamma, hmin, 1e-10);
}
