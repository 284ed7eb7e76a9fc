#include <gtest/gtest.h>

#include <cmath>

#include "edgeform/bounds.hpp"
#include "edgeform/harness.hpp"

using namespace edgeform;
using namespace edgeform::harness;

TEST(IssFixture, MeasuredErrorStaysUnderEnvelope) {
  IssFixtureParams p;
  p.duration = 6.0;
  const SlackCalibration cal = calibrate_slack(p);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const IssFixtureResult r = run_iss_fixture(seed, p);
    EXPECT_LE(r.max_excess, cal.constant * p.dt) << seed;
    EXPECT_DOUBLE_EQ(r.lambda, 1.0);
    EXPECT_LE(r.totals.max_range_residual, 1e-9);
  }
}

TEST(IssFixture, SlackHalvesWithStep) {
  IssFixtureParams p;
  p.duration = 6.0;
  const SlackCalibration cal = calibrate_slack(p);
  EXPECT_GT(cal.excess_dt, 0.0);
  EXPECT_GE(cal.ratio, 0.4);
  EXPECT_LE(cal.ratio, 0.6);
  EXPECT_NEAR(cal.constant, cal.excess_dt / p.dt, 1e-15);
}

TEST(PathFixture, RateIsGoldenRatioGap) {
  EXPECT_NEAR(path_lambda(), (3.0 - std::sqrt(5.0)) / 2.0, 1e-12);
  const Points ideal = path_ideal_drones();
  EXPECT_EQ(ideal.cols(), 2);
}

TEST(PathFixture, JumpIdentityWithoutGraphChange) {
  const FixtureSpec spec = path_fixture(1e-3, 0.5, 8, 0.05, 3);
  int k_seen = 0;
  const FixtureTotals t = simulate(
      spec,
      [&](const CheckView& v) {
        Points ref = path_ideal_drones();
        ref.array() += 0.1 * (v.k % 3);
        return ref;
      },
      [&](const CheckView&) { ++k_seen; }, [](const TickView&) {});
  EXPECT_EQ(k_seen, 9);
  EXPECT_EQ(t.graph_changes, 0);
  EXPECT_LE(t.max_jump_residual, 1e-12);
  EXPECT_LE(t.max_range_residual, 1e-9);
  EXPECT_EQ(t.ticks, 4000);
}

TEST(Corollary, ClampedLoopStaysInsideTolerance) {
  CorollaryParams p;
  p.intervals = 40;
  IssFixtureParams iss;
  iss.delta_t = p.delta_t;
  iss.d_bar = p.d_bar;
  iss.duration = 6.0;
  p.slack_constant = calibrate_slack(iss).constant;
  const CorollaryResult r = run_corollary_fixture(11, p);
  ASSERT_TRUE(r.eta.feasible);
  EXPECT_EQ(r.intervals, 40);
  EXPECT_EQ(r.violations, 0);
  EXPECT_LE(r.max_gap_end, p.delta_z + p.slack_constant * p.dt);
  EXPECT_LE(r.max_reference_gap, p.eps_z + 1e-12);
  EXPECT_LE(r.totals.max_range_residual, 1e-9);
}

TEST(Corollary, InfeasibleSettingIsReported) {
  CorollaryParams p;
  p.eps_z = p.delta_z;
  p.intervals = 3;
  const CorollaryResult r = run_corollary_fixture(1, p);
  EXPECT_FALSE(r.eta.feasible);
}

TEST(Certification, BoundDominatesMeasuredAverage) {
  const CertificationParams p;
  const double lambda = path_lambda();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CertificationRun run = run_certification_fixture(seed, p);
    EXPECT_LE(run.max_jump, p.jump_bound + 1e-12);
    EXPECT_LE(run.max_gap_correct, p.eps_correct + 1e-12);
    EXPECT_LE(run.max_gap_wrong, p.eps_wrong + 1e-12);
    const HorizonParams h = certification_horizon(p, run.eta0);
    EXPECT_NEAR(h.alpha, std::exp(-lambda * p.delta_t), 1e-12);
    const HorizonBound b = horizon_bound(h, path_w_bar(p.d_bar), p.delta_t);
    EXPECT_LE(run.measured_average, b.finite) << seed;
    EXPECT_LE(run.totals.max_range_residual, 1e-9);
  }
}

TEST(Certification, AsymptoticLimit) {
  const CertificationParams p;
  HorizonParams h = certification_horizon(p, 0.0);
  h.K = 100000000;
  const double w = path_w_bar(p.d_bar);
  const HorizonBound b = horizon_bound(h, w, p.delta_t);
  const double pi_w = p.markov_a / (p.markov_a + p.markov_b);
  const double expected = w / h.lambda_floor + p.jump_bound / (h.lambda_floor * p.delta_t) + p.eps_correct +
                          pi_w * (p.eps_wrong - p.eps_correct);
  EXPECT_NEAR(b.asymptotic, expected, 1e-12);
  EXPECT_NEAR(b.finite - b.transient_term, expected, 1e-7);
}

TEST(Certification, SameSeedSameRun) {
  CertificationParams p;
  p.checks = 5;
  const CertificationRun a = run_certification_fixture(9, p);
  const CertificationRun b = run_certification_fixture(9, p);
  EXPECT_EQ(a.measured_average, b.measured_average);
  EXPECT_EQ(a.wrong_checks, b.wrong_checks);
}
