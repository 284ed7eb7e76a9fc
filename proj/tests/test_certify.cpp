#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "edgeform/bounds.hpp"
#include "edgeform/certify.hpp"
#include "edgeform/scenario.hpp"

using namespace edgeform;

namespace {

ScenarioConfig hold_config(DisturbanceKind kind, double bound) {
  ScenarioConfig c;
  c.name = "hold";
  c.num_drones = 4;
  Points drones(3, 4);
  drones << 1, -1, 2, 0, 0, 1, -2, 1, 3, 4, 5, 6;
  c.initial_drones = drones;
  TargetSpec t;
  t.name = "base";
  t.start = Eigen::Vector3d(0, 0, 0);
  c.targets.push_back(t);
  c.observation_radius = 30.0;
  c.duration = 6.0;
  c.disturbance.kind = kind;
  c.disturbance.bound = bound;
  c.disturbance.seed = 5;
  Intent in;
  in.mode = Mode::track;
  in.groups.push_back(GroupSpec{0, std::nullopt, std::nullopt, std::nullopt});
  c.initial_intent = in;
  return c;
}

BoundReport certify(const ScenarioConfig& c, const RunResult& r) {
  return certify_run(parse_trajectory_csv(r.trajectory_csv), parse_supervision_csv(r.supervision_csv),
                     certify_params(c));
}

}  // namespace

TEST(Certify, DisturbanceFreeHoldDecays) {
  const ScenarioConfig c = hold_config(DisturbanceKind::none, 0.0);
  const RunResult r = run(c, std::make_shared<RuleBackend>());
  const BoundReport rep = certify(c, r);
  ASSERT_EQ(rep.intervals.size(), 6u);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.violations, 0);
  EXPECT_EQ(rep.jump_violations, 0);
  for (const IntervalReport& row : rep.intervals) {
    EXPECT_FALSE(row.flagged) << row.k;
    EXPECT_DOUBLE_EQ(row.w_bar, 0.0);
    EXPECT_GE(row.min_slack, -rep.slack_constant * rep.dt) << row.k;
    EXPECT_NEAR(row.lambda, row.lambda_logged, 1e-9);
  }
  EXPECT_LE(rep.max_log_mismatch, 1e-6);
}

TEST(Certify, BoundedDisturbanceStillPasses) {
  const ScenarioConfig c = hold_config(DisturbanceKind::bounded_noise, 0.2);
  const BoundReport rep = certify(c, run(c, std::make_shared<RuleBackend>()));
  EXPECT_TRUE(rep.pass);
  for (const IntervalReport& row : rep.intervals) EXPECT_GT(row.w_bar, 0.0);
}

TEST(Certify, GraphChangeFlagsInterval) {
  const ScenarioConfig c = builtin_scenario("chase-1");
  const RunResult r = run(c, std::make_shared<RuleBackend>());
  const BoundReport rep = certify(c, r);
  EXPECT_GE(rep.flagged, 1);
  EXPECT_GE(rep.certified, 1);
  EXPECT_EQ(rep.violations, 0);
  for (const IntervalReport& row : rep.intervals) {
    if (row.flagged) {
      EXPECT_EQ(row.status, "flagged");
    } else {
      EXPECT_EQ(row.status, "pass");
    }
  }
  double split_at = -1.0;
  for (const EventRecord& e : r.events.records())
    if (e.kind == "split") {
      split_at = e.t;
      break;
    }
  ASSERT_GE(split_at, 0.0);
  bool flagged_near_split = false;
  for (const IntervalReport& row : rep.intervals)
    if (row.flagged && std::abs(row.t_k - split_at) <= 1.0 + 1e-9) flagged_near_split = true;
  EXPECT_TRUE(flagged_near_split);
}

TEST(Certify, MisalignedLogsAreStructuralErrors) {
  const ScenarioConfig c = hold_config(DisturbanceKind::none, 0.0);
  const RunResult r = run(c, std::make_shared<RuleBackend>());
  auto traj = parse_trajectory_csv(r.trajectory_csv);
  auto sup = parse_supervision_csv(r.supervision_csv);
  const CertifyParams params = certify_params(c);

  auto missing_node = traj;
  missing_node.erase(missing_node.begin() + 2);
  EXPECT_THROW(certify_run(missing_node, sup, params), StructuralError);

  auto shifted = sup;
  shifted[2].t += 0.37;
  EXPECT_THROW(certify_run(traj, shifted, params), StructuralError);

  EXPECT_THROW(certify_run({}, sup, params), StructuralError);
}

TEST(Certify, CsvAndSummaryShape) {
  const ScenarioConfig c = hold_config(DisturbanceKind::none, 0.0);
  const BoundReport rep = certify(c, run(c, std::make_shared<RuleBackend>()));
  const std::string csv = rep.csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kBoundReportHeader);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), rep.intervals.size() + 1);
  const auto s = rep.summary();
  EXPECT_EQ(s.at("verdict").get<std::string>(), "PASS");
  EXPECT_EQ(s.at("certified").get<int>(), rep.certified);
}

TEST(Certify, HorizonSummaryDominatesWhenApplicable) {
  const ScenarioConfig c = hold_config(DisturbanceKind::bounded_noise, 0.1);
  const BoundReport rep = certify(c, run(c, std::make_shared<RuleBackend>()));
  ASSERT_TRUE(rep.horizon.applicable);
  EXPECT_LE(rep.horizon.measured_average, rep.horizon.finite_bound);
  EXPECT_NEAR(rep.horizon.margin, rep.horizon.finite_bound - rep.horizon.measured_average, 1e-12);
}
