#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "edgeform/scenario.hpp"
#include "scenario_checks.hpp"

using namespace edgeform;

namespace {

std::shared_ptr<SupervisorBackend> rule() { return std::make_shared<RuleBackend>(); }

ScenarioConfig small_config() {
  ScenarioConfig c;
  c.name = "small";
  c.seed = 3;
  c.num_drones = 6;
  c.scatter = DroneScatter{Vec3(0, 0, 0), 5.0, 4.0, 6.0};
  TargetSpec t;
  t.name = "car1";
  t.start = Eigen::Vector3d(0, 0, 0);
  t.legs.push_back(TargetLeg{Eigen::Vector3d(10, 0, 0), 1.0, 0.5});
  c.targets.push_back(t);
  c.observation_radius = 25.0;
  c.duration = 5.0;
  c.disturbance.kind = DisturbanceKind::bounded_noise;
  c.disturbance.bound = 0.1;
  c.disturbance.seed = 4;
  c.commands = {{0.0, "track car1 in a circle", std::nullopt}};
  return c;
}

}  // namespace

TEST(Scenario, BuiltinsExist) {
  const auto all = builtin_scenarios();
  std::map<std::string, ScenarioConfig> by_name;
  for (const auto& c : all) by_name[c.name] = c;
  for (const char* n : {"chase-1", "chase-2", "chase-3", "sar-1", "sar-2", "sar-3"}) ASSERT_TRUE(by_name.count(n)) << n;
  EXPECT_EQ(by_name["chase-1"].num_drones, 24);
  EXPECT_EQ(by_name["chase-1"].targets.size(), 3u);
  EXPECT_EQ(by_name["sar-1"].num_drones, 8);
  EXPECT_THROW(builtin_scenario("chase-9"), ParameterError);
}

TEST(Scenario, DeterministicPerSeed) {
  const ScenarioConfig c = small_config();
  const RunResult a = run(c, rule());
  const RunResult b = run(c, rule());
  EXPECT_EQ(a.trajectory_csv, b.trajectory_csv);
  EXPECT_EQ(a.supervision_csv, b.supervision_csv);
  EXPECT_EQ(a.events_jsonl, b.events_jsonl);
  ScenarioConfig other = c;
  other.seed = 4;
  EXPECT_NE(run(other, rule()).trajectory_csv, a.trajectory_csv);
}

TEST(Scenario, ReplayFromLoggedConfig) {
  const ScenarioConfig c = small_config();
  const ScenarioConfig back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
  EXPECT_EQ(run(back, rule()).trajectory_csv, run(c, rule()).trajectory_csv);
}

TEST(Scenario, ZeroDurationGivesEmptyLogs) {
  ScenarioConfig c = small_config();
  c.duration = 0.0;
  RunResult r;
  ASSERT_NO_THROW(r = run(c, rule()));
  EXPECT_EQ(r.trajectory_csv.substr(0, r.trajectory_csv.find('\n')), kTrajectoryHeader);
  EXPECT_TRUE(r.supervision_rows.empty());
}

TEST(Scenario, InvalidIntervalRejected) {
  ScenarioConfig c = small_config();
  c.check_interval = 0.0015;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Scenario, SupervisionOnlyAtCheckInstants) {
  const ScenarioConfig c = small_config();
  const RunResult r = run(c, rule());
  const auto v = checks::references_change_only_at_checks(c, r);
  EXPECT_TRUE(v.ok) << v.detail;
  EXPECT_EQ(r.supervision_rows.size(), 5u);
}

TEST(Scenario, EventsOrderedByTimeAndSeq) {
  const RunResult r = run(small_config(), rule());
  const auto& ev = r.events.records();
  for (std::size_t i = 1; i < ev.size(); ++i) {
    EXPECT_LE(ev[i - 1].t, ev[i].t);
    EXPECT_LT(ev[i - 1].seq, ev[i].seq);
  }
  EXPECT_EQ(EventLog::from_jsonl(r.events_jsonl).to_jsonl(), r.events_jsonl);
}

TEST(Scenario, CommandsApplyOnlyAtNextCheck) {
  ScenarioConfig c = small_config();
  c.commands.push_back({2.4, "track car1 in a square", std::nullopt});
  const RunResult r = run(c, rule());
  bool seen = false;
  for (const EventRecord& e : r.events.records())
    if (e.kind == "command_applied" && e.payload.at("command") == "track car1 in a square") {
      EXPECT_DOUBLE_EQ(e.t, 3.0);
      seen = true;
    }
  EXPECT_TRUE(seen);
}

TEST(Scenario, BackendFailureHoldsReference) {
  class Failing final : public SupervisorBackend {
   public:
    std::string name() const override { return "failing"; }
    GroundResult ground(const std::string& text, const GroundContext& ctx) override { return inner.ground(text, ctx); }
    FormationTemplate formation(Shape s, int n, double sp, double h) override { return inner.formation(s, n, sp, h); }
    VerificationVerdict check(const Intent&, const SwarmState&, const SupervisorMemory&,
                              const SupervisionParams&) override {
      throw BackendFailure("endpoint unreachable");
    }
    RuleBackend inner;
  };
  ScenarioConfig c = small_config();
  c.targets[0].legs.clear();
  c.disturbance.kind = DisturbanceKind::none;
  const RunResult r = run(c, std::make_shared<Failing>());
  int failures = 0;
  for (const EventRecord& e : r.events.records())
    if (e.kind == "backend_failure") ++failures;
  EXPECT_EQ(failures, 4);
  for (std::size_t k = 1; k < r.supervision_rows.size(); ++k) EXPECT_EQ(r.supervision_rows[k].jump_norm, 0.0);
}

TEST(Scenario, ChaseOneReproducesPhases) {
  const ScenarioConfig c = builtin_scenario("chase-1");
  const RunResult r = run(c, rule());
  const auto v = checks::chase_phases(c, r);
  EXPECT_TRUE(v.ok) << v.detail;
  const auto at = checks::references_change_only_at_checks(c, r);
  EXPECT_TRUE(at.ok) << at.detail;
}

TEST(Scenario, ChaseSplitsAreBalanced) {
  for (const char* name : {"chase-1", "chase-2", "chase-3"}) {
    const ScenarioConfig c = builtin_scenario(name);
    const RunResult r = run(c, rule());
    for (const EventRecord& e : r.events.records()) {
      if (e.kind != "split" && e.kind != "rebalance") continue;
      const auto sizes = e.payload.at("sizes").get<std::vector<int>>();
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      EXPECT_LE(*hi - *lo, 1) << name << " t=" << e.t;
    }
  }
}

TEST(Scenario, ChaseThreeMergesAfterUturn) {
  const RunResult r = run(builtin_scenario("chase-3"), rule());
  double split = -1.0, merge = -1.0;
  for (const EventRecord& e : r.events.records()) {
    if (e.kind == "split" && split < 0.0) split = e.t;
    if (e.kind == "merge" && split >= 0.0 && merge < 0.0) merge = e.t;
  }
  EXPECT_GE(split, 0.0);
  EXPECT_GT(merge, split);
}

TEST(Scenario, SarOneDetectsAndEncircles) {
  const ScenarioConfig c = builtin_scenario("sar-1");
  const RunResult r = run(c, rule());
  const auto v = checks::search_and_encircle(c, r);
  EXPECT_TRUE(v.ok) << v.detail;
}

TEST(Scenario, SarWaypointsStayInRegion) {
  for (const char* name : {"sar-2", "sar-3"}) {
    const ScenarioConfig c = builtin_scenario(name);
    const RunResult r = run(c, rule());
    bool detected = false, cube = false;
    for (const EventRecord& e : r.events.records()) {
      if (e.kind == "detection") detected = true;
      if (e.kind == "intent_changed" && e.payload.at("reason") == "detection")
        cube = e.payload.at("intent").at("formation") == "cube";
    }
    EXPECT_TRUE(detected) << name;
    const auto v = checks::waypoints_in_region(r);
    EXPECT_TRUE(v.ok) << name << ": " << v.detail;
    if (std::string(name) == "sar-2") {
      EXPECT_TRUE(cube);
    }
  }
}

TEST(Scenario, SarThreeExpandsRegion) {
  const RunResult r = run(builtin_scenario("sar-3"), rule());
  int expansions = 0;
  for (const EventRecord& e : r.events.records())
    if (e.kind == "region_expanded") ++expansions;
  EXPECT_GE(expansions, 1);
}
