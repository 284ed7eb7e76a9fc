#include <fmt/format.h>

#include "edgeform/scenario.hpp"

namespace edgeform {

namespace {

Eigen::VectorXd xyz(double x, double y, double z) { return Eigen::Vector3d(x, y, z); }

TargetLeg leg(double x, double y, double speed, double wait = 0.0) {
  return TargetLeg{xyz(x, y, 0.0), speed, wait};
}

ScenarioConfig chase_base(std::string name) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.seed = 42;
  c.num_drones = 24;
  c.dim = 3;
  c.scatter = DroneScatter{Vec3(4.0, 0.0, 0.0), 8.0, 3.0, 7.0};
  c.observation_radius = 15.0;
  c.check_interval = 1.0;
  c.dt = 1e-3;
  c.log_interval = 0.1;
  c.supervision.split_threshold = 20.0;
  c.supervision.cooldown_checks = 2;
  return c;
}

ScenarioConfig sar_base(std::string name) {
  ScenarioConfig c;
  c.name = std::move(name);
  c.seed = 7;
  c.num_drones = 8;
  c.dim = 3;
  c.scatter = DroneScatter{Vec3(0.0, 0.0, 0.0), 4.0, 8.0, 12.0};
  c.observation_radius = 15.0;
  c.check_interval = 1.0;
  c.dt = 1e-3;
  c.log_interval = 0.1;
  c.supervision.arrival_radius = 1.0;
  c.default_height = 5.0;
  // Rescue vehicle parked at the base keeps every drone anchored.
  c.targets.push_back(TargetSpec{"rescue", xyz(0.0, 0.0, 0.0), {}, true});
  return c;
}

// Grid convoy, split at the fork, balanced groups, then per-group shapes.
ScenarioConfig chase_1() {
  ScenarioConfig c = chase_base("chase-1");
  c.duration = 55.0;
  c.targets = {
      TargetSpec{"car1", xyz(0, -3, 0), {leg(24, -3, 2.0), leg(60, -40, 2.5)}, false},
      TargetSpec{"car2", xyz(4, 0, 0), {leg(28, 0, 2.0), leg(80, 0, 2.0)}, false},
      TargetSpec{"car3", xyz(8, 3, 0), {leg(32, 3, 2.0), leg(68, 40, 2.5)}, false},
  };
  c.commands = {
      {0.0, "Follow the group of cars in a grid formation and split the drones evenly", std::nullopt},
      {40.0, "one group forms a circle, one forms a square, and one forms a cross", std::nullopt},
  };
  return c;
}

// Circle dragnet over the three cars, then tracking is released.
ScenarioConfig chase_2() {
  ScenarioConfig c = chase_base("chase-2");
  c.duration = 40.0;
  c.targets = {
      TargetSpec{"car1", xyz(0, -3, 0), {leg(16, -3, 2.0), leg(40, -30, 2.0)}, false},
      TargetSpec{"car2", xyz(4, 0, 0), {leg(20, 0, 2.0), leg(56, 0, 2.0)}, false},
      TargetSpec{"car3", xyz(8, 3, 0), {leg(24, 3, 2.0), leg(48, 30, 2.0)}, false},
  };
  c.commands = {
      {0.0, "Form a circle like a coordinated police dragnet and track all three targets evenly",
       std::nullopt},
      {28.0, "Stop tracking all the targets.", std::nullopt},
  };
  return c;
}

// Fork, U-turn back to the junction, and a merged convoy afterwards.
ScenarioConfig chase_3() {
  ScenarioConfig c = chase_base("chase-3");
  c.duration = 60.0;
  c.targets = {
      TargetSpec{"car1", xyz(0, -3, 0),
                 {leg(16, -3, 2.0), leg(34, -22, 2.0), leg(16, -3, 2.0), leg(0, -3, 2.0)}, false},
      TargetSpec{"car2", xyz(4, 0, 0),
                 {leg(20, 0, 2.0), leg(44, 0, 2.0), leg(20, 0, 2.0), leg(4, 0, 2.0)}, false},
      TargetSpec{"car3", xyz(8, 3, 0),
                 {leg(24, 3, 2.0), leg(42, 22, 2.0), leg(24, 3, 2.0), leg(8, 3, 2.0)}, false},
  };
  c.commands = {
      {0.0, "Track the cars in a grid formation, evenly", std::nullopt},
  };
  return c;
}

Box region(double x0, double y0, double x1, double y1, double z) {
  return Box{{x0, y0, z}, {x1, y1, z}};
}

ScenarioConfig sar_1() {
  ScenarioConfig c = sar_base("sar-1");
  c.duration = 120.0;
  c.targets.push_back(TargetSpec{"person", xyz(38, 30, 0), {}, false});
  c.default_search_region = region(-10, -10, 50, 50, 10);
  c.commands = {{0.0, "Search the area for the missing person and encircle them when found", std::nullopt}};
  return c;
}

ScenarioConfig sar_2() {
  ScenarioConfig c = sar_base("sar-2");
  c.duration = 120.0;
  c.targets.push_back(TargetSpec{"person", xyz(-30, 35, 0), {}, false});
  c.default_search_region = region(-50, -10, 10, 50, 10);
  c.commands = {
      {0.0, "Search the region and hold a cube formation around the person once found", std::nullopt}};
  return c;
}

// The person lies outside the first region; repeated all-clear rounds widen it.
ScenarioConfig sar_3() {
  ScenarioConfig c = sar_base("sar-3");
  c.duration = 150.0;
  c.targets.push_back(TargetSpec{"person", xyz(40, -28, 0), {}, false});
  c.default_search_region = region(-15, -15, 15, 15, 10);
  c.supervision.expand_after_rounds = 3;
  c.supervision.expand_factor = 2.0;
  c.supervision.max_expansions = 2;
  c.commands = {{0.0, "Search the area and encircle the person when found", std::nullopt}};
  return c;
}

}  // namespace

std::vector<ScenarioConfig> builtin_scenarios() {
  return {chase_1(), chase_2(), chase_3(), sar_1(), sar_2(), sar_3()};
}

ScenarioConfig builtin_scenario(const std::string& name) {
  for (ScenarioConfig& c : builtin_scenarios())
    if (c.name == name) return c;
  throw ParameterError(fmt::format("unknown scenario '{}'", name));
}

}  // namespace edgeform
