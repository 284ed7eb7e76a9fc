#include "scenario_checks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

using namespace edgeform;
using nlohmann::json;

namespace checks {
namespace {

struct Sample {
  double t = 0.0;
  std::vector<Vec3> pos;
  std::vector<Vec3> ref;
};

std::vector<Sample> samples(const std::vector<TrajectoryRow>& rows) {
  std::vector<Sample> out;
  for (const TrajectoryRow& r : rows) {
    if (out.empty() || out.back().t != r.t) out.push_back(Sample{r.t, {}, {}});
    out.back().pos.push_back(r.pos);
    out.back().ref.push_back(r.ref);
  }
  return out;
}

Vec3 vec(const json& a) { return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()); }

bool inside(const json& box, const Vec3& p) {
  for (int a = 0; a < 3; ++a)
    if (p[a] < box.at("min").at(a).get<double>() - 1e-9 || p[a] > box.at("max").at(a).get<double>() + 1e-9)
      return false;
  return true;
}

double cv(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean) / static_cast<double>(v.size());
  return mean > 0.0 ? std::sqrt(var) / mean : 0.0;
}

// Planar shape of a group's reference points about its center.
std::string classify(const std::vector<Vec3>& pts, const Vec3& center) {
  std::vector<double> radius, chebyshev;
  bool on_axes = true;
  for (const Vec3& p : pts) {
    const double dx = p.x() - center.x(), dy = p.y() - center.y();
    radius.push_back(std::hypot(dx, dy));
    chebyshev.push_back(std::max(std::abs(dx), std::abs(dy)));
    if (std::abs(dx) > 1e-6 && std::abs(dy) > 1e-6) on_axes = false;
  }
  if (cv(radius) < 1e-6) return "circle";
  if (on_axes) return "cross";
  if (cv(chebyshev) < 1e-6) return "square";
  return "other";
}

}  // namespace

Verdict chase_phases(const ScenarioConfig& config, const RunResult& run) {
  const auto traj = samples(parse_trajectory_csv(run.trajectory_csv));
  const int na = config.num_drones;
  const auto& events = run.events.records();

  // One grid group over the whole fleet.
  const EventRecord* first = nullptr;
  for (const EventRecord& e : events)
    if (e.kind == "intent_changed") {
      first = &e;
      break;
    }
  if (!first) return {false, "no intent was applied"};
  if (first->payload.at("intent").at("formation") != "grid")
    return {false, "initial formation is not a grid"};
  if (first->payload.at("grounding").at("sizes") != json::array({na}))
    return {false, fmt::format("initial grouping {}", first->payload.at("grounding").at("sizes").dump())};

  // Split within one check of the first threshold crossing.
  double crossing = -1.0;
  for (const Sample& s : traj) {
    double sep = 0.0;
    for (std::size_t i = static_cast<std::size_t>(na); i < s.pos.size(); ++i)
      for (std::size_t j = i + 1; j < s.pos.size(); ++j) sep = std::max(sep, (s.pos[i] - s.pos[j]).norm());
    if (sep > config.supervision.split_threshold) {
      crossing = s.t;
      break;
    }
  }
  if (crossing < 0.0) return {false, "targets never separate beyond the split threshold"};
  const EventRecord* split = nullptr;
  for (const EventRecord& e : events)
    if (e.kind == "split") {
      split = &e;
      break;
    }
  if (!split) return {false, "no split event"};
  const double lag = split->t - crossing;
  if (lag < -config.log_interval - 1e-9 || lag > config.check_interval + 1e-9)
    return {false, fmt::format("split at {} but threshold crossed at {}", split->t, crossing)};
  if (split->payload.at("sizes").size() != 3) return {false, "split did not form three groups"};

  // Balanced 8/8/8 no later than one check after the split.
  bool balanced = false;
  for (const EventRecord& e : events) {
    if (e.t > split->t + config.check_interval + 1e-9) break;
    if (e.t + 1e-9 < split->t || !e.payload.contains("sizes")) continue;
    const auto sizes = e.payload.at("sizes").get<std::vector<int>>();
    if (sizes.size() == 3 && std::all_of(sizes.begin(), sizes.end(), [&](int n) { return n == na / 3; }))
      balanced = true;
  }
  if (!balanced) return {false, "groups were not rebalanced within one check"};

  // After the scripted command each group holds its own shape.
  const EventRecord* amend = nullptr;
  json groups;
  for (const EventRecord& e : events) {
    if (e.kind == "intent_changed" && e.payload.at("reason") == "command" && &e != first) amend = &e;
    if (e.payload.contains("groups")) groups = e.payload.at("groups");
    if (e.kind == "intent_changed" && e.payload.contains("grounding") && e.payload.at("grounding").contains("groups"))
      groups = e.payload.at("grounding").at("groups");
  }
  if (!amend) return {false, "per-group shape command never applied"};
  if (groups.size() != 3) return {false, "final assignment does not have three groups"};
  const Sample& last = traj.back();
  std::multiset<std::string> shapes;
  for (const json& g : groups) {
    const auto members = g.at("drones").get<std::vector<int>>();
    const auto targets = g.at("targets").get<std::vector<int>>();
    Vec3 center = Vec3::Zero();
    for (int t : targets) center += last.pos[static_cast<std::size_t>(na + t)] / static_cast<double>(targets.size());
    std::vector<Vec3> refs;
    for (int d : members) refs.push_back(last.ref[static_cast<std::size_t>(d)]);
    shapes.insert(classify(refs, center));
  }
  if (shapes != std::multiset<std::string>{"circle", "cross", "square"}) {
    std::string got;
    for (const auto& s : shapes) got += s + " ";
    return {false, "final shapes: " + got};
  }
  return {true, fmt::format("split at t={} (crossing {}), shapes circle/square/cross", split->t, crossing)};
}

Verdict waypoints_in_region(const RunResult& run) {
  json region;
  int waypoints = 0;
  for (const EventRecord& e : run.events.records()) {
    if (e.kind == "intent_changed" && e.payload.contains("grounding") && e.payload.at("grounding").contains("region"))
      region = e.payload.at("grounding").at("region");
    if (e.kind == "region_expanded") region = e.payload.at("region");
    if (e.kind == "waypoint") {
      const json& box = e.payload.contains("region") ? e.payload.at("region") : region;
      if (box.is_null()) return {false, "waypoint issued before a region was known"};
      if (!inside(box, vec(e.payload.at("position"))))
        return {false, fmt::format("waypoint at t={} outside the region", e.t)};
      ++waypoints;
    }
  }
  if (waypoints == 0) return {false, "no waypoints issued"};
  return {true, fmt::format("{} waypoints in region", waypoints)};
}

Verdict search_and_encircle(const ScenarioConfig& config, const RunResult& run) {
  const Verdict in_region = waypoints_in_region(run);
  if (!in_region.ok) return in_region;
  const auto traj = samples(parse_trajectory_csv(run.trajectory_csv));
  const int na = config.num_drones;
  double detected_at = -1.0;
  int target = -1;
  for (const EventRecord& e : run.events.records())
    if (e.kind == "detection" && detected_at < 0.0) {
      detected_at = e.t;
      target = e.payload.at("target").get<int>();
    }
  if (detected_at < 0.0) return {false, "target never detected"};
  int checked = 0;
  for (const Sample& s : traj) {
    if (s.t <= detected_at + 1e-9) continue;
    const Vec3 c = s.pos[static_cast<std::size_t>(na + target)];
    std::vector<double> r;
    for (int i = 0; i < na; ++i)
      r.push_back(std::hypot(s.ref[static_cast<std::size_t>(i)].x() - c.x(), s.ref[static_cast<std::size_t>(i)].y() - c.y()));
    if (cv(r) > 1e-6) return {false, fmt::format("reference at t={} is not a circle around the target", s.t)};
    ++checked;
  }
  if (checked == 0) return {false, "no samples after detection"};
  return {true, fmt::format("detection at t={}, {}, {} encircled samples", detected_at, in_region.detail,
                            checked)};
}

Verdict references_change_only_at_checks(const ScenarioConfig& config, const RunResult& run) {
  const auto traj = samples(parse_trajectory_csv(run.trajectory_csv));
  const double dk = config.check_interval;
  for (std::size_t s = 1; s < traj.size(); ++s) {
    bool changed = false;
    for (int i = 0; i < config.num_drones; ++i)
      if (traj[s].ref[static_cast<std::size_t>(i)] != traj[s - 1].ref[static_cast<std::size_t>(i)]) changed = true;
    if (!changed) continue;
    const double lo = traj[s - 1].t, hi = traj[s].t;
    const double k = std::ceil(lo / dk - 1e-9);
    if (k * dk > hi + 1e-9) return {false, fmt::format("reference changed between {} and {}", lo, hi)};
  }
  for (const SupervisionRow& r : run.supervision_rows)
    if (std::abs(r.t - r.k * dk) > 1e-9) return {false, fmt::format("supervision row k={} at t={}", r.k, r.t)};
  return {true, ""};
}

}  // namespace checks
