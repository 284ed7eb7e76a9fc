#include "edgeform/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace edgeform {

bool SupervisionParams::is_landmark(int target) const {
  return target >= 0 && target < static_cast<int>(landmark_targets.size()) &&
         landmark_targets[static_cast<std::size_t>(target)];
}

std::vector<int> Assignment::sizes() const {
  std::vector<int> s(group_targets.size(), 0);
  for (int g : group_of)
    if (g >= 0 && g < num_groups()) ++s[static_cast<std::size_t>(g)];
  return s;
}

std::vector<int> Assignment::members(int group) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(group_of.size()); ++i)
    if (group_of[static_cast<std::size_t>(i)] == group) out.push_back(i);
  return out;
}

namespace {

Vec3 column3(const Points& p, int i) {
  Vec3 v = Vec3::Zero();
  for (int a = 0; a < std::min<int>(3, static_cast<int>(p.rows())); ++a) v[a] = p(a, i);
  return v;
}

Vec3 target_centroid(const SwarmState& state, const std::vector<int>& targets) {
  Vec3 c = Vec3::Zero();
  for (int t : targets) c += column3(state.targets, t);
  return targets.empty() ? c : Vec3(c / static_cast<double>(targets.size()));
}

Vec3 drone_centroid(const SwarmState& state, const std::vector<int>& drones) {
  Vec3 c = Vec3::Zero();
  for (int i : drones) c += column3(state.drones, i);
  return drones.empty() ? c : Vec3(c / static_cast<double>(drones.size()));
}

Points gather(const Points& p, const std::vector<int>& cols) {
  Points out(3, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = column3(p, cols[k]);
  return out;
}

Points centered(const Points& p) {
  Points out = p;
  if (p.cols() > 0) out.colwise() -= p.rowwise().mean();
  return out;
}

// Group centers used for membership decisions: the target centroid when the
// group follows targets, otherwise the centroid of its current members.
std::vector<Vec3> group_centers(const Assignment& a, const SwarmState& state) {
  std::vector<Vec3> centers;
  for (int g = 0; g < a.num_groups(); ++g) {
    const auto& targets = a.group_targets[static_cast<std::size_t>(g)];
    centers.push_back(targets.empty() ? drone_centroid(state, a.members(g))
                                      : target_centroid(state, targets));
  }
  return centers;
}

std::vector<int> quotas(const std::vector<int>& sizes, int total) {
  const int groups = static_cast<int>(sizes.size());
  std::vector<int> q(sizes.size(), total / groups);
  int extra = total % groups;
  std::vector<int> order(sizes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return sizes[static_cast<std::size_t>(x)] > sizes[static_cast<std::size_t>(y)];
  });
  for (int k = 0; k < extra; ++k) ++q[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
  return q;
}

// Rebalances toward explicit quotas; quotas must sum to the drone count.
Assignment rebalance_to(const Assignment& assignment, const SwarmState& state,
                        const std::vector<int>& quota) {
  Assignment out = assignment;
  const std::vector<Vec3> centers = group_centers(assignment, state);
  std::vector<int> sizes = out.sizes();
  const int groups = out.num_groups();
  for (;;) {
    int donor = -1;
    int worst_excess = 0;
    for (int g = 0; g < groups; ++g) {
      const int excess = sizes[static_cast<std::size_t>(g)] - quota[static_cast<std::size_t>(g)];
      if (excess > worst_excess) {
        worst_excess = excess;
        donor = g;
      }
    }
    if (donor < 0) break;
    int moving = -1;
    double farthest = -1.0;
    for (int i : out.members(donor)) {
      const double d = (column3(state.drones, i) - centers[static_cast<std::size_t>(donor)]).norm();
      if (d > farthest) {
        farthest = d;
        moving = i;
      }
    }
    int receiver = -1;
    double nearest = std::numeric_limits<double>::infinity();
    for (int g = 0; g < groups; ++g) {
      if (sizes[static_cast<std::size_t>(g)] >= quota[static_cast<std::size_t>(g)]) continue;
      const double d = (column3(state.drones, moving) - centers[static_cast<std::size_t>(g)]).norm();
      if (d < nearest) {
        nearest = d;
        receiver = g;
      }
    }
    if (receiver < 0) break;
    out.group_of[static_cast<std::size_t>(moving)] = receiver;
    --sizes[static_cast<std::size_t>(donor)];
    ++sizes[static_cast<std::size_t>(receiver)];
  }
  return out;
}

// Formation shape for group g: the group spec naming the same target, else the
// spec at the same position, else the intent-wide shape.
Shape group_shape(const Intent& intent, const Assignment& a, int g) {
  if (a.num_groups() == 1 && a.group_targets[0].size() > 1) return intent.formation;
  const auto& targets = a.group_targets[static_cast<std::size_t>(g)];
  if (targets.size() == 1) {
    for (const GroupSpec& spec : intent.groups)
      if (spec.target && *spec.target == targets[0] && spec.formation) return *spec.formation;
  }
  if (g < static_cast<int>(intent.groups.size())) {
    const GroupSpec& spec = intent.groups[static_cast<std::size_t>(g)];
    if (spec.formation && (!spec.target || targets.empty() ||
                           (targets.size() == 1 && *spec.target == targets[0])))
      return *spec.formation;
    if (spec.formation && !spec.target) return *spec.formation;
  }
  return intent.formation;
}

bool valid_for(const Assignment& a, int num_drones) {
  if (static_cast<int>(a.group_of.size()) != num_drones || a.num_groups() == 0) return false;
  for (int g : a.group_of)
    if (g < 0 || g >= a.num_groups()) return false;
  return true;
}

Assignment stationary_assignment(const Intent& intent, const SwarmState& state,
                                 const std::optional<Assignment>& given) {
  const int n = state.num_drones();
  const int groups = std::max<int>(1, static_cast<int>(intent.groups.size()));
  if (given && valid_for(*given, n) && given->num_groups() == groups) {
    Assignment a = *given;
    for (auto& t : a.group_targets) t.clear();
    return a;
  }
  Assignment a;
  a.group_targets.assign(static_cast<std::size_t>(groups), {});
  a.group_of.assign(static_cast<std::size_t>(n), 0);
  if (groups == 1) return a;
  std::vector<Vec3> anchors;
  for (const GroupSpec& g : intent.groups)
    anchors.push_back(g.anchor ? to_vec(*g.anchor) : drone_centroid(state, [&] {
      std::vector<int> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      return all;
    }()));
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < groups; ++g) {
      const double d = (column3(state.drones, i) - anchors[static_cast<std::size_t>(g)]).norm();
      if (d < best) {
        best = d;
        a.group_of[static_cast<std::size_t>(i)] = g;
      }
    }
  }
  std::vector<int> quota;
  int counted = 0;
  bool all_counted = true;
  for (const GroupSpec& g : intent.groups) {
    all_counted = all_counted && g.count.has_value();
    counted += g.count.value_or(0);
  }
  if (all_counted && counted == n) {
    for (const GroupSpec& g : intent.groups) quota.push_back(*g.count);
  } else {
    quota = quotas(a.sizes(), n);
  }
  // Anchors stand in for targets while balancing.
  Assignment probe = a;
  SwarmState anchored = state;
  anchored.targets.resize(3, groups);
  for (int g = 0; g < groups; ++g) {
    anchored.targets.col(g) = anchors[static_cast<std::size_t>(g)];
    probe.group_targets[static_cast<std::size_t>(g)] = {g};
  }
  probe = rebalance_to(probe, anchored, quota);
  a.group_of = probe.group_of;
  return a;
}

Assignment default_track_assignment(const Intent& intent, const SwarmState& state,
                                    const SupervisionParams& params) {
  const std::vector<int> targets = tracked_targets(intent, state, params);
  const int n = state.num_drones();
  Assignment a;
  if (targets.size() <= 1 || max_pairwise_separation(state, targets) <= params.split_threshold) {
    a.group_targets = {targets};
    a.group_of.assign(static_cast<std::size_t>(n), 0);
    return a;
  }
  a = nearest_target_partition(state, targets);
  if (intent.even_split) a = rebalance(a, state);
  return a;
}

}  // namespace

std::vector<int> tracked_targets(const Intent& intent, const SwarmState& state,
                                 const SupervisionParams& params) {
  std::vector<int> out;
  for (const GroupSpec& g : intent.groups)
    if (g.target && std::find(out.begin(), out.end(), *g.target) == out.end())
      out.push_back(*g.target);
  if (out.empty()) {
    for (int t = 0; t < state.num_targets(); ++t)
      if (!params.is_landmark(t)) out.push_back(t);
  }
  for (int t : out)
    if (t < 0 || t >= state.num_targets())
      throw InfeasibleIntent(fmt::format("intent references unknown target {}", t));
  return out;
}

double max_pairwise_separation(const SwarmState& state, const std::vector<int>& targets) {
  double best = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i)
    for (std::size_t j = i + 1; j < targets.size(); ++j)
      best = std::max(best,
                      (column3(state.targets, targets[i]) - column3(state.targets, targets[j])).norm());
  return best;
}

std::vector<int> match_slots(const Points& drone_positions, const Points& slots) {
  const int n = static_cast<int>(drone_positions.cols());
  if (slots.cols() != n) throw StructuralError("slot count does not match drone count");
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<int> slot_of(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int s = 0; s < n; ++s) {
      if (used[static_cast<std::size_t>(s)]) continue;
      const double d = (drone_positions.col(i) - slots.col(s)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = s;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    slot_of[static_cast<std::size_t>(i)] = best;
  }
  return slot_of;
}

Assignment nearest_target_partition(const SwarmState& state, const std::vector<int>& targets) {
  Assignment a;
  for (int t : targets) a.group_targets.push_back({t});
  a.group_of.assign(static_cast<std::size_t>(state.num_drones()), 0);
  for (int i = 0; i < state.num_drones(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int g = 0; g < static_cast<int>(targets.size()); ++g) {
      const double d =
          (column3(state.drones, i) - column3(state.targets, targets[static_cast<std::size_t>(g)])).norm();
      if (d < best) {
        best = d;
        a.group_of[static_cast<std::size_t>(i)] = g;
      }
    }
  }
  return a;
}

Assignment rebalance(const Assignment& assignment, const SwarmState& state) {
  if (assignment.num_groups() <= 1) return assignment;
  return rebalance_to(assignment, state,
                      quotas(assignment.sizes(), static_cast<int>(assignment.group_of.size())));
}

Grounding ground_intent(const Intent& intent, const SwarmState& state,
                        const SupervisionParams& params,
                        const std::optional<Assignment>& assignment) {
  const int n = state.num_drones();
  validate_intent(intent, n, state.num_targets());
  if (intent.mode == Mode::search) {
    Rng rng(0);
    SearchTick start = start_search(intent, state, params, rng);
    Grounding g;
    g.reference = *start.reference;
    g.assignment.group_targets = {{}};
    g.assignment.group_of.assign(static_cast<std::size_t>(n), 0);
    return g;
  }

  Grounding out;
  std::vector<Vec3> centers;
  double height = 0.0;
  if (intent.mode == Mode::track) {
    if (tracked_targets(intent, state, params).empty())
      throw InfeasibleIntent("track mode needs at least one visible target");
    out.assignment = assignment && valid_for(*assignment, n)
                         ? *assignment
                         : default_track_assignment(intent, state, params);
    for (const auto& targets : out.assignment.group_targets) {
      if (targets.empty()) throw InfeasibleIntent("track group without a target");
      centers.push_back(target_centroid(state, targets));
    }
    height = intent.height;
  } else {
    out.assignment = stationary_assignment(intent, state, assignment);
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int g = 0; g < out.assignment.num_groups(); ++g) {
      if (g < static_cast<int>(intent.groups.size()) && intent.groups[static_cast<std::size_t>(g)].anchor) {
        centers.push_back(to_vec(*intent.groups[static_cast<std::size_t>(g)].anchor));
      } else if (intent.groups.empty() && intent.anchor) {
        centers.push_back(to_vec(*intent.anchor));
      } else {
        const auto members = out.assignment.members(g);
        Vec3 c = drone_centroid(state, members.empty() ? all : members);
        c.z() = intent.height;
        centers.push_back(c);
      }
    }
  }

  out.reference = Points::Zero(3, n);
  for (int g = 0; g < out.assignment.num_groups(); ++g) {
    GroupPlan plan;
    plan.drones = out.assignment.members(g);
    plan.targets = out.assignment.group_targets[static_cast<std::size_t>(g)];
    plan.center = centers[static_cast<std::size_t>(g)];
    plan.shape = group_shape(intent, out.assignment, g);
    if (!plan.drones.empty()) {
      const int count = static_cast<int>(plan.drones.size());
      const FormationTemplate tmpl = formation_offsets(plan.shape, count, intent.spacing, 0.0);
      const Points rel = centered(gather(state.drones, plan.drones));
      const std::vector<int> slot = match_slots(rel, centered(tmpl.offsets));
      for (int k = 0; k < count; ++k) {
        Vec3 p = plan.center + tmpl.offsets.col(slot[static_cast<std::size_t>(k)]);
        p.z() += height;
        p.z() = std::clamp(p.z(), intent.altitude_band[0], intent.altitude_band[1]);
        out.reference.col(plan.drones[static_cast<std::size_t>(k)]) = p;
      }
    }
    out.groups.push_back(std::move(plan));
  }
  if (state.dim() != 3) out.reference.conservativeResize(state.dim(), n);
  return out;
}

SupervisorMemory remember(const Grounding& grounding, const SwarmState& state, int cooldown) {
  SupervisorMemory m;
  m.grounding = grounding;
  m.grounded_at = state.time;
  m.cooldown_remaining = cooldown;
  for (const GroupPlan& g : grounding.groups)
    m.group_anchor_positions.push_back(g.targets.empty() ? g.center
                                                         : target_centroid(state, g.targets));
  return m;
}

double shape_residual(const Points& drones, const FormationTemplate& tmpl) {
  if (drones.cols() != tmpl.offsets.cols())
    throw StructuralError("template size does not match group size");
  if (drones.cols() == 0) return 0.0;
  const Points rel = centered(drones);
  const Points slots = centered(tmpl.offsets);
  const std::vector<int> slot = match_slots(rel, slots);
  double sum = 0.0;
  for (int i = 0; i < rel.cols(); ++i)
    sum += (rel.col(i) - slots.col(slot[static_cast<std::size_t>(i)])).squaredNorm();
  return std::sqrt(sum / static_cast<double>(rel.cols()));
}

VerificationVerdict verify_and_correct(const Intent& intent, const SwarmState& state,
                                       const SupervisorMemory& memory,
                                       const SupervisionParams& params) {
  VerificationVerdict v;
  std::vector<std::string> reasons;
  const Grounding& g = memory.grounding;

  for (const GroupPlan& plan : g.groups) {
    if (plan.drones.empty()) continue;
    const FormationTemplate tmpl = formation_offsets(
        plan.shape, static_cast<int>(plan.drones.size()), intent.spacing, 0.0);
    v.shape_residual =
        std::max(v.shape_residual, shape_residual(gather(state.drones, plan.drones), tmpl));
  }
  if (v.shape_residual > params.residual_factor * intent.spacing)
    reasons.push_back(fmt::format("shape residual {:.3f} m exceeds {:.3f} m", v.shape_residual,
                                  params.residual_factor * intent.spacing));

  std::optional<Assignment> corrected;
  if (intent.even_split && g.assignment.num_groups() > 1) {
    const std::vector<int> sizes = g.assignment.sizes();
    const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
    if (*hi - *lo > 1) {
      corrected = rebalance(g.assignment, state);
      reasons.push_back(fmt::format("group sizes differ by {}", *hi - *lo));
    }
  }

  if (intent.mode == Mode::track &&
      state.time - memory.grounded_at >= params.check_interval - 1e-9) {
    for (std::size_t k = 0; k < g.groups.size() && k < memory.group_anchor_positions.size(); ++k) {
      if (g.groups[k].targets.empty()) continue;
      const double moved =
          (target_centroid(state, g.groups[k].targets) - memory.group_anchor_positions[k]).norm();
      if (moved > params.stale_distance) {
        reasons.push_back(fmt::format("group {} reference is stale (target moved {:.3f} m)", k, moved));
        break;
      }
    }
  }

  if (reasons.empty()) return v;
  v.consistent = false;
  v.reason = reasons.front();
  for (std::size_t k = 1; k < reasons.size(); ++k) v.reason += "; " + reasons[k];
  v.corrected_assignment = corrected ? *corrected : g.assignment;
  v.corrected_reference = ground_intent(intent, state, params, v.corrected_assignment).reference;
  return v;
}

Regrounding reground_tracking(const Intent& intent, const SwarmState& state,
                              const SupervisionParams& params,
                              const std::optional<Assignment>& previous, int cooldown_remaining) {
  Regrounding r;
  const std::vector<int> targets = tracked_targets(intent, state, params);
  const int n = state.num_drones();
  const bool have_previous = previous && valid_for(*previous, n);
  const bool split =
      targets.size() > 1 && max_pairwise_separation(state, targets) > params.split_threshold;

  std::vector<std::vector<int>> wanted;
  if (split) {
    for (int t : targets) wanted.push_back({t});
  } else {
    wanted.push_back(targets);
  }

  if (have_previous && (cooldown_remaining > 0 || previous->group_targets == wanted)) {
    r.assignment = *previous;
  } else if (split) {
    r.assignment = nearest_target_partition(state, targets);
    r.nearest_sizes = r.assignment.sizes();
    if (intent.even_split) r.assignment = rebalance(r.assignment, state);
    r.reassigned = true;
  } else {
    r.assignment.group_targets = wanted;
    r.assignment.group_of.assign(static_cast<std::size_t>(n), 0);
    r.nearest_sizes = r.assignment.sizes();
    r.reassigned = true;
  }
  r.split = r.assignment.num_groups() > 1;
  r.grounding = ground_intent(intent, state, params, r.assignment);
  return r;
}

// ---------------------------------------------------------------------------

Vec3 sample_in_box(const Box& box, Rng& rng) {
  Vec3 p;
  for (int a = 0; a < 3; ++a) p[a] = rng.uniform(box.min[static_cast<std::size_t>(a)], box.max[static_cast<std::size_t>(a)]);
  return p;
}

SearchTick start_search(const Intent& intent, const SwarmState& state,
                        const SupervisionParams& /*params*/, Rng& rng) {
  if (!intent.search_region || intent.search_region->empty())
    throw InfeasibleIntent("search mode needs a non-empty search region");
  SearchTick out;
  SearchStatus& s = out.status;
  const int n = state.num_drones();
  s.region = *intent.search_region;
  s.waypoints = Points::Zero(3, n);
  s.phase.assign(static_cast<std::size_t>(n), SearchPhase::enroute);
  s.cleared_this_round.assign(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    s.waypoints.col(i) = sample_in_box(s.region, rng);
    out.events.push_back({SearchEvent::waypoint, i, s.waypoints.col(i)});
  }
  out.reference = s.waypoints;
  return out;
}

std::optional<Detection> detect(const SwarmState& state, const SupervisionParams& params) {
  for (int i = 0; i < state.num_drones(); ++i)
    for (int t = 0; t < state.num_targets(); ++t) {
      if (params.is_landmark(t)) continue;
      if ((state.drones.col(i) - state.targets.col(t)).norm() <= params.observation_radius)
        return Detection{t, column3(state.targets, t), i, state.time};
    }
  return std::nullopt;
}

SearchTick search_tick(const SearchStatus& status, const Intent& intent, const SwarmState& state,
                       const SupervisionParams& params, Rng& rng) {
  SearchTick out;
  out.status = status;
  SearchStatus& s = out.status;
  const int n = state.num_drones();

  std::optional<Detection> found = s.detection;
  if (!found) found = detect(state, params);
  if (found) {
    s.detection = found;
    s.phase.assign(static_cast<std::size_t>(n), SearchPhase::enroute);
    s.phase[static_cast<std::size_t>(found->drone)] = SearchPhase::scanning;
    out.events.push_back({SearchEvent::detection, found->drone, found->position});
    Intent track = intent;
    track.mode = Mode::track;
    track.groups = {GroupSpec{found->target, std::nullopt, intent.formation, std::nullopt}};
    track.search_region.reset();
    track.even_split = false;
    out.reference = ground_intent(track, state, params).reference;
    out.switched_intent = std::move(track);
    return out;
  }

  bool moved = false;
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if ((state.drones.col(i) - s.waypoints.col(i).head(state.dim())).norm() <= params.arrival_radius) {
      ++s.cleared_waypoints;
      ++s.reassignments;
      s.cleared_this_round[k] = true;
      s.phase[k] = SearchPhase::cleared;
      out.events.push_back({SearchEvent::cleared, i, s.waypoints.col(i)});
      s.waypoints.col(i) = sample_in_box(s.region, rng);
      out.events.push_back({SearchEvent::waypoint, i, s.waypoints.col(i)});
      moved = true;
    } else {
      s.phase[k] = SearchPhase::enroute;
    }
  }

  if (n > 0 && std::all_of(s.cleared_this_round.begin(), s.cleared_this_round.end(),
                           [](bool c) { return c; })) {
    ++s.rounds_completed;
    s.cleared_this_round.assign(static_cast<std::size_t>(n), false);
    out.events.push_back({SearchEvent::round, -1, s.region.center()});
    if (params.expand_after_rounds > 0 && s.expansions < params.max_expansions &&
        s.rounds_completed % params.expand_after_rounds == 0) {
      const Vec3 c = s.region.center();
      for (int a = 0; a < 2; ++a) {
        const double half = (s.region.max[static_cast<std::size_t>(a)] - s.region.min[static_cast<std::size_t>(a)]) / 2.0 * params.expand_factor;
        s.region.min[static_cast<std::size_t>(a)] = c[a] - half;
        s.region.max[static_cast<std::size_t>(a)] = c[a] + half;
      }
      ++s.expansions;
      out.events.push_back({SearchEvent::expanded, -1, c});
    }
  }
  if (moved) out.reference = s.waypoints;
  return out;
}

}  // namespace edgeform
