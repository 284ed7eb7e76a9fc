#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgeform/common.hpp"
#include "edgeform/dynamics.hpp"
#include "edgeform/formation.hpp"
#include "edgeform/intent.hpp"
#include "edgeform/rng.hpp"

namespace edgeform {

struct SupervisionParams {
  double check_interval = 1.0;      ///< Delta_t, seconds
  double observation_radius = 15.0;
  double split_threshold = 20.0;    ///< max target separation for a single convoy group
  int cooldown_checks = 2;
  double arrival_radius = 1.0;
  double residual_factor = 0.5;     ///< shape residual threshold as a fraction of spacing
  double stale_distance = 1.0;      ///< target motion that makes a grounding stale
  int expand_after_rounds = 0;      ///< 0 disables search-region expansion
  double expand_factor = 2.0;
  int max_expansions = 1;
  /// Per-target flag for landmarks (e.g. a base vehicle) that are never tracked or sought.
  std::vector<bool> landmark_targets;

  bool is_landmark(int target) const;
};

/// Drone-to-group membership plus the targets each group is centered on.
struct Assignment {
  std::vector<int> group_of;                    ///< per drone
  std::vector<std::vector<int>> group_targets;  ///< per group; empty for world anchors

  int num_groups() const { return static_cast<int>(group_targets.size()); }
  std::vector<int> sizes() const;
  std::vector<int> members(int group) const;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct GroupPlan {
  std::vector<int> drones;   ///< ascending
  std::vector<int> targets;  ///< centroid anchors (track mode)
  Vec3 center = Vec3::Zero();
  Shape shape = Shape::grid;
};

/// World-frame reference produced from an intent.
struct Grounding {
  Points reference;  ///< 3 x N_a
  Assignment assignment;
  std::vector<GroupPlan> groups;
};

/// Targets the intent refers to (all non-landmark targets when unspecified).
std::vector<int> tracked_targets(const Intent& intent, const SwarmState& state,
                                 const SupervisionParams& params);

double max_pairwise_separation(const SwarmState& state, const std::vector<int>& targets);

/// Greedy nearest-slot matching in drone-index order. Returns slot per drone.
std::vector<int> match_slots(const Points& drone_positions, const Points& slots);

/// Nominal drone reference p_a^cmd. Track groups are centered on the mean of
/// their targets, stationary groups on their anchors. With no assignment a
/// default one is derived (see reground_tracking). Search intents are grounded
/// by start_search instead.
Grounding ground_intent(const Intent& intent, const SwarmState& state,
                        const SupervisionParams& params,
                        const std::optional<Assignment>& assignment = std::nullopt);

/// Moves farthest-from-target surplus drones into under-full groups until the
/// sizes differ by at most one.
Assignment rebalance(const Assignment& assignment, const SwarmState& state);

/// Partitions drones by nearest target among `targets` (one group per target).
Assignment nearest_target_partition(const SwarmState& state, const std::vector<int>& targets);

/// Supervisor-side memory carried between checks.
struct SupervisorMemory {
  Grounding grounding;
  double grounded_at = 0.0;
  std::vector<Vec3> group_anchor_positions;  ///< target centroid per group at grounding
  int cooldown_remaining = 0;
};

SupervisorMemory remember(const Grounding& grounding, const SwarmState& state, int cooldown);

struct VerificationVerdict {
  bool consistent = true;
  std::string reason;
  std::optional<Points> corrected_reference;
  std::optional<Assignment> corrected_assignment;
  double shape_residual = 0.0;  ///< worst per-group RMS residual
};

/// RMS distance between a group's drones and the template placed at their
/// centroid (translation-only fit, greedy slot matching).
double shape_residual(const Points& drones, const FormationTemplate& tmpl);

/// Deterministic verification: shape residual, group balance and staleness.
/// Pure in its inputs.
VerificationVerdict verify_and_correct(const Intent& intent, const SwarmState& state,
                                       const SupervisorMemory& memory,
                                       const SupervisionParams& params);

struct Regrounding {
  Assignment assignment;
  Grounding grounding;
  bool reassigned = false;
  bool split = false;               ///< more than one group after this call
  std::vector<int> nearest_sizes;   ///< sizes before rebalancing
};

/// Tracking re-grounding: convoy group while targets stay within the split
/// threshold, otherwise nearest-target groups (rebalanced when even_split).
/// Memberships are kept while the cooldown runs or the group structure is unchanged.
Regrounding reground_tracking(const Intent& intent, const SwarmState& state,
                              const SupervisionParams& params,
                              const std::optional<Assignment>& previous, int cooldown_remaining);

// ---------------------------------------------------------------------------
// Range-limited search

enum class SearchPhase { enroute, scanning, cleared };

struct Detection {
  int target = 0;  ///< target index (0-based among targets)
  Vec3 position = Vec3::Zero();
  int drone = 0;
  double time = 0.0;
};

struct SearchStatus {
  Points waypoints;  ///< 3 x N_a
  std::vector<SearchPhase> phase;
  std::optional<Detection> detection;
  int cleared_waypoints = 0;
  int reassignments = 0;
  Box region;
  int expansions = 0;
  int rounds_completed = 0;
  std::vector<bool> cleared_this_round;
};

struct SearchEvent {
  enum Kind { waypoint, cleared, detection, expanded, round } kind;
  int drone = -1;
  Vec3 position = Vec3::Zero();
};

struct SearchTick {
  SearchStatus status;
  std::optional<Points> reference;
  std::optional<Intent> switched_intent;  ///< set on detection (track + encirclement)
  std::vector<SearchEvent> events;
};

Vec3 sample_in_box(const Box& box, Rng& rng);

/// Initial waypoint per drone, sampled uniformly inside the region.
SearchTick start_search(const Intent& intent, const SwarmState& state,
                        const SupervisionParams& params, Rng& rng);

/// First (drone, target) pair within the observation radius, lowest drone first.
std::optional<Detection> detect(const SwarmState& state, const SupervisionParams& params);

/// One supervision step in search mode.
SearchTick search_tick(const SearchStatus& status, const Intent& intent, const SwarmState& state,
                       const SupervisionParams& params, Rng& rng);

}  // namespace edgeform
