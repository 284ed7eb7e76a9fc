#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edgeform/common.hpp"
#include "edgeform/formation.hpp"

namespace edgeform {

enum class Mode { stationary, track, search };

std::string_view to_string(Mode mode);

using Point3 = std::array<double, 3>;

inline Vec3 to_vec(const Point3& p) { return {p[0], p[1], p[2]}; }
inline Point3 to_point(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

struct Box {
  Point3 min{0, 0, 0};
  Point3 max{0, 0, 0};

  bool empty() const;
  bool contains(const Vec3& p) const;
  Vec3 center() const;
  /// Box scaled about its center by `factor` on every axis.
  Box scaled(double factor) const;
  friend bool operator==(const Box&, const Box&) = default;
};

/// One sub-swarm: tied to a target (track) or a world anchor (stationary).
struct GroupSpec {
  std::optional<int> target;
  std::optional<Point3> anchor;
  std::optional<Shape> formation;
  std::optional<int> count;
  friend bool operator==(const GroupSpec&, const GroupSpec&) = default;
};

/// Stored command: what the supervisor keeps enforcing between user inputs.
struct Intent {
  Mode mode = Mode::stationary;
  std::vector<GroupSpec> groups;
  Shape formation = Shape::grid;
  double spacing = 2.0;
  bool even_split = false;
  double height = 5.0;
  std::array<double, 2> altitude_band{0.0, 120.0};
  std::optional<Box> search_region;
  std::optional<Point3> anchor;  ///< stationary anchor when no groups are given
  std::string command;

  bool tracking() const { return mode == Mode::track; }
  friend bool operator==(const Intent&, const Intent&) = default;
};

/// Checks the invariants against the current node counts; throws InfeasibleIntent.
void validate_intent(const Intent& intent, int num_drones, int num_targets);

/// Motion Descriptor JSON (mode, tracking, groups, formation, even_split,
/// spacing) plus the optional height / altitude / search_region / anchor keys.
nlohmann::json intent_to_json(const Intent& intent);
/// Strict conversion: unknown types or values raise ParseError. Missing fields
/// take the descriptor defaults.
Intent intent_from_json(const nlohmann::json& j);

/// Resolves target names such as "car2", "target3", "person" or an integer
/// index into a zero-based target index.
std::optional<int> target_index_from_name(std::string_view name);

}  // namespace edgeform
