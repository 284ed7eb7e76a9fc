#include "edgeform/intent.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

namespace edgeform {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::track: return "track";
    case Mode::search: return "search";
    default: return "stationary";
  }
}

bool Box::empty() const {
  for (int a = 0; a < 2; ++a)
    if (!(max[a] > min[a])) return true;
  return max[2] < min[2];
}

bool Box::contains(const Vec3& p) const {
  for (int a = 0; a < 3; ++a)
    if (p[a] < min[a] || p[a] > max[a]) return false;
  return true;
}

Vec3 Box::center() const { return (to_vec(min) + to_vec(max)) / 2.0; }

Box Box::scaled(double factor) const {
  const Vec3 c = center();
  const Vec3 half = (to_vec(max) - to_vec(min)) / 2.0 * factor;
  return {to_point(c - half), to_point(c + half)};
}

void validate_intent(const Intent& intent, int num_drones, int num_targets) {
  if (!(intent.spacing > 0.0)) throw InfeasibleIntent("spacing must be positive");
  if (intent.mode == Mode::track && num_targets < 1)
    throw InfeasibleIntent("track mode needs at least one visible target");
  if (intent.mode == Mode::search && (!intent.search_region || intent.search_region->empty()))
    throw InfeasibleIntent("search mode needs a non-empty search region");
  int counted = 0;
  for (const GroupSpec& g : intent.groups) {
    if (g.count) {
      if (*g.count < 1) throw InfeasibleIntent("group drone count must be positive");
      counted += *g.count;
    }
    if (intent.mode == Mode::track && g.target && (*g.target < 0 || *g.target >= num_targets))
      throw InfeasibleIntent(fmt::format("group references unknown target {}", *g.target));
  }
  if (counted > num_drones)
    throw InfeasibleIntent(
        fmt::format("groups request {} drones but only {} are available", counted, num_drones));
  if (intent.mode == Mode::track && static_cast<int>(intent.groups.size()) > num_drones)
    throw InfeasibleIntent("more groups than drones");
}

std::optional<int> target_index_from_name(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::size_t digits = lower.find_first_of("0123456789");
  static constexpr std::array<std::string_view, 6> stems{"car", "target", "vehicle", "suspect",
                                                         "person", "t"};
  if (digits == std::string::npos) {
    if (lower == "person" || lower == "target" || lower == "missing_person") return 0;
    return std::nullopt;
  }
  const std::string_view stem(lower.data(), digits);
  if (!stem.empty() && std::find(stems.begin(), stems.end(), stem) == stems.end())
    return std::nullopt;
  int value = 0;
  auto [ptr, ec] = std::from_chars(lower.data() + digits, lower.data() + lower.size(), value);
  if (ec != std::errc{} || ptr != lower.data() + lower.size()) return std::nullopt;
  // Names are one-based ("car1"); bare integers are already zero-based.
  return stem.empty() ? value : value - 1;
}

namespace {

json point_json(const Point3& p) { return json::array({p[0], p[1], p[2]}); }

[[noreturn]] void fail(const std::string& what) { throw ParseError(what); }

double number(const json& j, const char* key) {
  if (!j.is_number()) fail(fmt::format("'{}' must be a number", key));
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(fmt::format("'{}' must be finite", key));
  return v;
}

Point3 point(const json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) fail(fmt::format("'{}' must be a 3-element array", key));
  return {number(j[0], key), number(j[1], key), number(j[2], key)};
}

Shape shape(const json& j) {
  if (!j.is_string()) fail("'formation' must be a string");
  try {
    return parse_shape(j.get<std::string>());
  } catch (const UnsupportedShape& e) {
    fail(e.what());
  }
}

int target_ref(const json& j) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    if (auto idx = target_index_from_name(j.get<std::string>()); idx && *idx >= 0) return *idx;
    fail(fmt::format("unrecognized target name '{}'", j.get<std::string>()));
  }
  fail("'target' must be an integer or a name");
}

}  // namespace

json intent_to_json(const Intent& intent) {
  json j;
  j["mode"] = std::string(to_string(intent.mode));
  j["tracking"] = intent.tracking();
  json groups = json::array();
  for (const GroupSpec& g : intent.groups) {
    json gj = json::object();
    if (g.target) gj["target"] = *g.target;
    if (g.anchor) gj["anchor"] = point_json(*g.anchor);
    if (g.formation) gj["formation"] = std::string(to_string(*g.formation));
    if (g.count) gj["count"] = *g.count;
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  j["formation"] = std::string(to_string(intent.formation));
  j["even_split"] = intent.even_split;
  j["spacing"] = intent.spacing;
  j["height"] = intent.height;
  j["altitude"] = json::array({intent.altitude_band[0], intent.altitude_band[1]});
  if (intent.search_region)
    j["search_region"] = {{"min", point_json(intent.search_region->min)},
                          {"max", point_json(intent.search_region->max)}};
  if (intent.anchor) j["anchor"] = point_json(*intent.anchor);
  if (!intent.command.empty()) j["command"] = intent.command;
  return j;
}

Intent intent_from_json(const json& j) {
  if (!j.is_object()) fail("motion descriptor must be a JSON object");
  Intent intent;
  if (!j.contains("mode")) fail("missing required field 'mode'");
  const json& mode = j.at("mode");
  if (!mode.is_string()) fail("'mode' must be a string");
  const std::string m = mode.get<std::string>();
  if (m == "track") intent.mode = Mode::track;
  else if (m == "search") intent.mode = Mode::search;
  else if (m == "stationary") intent.mode = Mode::stationary;
  else fail(fmt::format("unknown mode '{}'", m));

  if (j.contains("tracking")) {
    if (!j["tracking"].is_boolean()) fail("'tracking' must be a boolean");
    if (j["tracking"].get<bool>() != intent.tracking())
      fail("'tracking' contradicts 'mode'");
  }
  if (j.contains("formation")) {
    intent.formation = shape(j["formation"]);
  } else if (intent.mode == Mode::search) {
    intent.formation = Shape::circle;
  }
  if (j.contains("even_split")) {
    if (!j["even_split"].is_boolean()) fail("'even_split' must be a boolean");
    intent.even_split = j["even_split"].get<bool>();
  }
  if (j.contains("spacing")) {
    intent.spacing = number(j["spacing"], "spacing");
    if (!(intent.spacing > 0.0)) fail("'spacing' must be positive");
  }
  if (j.contains("height")) intent.height = number(j["height"], "height");
  if (j.contains("altitude")) {
    const json& a = j["altitude"];
    if (!a.is_array() || a.size() != 2) fail("'altitude' must be [min, max]");
    intent.altitude_band = {number(a[0], "altitude"), number(a[1], "altitude")};
    if (intent.altitude_band[0] > intent.altitude_band[1]) fail("'altitude' band is inverted");
  }
  if (j.contains("search_region")) {
    const json& r = j["search_region"];
    if (!r.is_object() || !r.contains("min") || !r.contains("max"))
      fail("'search_region' needs 'min' and 'max'");
    intent.search_region = Box{point(r["min"], "search_region.min"),
                               point(r["max"], "search_region.max")};
  }
  if (j.contains("anchor")) intent.anchor = point(j["anchor"], "anchor");
  if (j.contains("command")) {
    if (!j["command"].is_string()) fail("'command' must be a string");
    intent.command = j["command"].get<std::string>();
  }
  if (j.contains("groups")) {
    const json& gs = j["groups"];
    if (!gs.is_array()) fail("'groups' must be an array");
    for (const json& g : gs) {
      GroupSpec spec;
      if (g.is_string() || g.is_number_integer()) {
        spec.target = target_ref(g);
      } else if (g.is_object()) {
        if (g.contains("target")) spec.target = target_ref(g["target"]);
        if (g.contains("anchor")) spec.anchor = point(g["anchor"], "anchor");
        if (g.contains("formation")) spec.formation = shape(g["formation"]);
        if (g.contains("count")) {
          if (!g["count"].is_number_integer()) fail("group 'count' must be an integer");
          spec.count = g["count"].get<int>();
          if (*spec.count < 1) fail("group 'count' must be positive");
        }
      } else {
        fail("each group must be an object, a target name or an index");
      }
      intent.groups.push_back(spec);
    }
  }
  return intent;
}

}  // namespace edgeform
