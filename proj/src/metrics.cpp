#include "edgeform/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace edgeform {

using nlohmann::json;

double circle_radius_rms(const Points& drones, const Points& reference) {
  if (drones.cols() == 0) return 0.0;
  const Eigen::VectorXd c = drones.rowwise().mean();
  const Eigen::VectorXd cr = reference.rowwise().mean();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < reference.cols(); ++i) radius += (reference.col(i) - cr).norm();
  radius /= static_cast<double>(reference.cols());
  double sq = 0.0;
  for (Eigen::Index i = 0; i < drones.cols(); ++i) {
    const double dev = (drones.col(i) - c).norm() - radius;
    sq += dev * dev;
  }
  return std::sqrt(sq / static_cast<double>(drones.cols()));
}

namespace {

std::vector<double> nearest_distances(const Points& p) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      if (j != i) best = std::min(best, (p.col(i) - p.col(j)).norm());
    if (std::isfinite(best)) out.push_back(best);
  }
  return out;
}

double cv_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size())) / mean;
}

struct Frame {
  double t = 0.0;
  Points drones;
  Points reference;
};

std::vector<Frame> drone_frames(const std::vector<TrajectoryRow>& rows, int num_drones) {
  std::vector<Frame> out;
  for (std::size_t i = 0; i < rows.size();) {
    const double t = rows[i].t;
    Frame f;
    f.t = t;
    f.drones = Points::Zero(3, num_drones);
    f.reference = Points::Zero(3, num_drones);
    for (; i < rows.size() && rows[i].t == t; ++i) {
      const TrajectoryRow& r = rows[i];
      if (!r.drone || r.node_id >= num_drones) continue;
      f.drones.col(r.node_id) = r.pos;
      f.reference.col(r.node_id) = r.ref;
    }
    out.push_back(std::move(f));
  }
  return out;
}

Points columns(const Points& p, const std::vector<int>& idx) {
  Points out(p.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = p.col(idx[j]);
  return out;
}

std::string group_shape(const json& intent, const json& group) {
  const std::string fallback = intent.value("formation", "grid");
  const json& targets = group.value("targets", json::array());
  if (targets.size() != 1) return fallback;
  for (const json& spec : intent.value("groups", json::array()))
    if (spec.contains("target") && spec["target"] == targets[0] && spec.contains("formation"))
      return spec["formation"].get<std::string>();
  return fallback;
}

}  // namespace

double spacing_cv(const Points& drones) { return cv_of(nearest_distances(drones)); }

MissionMetrics compute_metrics(const std::vector<TrajectoryRow>& trajectory, const EventLog& events,
                               int num_drones) {
  MissionMetrics m;
  json last_intent;
  json last_groups;
  std::vector<std::pair<double, std::string>> boundaries{{0.0, "start"}};
  bool detected = false;

  for (const EventRecord& ev : events.records()) {
    const json& p = ev.payload;
    if (ev.kind == "intent_changed") {
      last_intent = p.at("intent");
      if (p.contains("grounding") && p["grounding"].contains("groups")) last_groups = p["grounding"]["groups"];
      if (last_intent.value("mode", "") == "search" && !m.search_started) m.search_started = ev.t;
      boundaries.emplace_back(ev.t, ev.kind);
    } else if (ev.kind == "split" || ev.kind == "merge" || ev.kind == "rebalance") {
      if (p.contains("groups")) last_groups = p["groups"];
      boundaries.emplace_back(ev.t, ev.kind);
    } else if (ev.kind == "waypoint") {
      ++m.waypoints_issued;
      if (!p.value("initial", false) && !detected) ++m.reassignments;
      m.cleared_fraction.emplace_back(ev.t, static_cast<double>(m.waypoints_cleared) / m.waypoints_issued);
    } else if (ev.kind == "waypoint_cleared") {
      ++m.waypoints_cleared;
      m.cleared_fraction.emplace_back(
          ev.t, m.waypoints_issued ? static_cast<double>(m.waypoints_cleared) / m.waypoints_issued : 0.0);
    } else if (ev.kind == "detection" && !detected) {
      detected = true;
      const double at = p.value("detected_at", ev.t);
      m.time_to_detection = at - m.search_started.value_or(0.0);
    }
  }

  const std::vector<Frame> frames = drone_frames(trajectory, num_drones);
  if (frames.empty()) return m;

  // Phases close at the next boundary; samples at a boundary open the new phase.
  std::sort(boundaries.begin(), boundaries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<double, std::string>> merged;
  for (const auto& b : boundaries)
    if (merged.empty() || b.first > merged.back().first) merged.push_back(b);
    else merged.back().second = b.second;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    PhaseResidual ph;
    ph.t_begin = merged[i].first;
    ph.t_end = i + 1 < merged.size() ? merged[i + 1].first : frames.back().t;
    ph.label = merged[i].second;
    for (const Frame& f : frames) {
      const bool inside = f.t >= ph.t_begin && (i + 1 < merged.size() ? f.t < ph.t_end : true);
      if (!inside) continue;
      const double rms = num_drones > 0
                             ? std::sqrt((f.drones - f.reference).colwise().squaredNorm().mean())
                             : 0.0;
      ph.mean += rms;
      ph.final = rms;
      ++ph.samples;
    }
    if (ph.samples > 0) {
      ph.mean /= ph.samples;
      m.phases.push_back(std::move(ph));
    }
  }

  const Frame& last = frames.back();
  if (last_intent.is_object() && last_intent.value("mode", "") != "search") {
    std::vector<std::pair<std::vector<int>, std::string>> groups;
    if (last_groups.is_array() && !last_groups.empty()) {
      for (const json& g : last_groups)
        groups.emplace_back(g.at("drones").get<std::vector<int>>(), group_shape(last_intent, g));
    } else {
      std::vector<int> all(static_cast<std::size_t>(num_drones));
      for (int i = 0; i < num_drones; ++i) all[static_cast<std::size_t>(i)] = i;
      groups.emplace_back(all, last_intent.value("formation", "grid"));
    }
    double sq = 0.0;
    int n_circle = 0;
    std::vector<double> nn;
    for (const auto& [members, shape] : groups) {
      const Points drones = columns(last.drones, members);
      const std::vector<double> d = nearest_distances(drones);
      nn.insert(nn.end(), d.begin(), d.end());
      if (shape == "circle" && !members.empty()) {
        const double r = circle_radius_rms(drones, columns(last.reference, members));
        sq += r * r * static_cast<double>(members.size());
        n_circle += static_cast<int>(members.size());
      }
    }
    if (n_circle > 0) m.circle_radius_rms = std::sqrt(sq / n_circle);
    if (!nn.empty()) m.spacing_cv = cv_of(nn);
  }
  return m;
}

json metrics_to_json(const MissionMetrics& m) {
  json phases = json::array();
  for (const PhaseResidual& p : m.phases)
    phases.push_back({{"t_begin", p.t_begin}, {"t_end", p.t_end}, {"label", p.label},
                      {"mean_residual", p.mean}, {"final_residual", p.final}, {"samples", p.samples}});
  json cleared = json::array();
  for (const auto& [t, f] : m.cleared_fraction) cleared.push_back({t, f});
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"search_started", opt(m.search_started)},
              {"time_to_detection", opt(m.time_to_detection)},
              {"reassignments", m.reassignments},
              {"waypoints_issued", m.waypoints_issued},
              {"waypoints_cleared", m.waypoints_cleared},
              {"cleared_fraction", cleared},
              {"circle_radius_rms", opt(m.circle_radius_rms)},
              {"spacing_cv", opt(m.spacing_cv)},
              {"phases", phases}};
}

}  // namespace edgeform
