#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgeform/logs.hpp"

namespace edgeform {

struct PhaseResidual {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::string label;    ///< kind of the event that opened the phase
  double mean = 0.0;    ///< mean over samples of the RMS drone-to-reference distance
  double final = 0.0;   ///< value at the last sample of the phase
  int samples = 0;
};

struct MissionMetrics {
  std::optional<double> search_started;
  std::optional<double> time_to_detection;  ///< detection time minus search start
  int reassignments = 0;                    ///< waypoint reissues before detection
  int waypoints_issued = 0;
  int waypoints_cleared = 0;
  /// (t, cleared / issued) after every waypoint event.
  std::vector<std::pair<double, double>> cleared_fraction;
  std::optional<double> circle_radius_rms;  ///< final sample, circle groups only
  std::optional<double> spacing_cv;         ///< nearest-neighbor distances, final sample
  std::vector<PhaseResidual> phases;
};

/// Scans a finished run's trajectory CSV and event log.
MissionMetrics compute_metrics(const std::vector<TrajectoryRow>& trajectory, const EventLog& events,
                               int num_drones);

nlohmann::json metrics_to_json(const MissionMetrics& m);

/// Radius RMS error and spacing CV of one point set about its centroid;
/// radius is the mean centroid distance of `reference`.
double circle_radius_rms(const Points& drones, const Points& reference);
double spacing_cv(const Points& drones);

}  // namespace edgeform
