#include "edgeform/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "edgeform/bounds.hpp"
#include "edgeform/dynamics.hpp"
#include "edgeform/scenario.hpp"

namespace edgeform {

using nlohmann::json;

CertifyParams certify_params(const ScenarioConfig& config) {
  CertifyParams p;
  p.nodes = config.nodes();
  p.observation_radius = config.observation_radius;
  p.dt = config.dt;
  p.check_interval = config.check_interval;
  p.d_bar = config.disturbance.bound;
  p.slack_constant = config.slack_constant;
  return p;
}

namespace {

struct Sample {
  double t = 0.0;
  SwarmState state;
  Points reference;
  double logged_e = 0.0;
};

std::vector<Sample> group_samples(const std::vector<TrajectoryRow>& rows, const NodeSet& nodes) {
  const int n = nodes.total();
  if (rows.size() % static_cast<std::size_t>(n) != 0)
    throw StructuralError("trajectory log row count is not a multiple of the node count");
  std::vector<Sample> out;
  for (std::size_t at = 0; at < rows.size(); at += static_cast<std::size_t>(n)) {
    Sample s;
    s.t = rows[at].t;
    s.state.time = s.t;
    s.state.drones = Points(nodes.dim, nodes.num_drones);
    s.state.targets = Points(nodes.dim, nodes.num_targets);
    s.reference = Points(nodes.dim, nodes.num_drones);
    double sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const TrajectoryRow& r = rows[at + static_cast<std::size_t>(i)];
      if (r.node_id != i || r.t != s.t || r.drone != nodes.is_drone(i))
        throw StructuralError(fmt::format("trajectory log misaligned at t={}", r.t));
      if (r.drone) {
        s.state.drones.col(i) = r.pos.head(nodes.dim);
        s.reference.col(i) = r.ref.head(nodes.dim);
      } else {
        s.state.targets.col(i - nodes.num_drones) = r.pos.head(nodes.dim);
      }
      sq += r.edge_err_norm * r.edge_err_norm;
    }
    // Every edge contributes to both endpoint norms.
    s.logged_e = std::sqrt(sq / 2.0);
    out.push_back(std::move(s));
  }
  return out;
}

std::string fmt_bool(bool b) { return b ? "1" : "0"; }

}  // namespace

BoundReport certify_run(const std::vector<TrajectoryRow>& trajectory,
                        const std::vector<SupervisionRow>& supervision, const CertifyParams& params) {
  params.nodes.validate();
  BoundReport report;
  report.dt = params.dt;
  report.slack_constant = params.slack_constant;
  const double tolerance = params.slack_constant * params.dt;
  const std::vector<Sample> samples = group_samples(trajectory, params.nodes);

  std::map<int, std::size_t> first_sample;  // interval -> first sample index
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const int k = static_cast<int>(std::floor(samples[i].t / params.check_interval + 1e-9));
    first_sample.try_emplace(k, i);
  }

  double integral = 0.0;
  double horizon_time = 0.0;
  double max_jump = 0.0;
  bool previous_clean = false;

  for (std::size_t r = 0; r < supervision.size(); ++r) {
    const SupervisionRow& row = supervision[r];
    const double t_k = row.k * params.check_interval;
    if (std::abs(row.t - t_k) > 1e-9 * std::max(1.0, t_k))
      throw StructuralError(fmt::format("supervision row {} is not at k * check_interval", row.k));
    auto it = first_sample.find(row.k);
    if (it == first_sample.end() || std::abs(samples[it->second].t - t_k) > 1e-9 * std::max(1.0, t_k))
      throw StructuralError(fmt::format("no trajectory sample at supervision instant t={}", t_k));

    IntervalReport rep;
    rep.k = row.k;
    rep.t_k = t_k;
    rep.tolerance = tolerance;
    rep.lambda_logged = row.lambda_min_plus;

    const Sample& at_k = samples[it->second];
    const InteractionGraph graph =
        build_graph(at_k.state.stacked(), params.nodes, params.observation_radius);
    DroneSpectrum spec;
    if (graph.edge_count() > 0) spec = drone_spectrum(graph);
    rep.lambda = spec.lambda_min_plus;
    rep.w_bar = std::sqrt(std::max(0.0, spec.lambda_max)) * params.d_bar;
    report.max_lambda_mismatch =
        std::max(report.max_lambda_mismatch, std::abs(rep.lambda - rep.lambda_logged));
    if (graph.edge_count() != row.edge_count)
      throw StructuralError(fmt::format("edge count at t={} differs from the supervision log", t_k));

    if (row.interval_edge_changes > 0) {
      rep.flagged = true;
      rep.flag_reason = fmt::format("edge set changed {} time(s)", row.interval_edge_changes);
    } else if (graph.edge_count() == 0) {
      rep.flagged = true;
      rep.flag_reason = "no edges";
    } else if (!(rep.lambda > 0.0)) {
      rep.flagged = true;
      rep.flag_reason = "no positive spectrum";
    }

    IntervalParams ip;
    ip.lambda = rep.lambda > 0.0 ? rep.lambda : 1.0;
    ip.w_bar = rep.w_bar;
    ip.delta_t = params.check_interval;
    rep.min_slack = std::numeric_limits<double>::infinity();

    const std::size_t end = std::next(it) != first_sample.end() ? std::next(it)->second : samples.size();
    for (std::size_t i = it->second; i < end; ++i) {
      const Sample& s = samples[i];
      const double e = edge_error_drone_rows(s.state, ReferenceSignal{s.reference, t_k, 0.0}, graph).norm();
      if (i == it->second) {
        rep.e0 = e;
        ip.e0_norm = e;
      }
      if (!rep.flagged) report.max_log_mismatch = std::max(report.max_log_mismatch, std::abs(e - s.logged_e));
      rep.max_e = std::max(rep.max_e, e);
      ++rep.samples;
      if (!rep.flagged) rep.min_slack = std::min(rep.min_slack, iss_envelope(ip, s.t - t_k) - e);
      const double next_t = i + 1 < samples.size() ? samples[i + 1].t : s.t;
      integral += e * (next_t - s.t);
      horizon_time += next_t - s.t;
    }
    rep.t_end = end < samples.size() ? samples[end].t : samples[end - 1].t;
    if (rep.min_slack == std::numeric_limits<double>::infinity()) rep.min_slack = 0.0;

    rep.jump_checked = r > 0 && previous_clean && !row.graph_changed && !row.reinitialized;
    if (rep.jump_checked) {
      rep.jump_slack = row.e_minus_norm + row.jump_norm - row.e_plus_norm;
      if (rep.jump_slack < -params.jump_tolerance) ++report.jump_violations;
      max_jump = std::max(max_jump, row.jump_norm);
    }
    previous_clean = !rep.flagged;

    if (rep.flagged) {
      rep.status = "flagged";
      ++report.flagged;
    } else if (rep.min_slack >= -tolerance) {
      rep.status = "pass";
      ++report.certified;
    } else {
      rep.status = "violation";
      ++report.violations;
    }
    report.intervals.push_back(std::move(rep));
  }

  HorizonSummary& h = report.horizon;
  h.K = static_cast<int>(report.intervals.size());
  h.applicable = h.K > 0 && report.flagged == 0;
  h.measured_average = horizon_time > 0.0 ? integral / horizon_time : 0.0;
  if (h.applicable) {
    h.lambda_floor = std::numeric_limits<double>::infinity();
    for (const IntervalReport& rep : report.intervals) {
      h.lambda_floor = std::min(h.lambda_floor, rep.lambda);
      h.w_bar = std::max(h.w_bar, rep.w_bar);
    }
    h.jump_bound = max_jump;
    h.eta0 = report.intervals.front().e0;
    HorizonParams hp;
    hp.lambda_floor = h.lambda_floor;
    hp.alpha = std::exp(-h.lambda_floor * params.check_interval);
    hp.jump_bound = h.jump_bound;
    hp.K = h.K;
    hp.eta0 = h.eta0;
    if (hp.alpha > 0.0 && hp.alpha < 1.0) {
      const HorizonBound b = horizon_bound(hp, h.w_bar, params.check_interval);
      h.finite_bound = b.finite;
      h.asymptotic_bound = b.asymptotic;
      h.margin = b.finite - h.measured_average;
    } else {
      h.applicable = false;
    }
  }
  report.pass = report.violations == 0 && report.jump_violations == 0 &&
                (!h.applicable || h.margin >= -tolerance);
  return report;
}

std::string BoundReport::csv() const {
  std::string out = std::string(kBoundReportHeader) + "\n";
  for (const IntervalReport& r : intervals) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.k, r.t_k, r.t_end,
                       r.lambda, r.lambda_logged, r.w_bar, r.e0, r.max_e, r.min_slack, r.tolerance,
                       r.samples, fmt_bool(r.flagged), r.flag_reason, fmt_bool(r.jump_checked),
                       r.jump_slack, r.status);
  }
  return out;
}

json BoundReport::summary() const {
  json flagged_k = json::array();
  for (const IntervalReport& r : intervals)
    if (r.flagged) flagged_k.push_back(r.k);
  return json{{"verdict", pass ? "PASS" : "FAIL"},
              {"intervals", intervals.size()},
              {"certified", certified},
              {"flagged", flagged},
              {"flagged_k", flagged_k},
              {"violations", violations},
              {"jump_violations", jump_violations},
              {"dt", dt},
              {"slack_constant", slack_constant},
              {"tolerance", slack_constant * dt},
              {"max_log_mismatch", max_log_mismatch},
              {"max_lambda_mismatch", max_lambda_mismatch},
              {"horizon",
               {{"applicable", horizon.applicable},
                {"K", horizon.K},
                {"lambda_floor", horizon.lambda_floor},
                {"jump_bound", horizon.jump_bound},
                {"w_bar", horizon.w_bar},
                {"eta0", horizon.eta0},
                {"measured_average", horizon.measured_average},
                {"finite_bound", horizon.finite_bound},
                {"asymptotic_bound", horizon.asymptotic_bound},
                {"margin", horizon.margin}}}};
}

BoundReport certify_directory(const std::filesystem::path& dir, std::optional<double> slack_constant) {
  json cfg;
  try {
    cfg = json::parse(read_file(dir / "config.json"));
  } catch (const json::exception& e) {
    throw StructuralError(fmt::format("cannot parse {}: {}", (dir / "config.json").string(), e.what()));
  }
  CertifyParams p = certify_params(config_from_json(cfg));
  if (slack_constant) p.slack_constant = *slack_constant;
  return certify_run(parse_trajectory_csv(read_file(dir / "trajectory.csv")),
                     parse_supervision_csv(read_file(dir / "supervision.csv")), p);
}

}  // namespace edgeform
