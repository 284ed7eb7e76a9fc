#include "edgeform/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "edgeform/rng.hpp"

namespace edgeform::harness {

FixtureTotals simulate(const FixtureSpec& spec, const ReferenceFn& reference_fn,
                       const CheckFn& on_check, const TickFn& on_tick) {
  spec.nodes.validate();
  if (!(spec.dt > 0.0) || !(spec.delta_t > 0.0) || spec.checks < 0)
    throw ParameterError("fixture needs dt > 0, delta_t > 0 and checks >= 0");
  const long spc = std::lround(spec.delta_t / spec.dt);
  if (spc < 1 || std::abs(static_cast<double>(spc) * spec.dt - spec.delta_t) > 1e-9 * spec.delta_t)
    throw ParameterError("delta_t must be an integer multiple of dt");
  const long total = spc * spec.checks;

  SwarmState state{0.0, spec.drones, spec.targets};
  ReferenceSignal reference{spec.drones, 0.0, 0.0};
  DisturbanceSampler sampler(spec.disturbance, spec.nodes.dim, spec.nodes.num_drones);
  const Points target_velocity = Points::Zero(spec.nodes.dim, spec.nodes.num_targets);
  JumpRecord last_jump;
  FixtureTotals totals;
  std::vector<Edge> previous;
  std::optional<RangeProjector> projector;
  std::vector<Edge> projector_edges;

  for (long n = 0; n <= total; ++n) {
    state.time = static_cast<double>(n) * spec.dt;
    const InteractionGraph graph = build_graph(state.stacked(), spec.nodes, spec.radius);
    if (n > 0 && graph.edges() != previous) ++totals.graph_changes;
    previous = graph.edges();

    if (n % spc == 0) {
      const int k = static_cast<int>(n / spc);
      const CheckView view{k, state.time, state, graph, reference};
      if (on_check) on_check(view);
      if (n == total) break;
      const Points next = reference_fn ? reference_fn(view) : reference.drones;
      auto [ref, jump] = apply_jump(reference, next, graph, graph, state);
      reference = std::move(ref);
      last_jump = std::move(jump);
      if (!last_jump.reinitialized)
        totals.max_jump_residual = std::max(totals.max_jump_residual, last_jump.identity_residual);
    }

    const Points e = edge_error_drone_rows(state, reference, graph);
    if (graph.edge_count() > 0) {
      if (!projector || projector_edges != graph.edges()) {
        projector.emplace(graph);
        projector_edges = graph.edges();
      }
      const double rel = projector->residual_norm(e) / std::max(1.0, e.norm());
      totals.max_range_residual = std::max(totals.max_range_residual, rel);
    }
    if (on_tick) {
      const int k = static_cast<int>(n / spc);
      on_tick(TickView{k, state.time, state.time - static_cast<double>(k) * spec.delta_t, state,
                       reference, graph, e, last_jump});
    }
    const Points u = control_input(state, reference, graph);
    const Points d = sampler.sample(state.time);
    state = integrate(state, u, d, target_velocity, spec.dt);
    ++totals.ticks;
  }
  return totals;
}

namespace {

Eigen::Vector3d random_in_ball(Rng& rng, double radius) {
  Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
  const double n = v.norm();
  if (n == 0.0) return Eigen::Vector3d::Zero();
  return v / n * radius * std::cbrt(rng.uniform());
}

// Drone displacement whose edge image under the path graph has the given norm.
Points edge_scaled_offset(Rng& rng, const InteractionGraph& graph, double edge_norm) {
  Points delta(3, 2);
  for (int i = 0; i < 2; ++i) delta.col(i) = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  const double n = (delta * graph.drone_rows()).norm();
  return n > 0.0 ? Points(delta * (edge_norm / n)) : Points(Points::Zero(3, 2));
}

double edge_gap(const SwarmState& state, const Points& reference, const InteractionGraph& graph) {
  return edge_error_drone_rows(state, ReferenceSignal{reference, 0.0, 0.0}, graph).norm();
}

}  // namespace

IssFixtureResult run_iss_fixture(std::uint64_t seed, const IssFixtureParams& params) {
  Rng rng(split_seed(seed, 11));
  FixtureSpec spec;
  spec.nodes = NodeSet{1, 1, 3, {}};
  spec.targets = Points::Zero(3, 1);
  spec.radius = 100.0;
  spec.dt = params.dt;
  spec.delta_t = params.delta_t;
  spec.checks = static_cast<int>(std::lround(params.duration / params.delta_t));
  const Eigen::Vector3d base(0.0, 0.0, 5.0);
  spec.drones = Points(3, 1);
  if (params.worst_case) {
    spec.drones.col(0) = base;
    spec.disturbance.kind = DisturbanceKind::constant;
    spec.disturbance.direction = Eigen::Vector3d(params.d_bar, 0.0, 0.0);
  } else {
    spec.drones.col(0) = base + random_in_ball(rng, 3.0);
    spec.disturbance.kind = DisturbanceKind::bounded_noise;
    spec.disturbance.seed = split_seed(seed, 12);
  }
  spec.disturbance.bound = params.d_bar;

  IssFixtureResult out;
  out.max_excess = -std::numeric_limits<double>::infinity();
  IntervalParams interval;
  interval.delta_t = params.delta_t;

  auto reference_fn = [&](const CheckView& v) -> Points {
    if (params.worst_case) return v.reference.drones;
    Points r(3, 1);
    r.col(0) = base + random_in_ball(rng, 2.0);
    return r;
  };
  auto on_check = [&](const CheckView& v) {
    const DroneSpectrum s = drone_spectrum(v.graph);
    interval.lambda = s.lambda_min_plus;
    interval.w_bar = std::sqrt(s.lambda_max) * params.d_bar;
    out.lambda = interval.lambda;
    out.w_bar = interval.w_bar;
  };
  auto on_tick = [&](const TickView& v) {
    if (v.t_rel == 0.0) interval.e0_norm = v.edge_error.norm();
    const double env = iss_envelope(interval, v.t_rel);
    out.max_excess = std::max(out.max_excess, v.edge_error.norm() - env);
  };
  out.totals = simulate(spec, reference_fn, on_check, on_tick);
  return out;
}

SlackCalibration calibrate_slack(const IssFixtureParams& params) {
  IssFixtureParams p = params;
  p.worst_case = true;
  SlackCalibration c;
  c.excess_dt = run_iss_fixture(0, p).max_excess;
  p.dt = params.dt / 2.0;
  c.excess_half_dt = run_iss_fixture(0, p).max_excess;
  c.ratio = c.excess_dt != 0.0 ? c.excess_half_dt / c.excess_dt : 0.0;
  c.constant = std::max(0.0, c.excess_dt) / params.dt;
  return c;
}

Points path_ideal_drones() {
  Points p(3, 2);
  p.col(0) = Eigen::Vector3d(6.0, 0.0, 0.0);
  p.col(1) = Eigen::Vector3d(3.0, 0.0, 0.0);
  return p;
}

FixtureSpec path_fixture(double dt, double delta_t, int checks, double d_bar, std::uint64_t seed) {
  FixtureSpec spec;
  spec.nodes = NodeSet{2, 1, 3, {}};
  spec.drones = path_ideal_drones();
  spec.targets = Points::Zero(3, 1);
  spec.radius = 4.0;
  spec.dt = dt;
  spec.delta_t = delta_t;
  spec.checks = checks;
  spec.disturbance.kind = d_bar > 0.0 ? DisturbanceKind::bounded_noise : DisturbanceKind::none;
  spec.disturbance.bound = d_bar;
  spec.disturbance.seed = split_seed(seed, 13);
  return spec;
}

namespace {

InteractionGraph ideal_path_graph() {
  const FixtureSpec spec = path_fixture(1e-3, 1.0, 1, 0.0, 0);
  SwarmState s{0.0, spec.drones, spec.targets};
  return build_graph(s.stacked(), spec.nodes, spec.radius);
}

}  // namespace

double path_lambda() { return drone_spectrum(ideal_path_graph()).lambda_min_plus; }

double path_w_bar(double d_bar) { return drone_incidence_norm(ideal_path_graph()) * d_bar; }

CorollaryResult run_corollary_fixture(std::uint64_t seed, const CorollaryParams& params) {
  Rng rng(split_seed(seed, 17));
  const FixtureSpec spec =
      path_fixture(params.dt, params.delta_t, params.intervals, params.d_bar, seed);
  const Points ideal = path_ideal_drones();

  CorollaryResult out;
  out.lambda = path_lambda();
  out.w_bar = path_w_bar(params.d_bar);
  IntervalParams ip;
  ip.lambda = out.lambda;
  ip.w_bar = out.w_bar;
  ip.delta_t = params.delta_t;
  ip.eps_z = params.eps_z;
  ip.delta_z = params.delta_z;
  out.eta = eta_max(ip);
  const double tolerance = params.slack_constant * params.dt;

  auto on_check = [&](const CheckView& v) {
    if (v.k == 0) return;
    const double gap = edge_gap(v.state, ideal, v.graph);
    out.max_gap_end = std::max(out.max_gap_end, gap);
    ++out.intervals;
    if (gap > params.delta_z + tolerance) ++out.violations;
  };
  auto reference_fn = [&](const CheckView& v) -> Points {
    const Points delta = edge_scaled_offset(rng, v.graph, params.eps_z * rng.uniform());
    Points candidate = ideal + delta;
    const double e_plus = edge_gap(v.state, candidate, v.graph);
    if (out.eta.feasible && e_plus > out.eta.threshold && e_plus > 0.0) {
      candidate = v.state.drones + (candidate - v.state.drones) * (out.eta.threshold / e_plus);
      ++out.clamped;
    }
    out.max_reference_gap = std::max(out.max_reference_gap, ((candidate - ideal) * v.graph.drone_rows()).norm());
    return candidate;
  };
  out.totals = simulate(spec, reference_fn, on_check, nullptr);
  return out;
}

HorizonParams certification_horizon(const CertificationParams& params, double eta0) {
  HorizonParams h;
  h.lambda_floor = path_lambda();
  h.alpha = std::exp(-h.lambda_floor * params.delta_t);
  h.jump_bound = params.jump_bound;
  h.eps_correct = params.eps_correct;
  h.eps_wrong = params.eps_wrong;
  h.markov_a = params.markov_a;
  h.markov_b = params.markov_b;
  h.p0 = params.p0;
  h.K = params.checks;
  h.eta0 = eta0;
  return h;
}

CertificationRun run_certification_fixture(std::uint64_t seed, const CertificationParams& params) {
  Rng rng(split_seed(seed, 21));
  FixtureSpec spec = path_fixture(params.dt, params.delta_t, params.checks, params.d_bar, seed);
  const Points ideal = path_ideal_drones();
  for (int i = 0; i < 2; ++i) spec.drones.col(i) += random_in_ball(rng, 0.3);

  // Wrong-state offsets stay within jump_bound - eps_correct so every
  // transition respects the jump bound; a wrong state repeats its output.
  const double wrong_hi = std::min(params.eps_wrong, params.jump_bound - params.eps_correct);
  if (wrong_hi < params.eps_correct)
    throw ParameterError("jump bound too small for the requested specification gaps");

  CertificationRun out;
  bool wrong = false;
  Points offset = Points::Zero(3, 2);
  double integral = 0.0;

  auto reference_fn = [&](const CheckView& v) -> Points {
    const bool was_wrong = wrong;
    wrong = v.k == 0 ? rng.bernoulli(params.p0)
                     : (was_wrong ? !rng.bernoulli(params.markov_b) : rng.bernoulli(params.markov_a));
    if (!wrong) {
      offset = edge_scaled_offset(rng, v.graph, params.eps_correct * rng.uniform());
    } else if (!was_wrong || v.k == 0) {
      offset = edge_scaled_offset(rng, v.graph, rng.uniform(params.eps_correct, wrong_hi));
    }
    const double gap = (offset * v.graph.drone_rows()).norm();
    if (wrong) {
      ++out.wrong_checks;
      out.max_gap_wrong = std::max(out.max_gap_wrong, gap);
    } else {
      out.max_gap_correct = std::max(out.max_gap_correct, gap);
    }
    return ideal + offset;
  };
  auto on_tick = [&](const TickView& v) {
    if (v.k == 0 && v.t_rel == 0.0) out.eta0 = v.edge_error.norm();
    if (v.k > 0 && v.t_rel == 0.0) out.max_jump = std::max(out.max_jump, v.last_jump.jump_norm);
    integral += edge_gap(v.state, ideal, v.graph) * params.dt;
  };
  out.totals = simulate(spec, reference_fn, nullptr, on_tick);
  out.measured_average = integral / (params.delta_t * params.checks);
  return out;
}

}  // namespace edgeform::harness
