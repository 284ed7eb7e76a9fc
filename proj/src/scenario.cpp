#include "edgeform/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "edgeform/bounds.hpp"

namespace edgeform {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

long ScenarioConfig::steps_per_check() const { return std::lround(check_interval / dt); }
long ScenarioConfig::steps_per_log() const { return std::max(1L, std::lround(log_interval / dt)); }
long ScenarioConfig::total_ticks() const { return std::lround(duration / dt); }

NodeSet ScenarioConfig::nodes() const {
  NodeSet n;
  n.num_drones = num_drones;
  n.num_targets = static_cast<int>(targets.size());
  n.dim = dim;
  bool any = false;
  for (const TargetSpec& t : targets) any = any || t.landmark;
  if (any)
    for (const TargetSpec& t : targets) n.always_visible.push_back(t.landmark);
  return n;
}

void ScenarioConfig::validate() const {
  if (num_drones < 1) throw ParameterError("scenario needs at least one drone");
  if (dim != 2 && dim != 3) throw ParameterError("dimension must be 2 or 3");
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(check_interval > 0.0)) throw ParameterError("check interval must be positive");
  if (duration < 0.0) throw ParameterError("duration must be non-negative");
  if (observation_radius < 0.0) throw ParameterError("observation radius must be non-negative");
  const double ratio = check_interval / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * std::max(1.0, ratio))
    throw ParameterError("check interval must be an integer multiple of dt");
  const double lr = log_interval / dt;
  if (!(log_interval > 0.0) || std::abs(lr - std::round(lr)) > 1e-6 * std::max(1.0, lr))
    throw ParameterError("log interval must be a positive integer multiple of dt");
  if (initial_drones && (initial_drones->rows() != dim || initial_drones->cols() != num_drones))
    throw StructuralError("initial drone positions have the wrong shape");
  for (const TargetSpec& t : targets)
    if (t.start.size() != dim) throw StructuralError("target start has the wrong dimension");
}

namespace {

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const json& j) {
  if (!j.is_array()) throw StructuralError("expected a coordinate array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

json box_json(const Box& b) {
  return json{{"min", {b.min[0], b.min[1], b.min[2]}}, {"max", {b.max[0], b.max[1], b.max[2]}}};
}

Box json_box(const json& j) {
  Box b;
  for (int a = 0; a < 3; ++a) {
    b.min[static_cast<std::size_t>(a)] = j.at("min").at(static_cast<std::size_t>(a)).get<double>();
    b.max[static_cast<std::size_t>(a)] = j.at("max").at(static_cast<std::size_t>(a)).get<double>();
  }
  return b;
}

std::string_view kind_name(DisturbanceKind k) {
  switch (k) {
    case DisturbanceKind::constant: return "constant";
    case DisturbanceKind::sinusoidal: return "sinusoidal";
    case DisturbanceKind::bounded_noise: return "bounded_noise";
    default: return "none";
  }
}

DisturbanceKind kind_from(const std::string& s) {
  if (s == "none") return DisturbanceKind::none;
  if (s == "constant") return DisturbanceKind::constant;
  if (s == "sinusoidal") return DisturbanceKind::sinusoidal;
  if (s == "bounded_noise") return DisturbanceKind::bounded_noise;
  throw StructuralError(fmt::format("unknown disturbance kind '{}'", s));
}

json points_json(const Points& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < p.cols(); ++i) a.push_back(vec_json(p.col(i)));
  return a;
}

json vec3_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

json config_to_json(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["num_drones"] = c.num_drones;
  j["dim"] = c.dim;
  if (c.initial_drones) j["initial_drones"] = points_json(*c.initial_drones);
  j["scatter"] = {{"center", vec3_json(c.scatter.center)},
                  {"radius", c.scatter.radius},
                  {"z_min", c.scatter.z_min},
                  {"z_max", c.scatter.z_max}};
  json targets = json::array();
  for (const TargetSpec& t : c.targets) {
    json legs = json::array();
    for (const TargetLeg& l : t.legs)
      legs.push_back({{"to", vec_json(l.to)}, {"speed", l.speed}, {"wait", l.wait}});
    targets.push_back(
        {{"name", t.name}, {"start", vec_json(t.start)}, {"legs", legs}, {"landmark", t.landmark}});
  }
  j["targets"] = targets;
  j["observation_radius"] = c.observation_radius;
  j["check_interval"] = c.check_interval;
  j["dt"] = c.dt;
  j["duration"] = c.duration;
  j["log_interval"] = c.log_interval;
  j["disturbance"] = {{"kind", std::string(kind_name(c.disturbance.kind))},
                      {"bound", c.disturbance.bound},
                      {"seed", c.disturbance.seed},
                      {"frequency", c.disturbance.frequency}};
  if (c.disturbance.direction.size() > 0)
    j["disturbance"]["direction"] = vec_json(c.disturbance.direction);
  if (c.initial_intent) j["initial_intent"] = intent_to_json(*c.initial_intent);
  json cmds = json::array();
  for (const ScheduledCommand& cmd : c.commands) {
    json cj{{"time", cmd.time}};
    if (cmd.intent) cj["intent"] = intent_to_json(*cmd.intent);
    else cj["text"] = cmd.text;
    cmds.push_back(cj);
  }
  j["commands"] = cmds;
  const SupervisionParams& s = c.supervision;
  j["supervision"] = {{"split_threshold", s.split_threshold},
                      {"cooldown_checks", s.cooldown_checks},
                      {"arrival_radius", s.arrival_radius},
                      {"residual_factor", s.residual_factor},
                      {"stale_distance", s.stale_distance},
                      {"expand_after_rounds", s.expand_after_rounds},
                      {"expand_factor", s.expand_factor},
                      {"max_expansions", s.max_expansions}};
  if (c.default_search_region) j["default_search_region"] = box_json(*c.default_search_region);
  j["default_height"] = c.default_height;
  j["slack_constant"] = c.slack_constant;
  j["verify_every_tick"] = c.verify_every_tick;
  return j;
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  try {
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    c.num_drones = j.at("num_drones").get<int>();
    c.dim = j.value("dim", c.dim);
    if (j.contains("initial_drones")) {
      const json& a = j["initial_drones"];
      Points p(c.dim, static_cast<Eigen::Index>(a.size()));
      for (std::size_t i = 0; i < a.size(); ++i) p.col(static_cast<Eigen::Index>(i)) = json_vec(a[i]);
      c.initial_drones = p;
    }
    if (j.contains("scatter")) {
      const json& s = j["scatter"];
      c.scatter.center = json_vec(s.at("center")).head<3>();
      c.scatter.radius = s.value("radius", c.scatter.radius);
      c.scatter.z_min = s.value("z_min", c.scatter.z_min);
      c.scatter.z_max = s.value("z_max", c.scatter.z_max);
    }
    for (const json& t : j.value("targets", json::array())) {
      TargetSpec spec;
      spec.name = t.value("name", "");
      spec.start = json_vec(t.at("start"));
      spec.landmark = t.value("landmark", false);
      for (const json& l : t.value("legs", json::array()))
        spec.legs.push_back({json_vec(l.at("to")), l.value("speed", 1.0), l.value("wait", 0.0)});
      c.targets.push_back(std::move(spec));
    }
    c.observation_radius = j.value("observation_radius", c.observation_radius);
    c.check_interval = j.value("check_interval", c.check_interval);
    c.dt = j.value("dt", c.dt);
    c.duration = j.value("duration", c.duration);
    c.log_interval = j.value("log_interval", c.log_interval);
    if (j.contains("disturbance")) {
      const json& d = j["disturbance"];
      c.disturbance.kind = kind_from(d.value("kind", "none"));
      c.disturbance.bound = d.value("bound", 0.0);
      c.disturbance.seed = d.value("seed", std::uint64_t{0});
      c.disturbance.frequency = d.value("frequency", c.disturbance.frequency);
      if (d.contains("direction")) c.disturbance.direction = json_vec(d["direction"]);
    }
    if (j.contains("initial_intent")) c.initial_intent = intent_from_json(j["initial_intent"]);
    for (const json& cmd : j.value("commands", json::array())) {
      ScheduledCommand sc;
      sc.time = cmd.at("time").get<double>();
      if (cmd.contains("intent")) sc.intent = intent_from_json(cmd["intent"]);
      else sc.text = cmd.at("text").get<std::string>();
      c.commands.push_back(std::move(sc));
    }
    if (j.contains("supervision")) {
      const json& s = j["supervision"];
      SupervisionParams& p = c.supervision;
      p.split_threshold = s.value("split_threshold", p.split_threshold);
      p.cooldown_checks = s.value("cooldown_checks", p.cooldown_checks);
      p.arrival_radius = s.value("arrival_radius", p.arrival_radius);
      p.residual_factor = s.value("residual_factor", p.residual_factor);
      p.stale_distance = s.value("stale_distance", p.stale_distance);
      p.expand_after_rounds = s.value("expand_after_rounds", p.expand_after_rounds);
      p.expand_factor = s.value("expand_factor", p.expand_factor);
      p.max_expansions = s.value("max_expansions", p.max_expansions);
    }
    if (j.contains("default_search_region")) c.default_search_region = json_box(j["default_search_region"]);
    c.default_height = j.value("default_height", c.default_height);
    c.slack_constant = j.value("slack_constant", c.slack_constant);
    c.verify_every_tick = j.value("verify_every_tick", c.verify_every_tick);
  } catch (const json::exception& e) {
    throw StructuralError(fmt::format("invalid scenario config: {}", e.what()));
  }
  return c;
}

json OnlineBoundRow::to_json(double tolerance) const {
  const char* status = flagged ? "flagged" : (min_slack >= -tolerance ? "pass" : "violation");
  return json{{"k", k},         {"t_k", t_k},     {"lambda", lambda}, {"w_bar", w_bar},
              {"e0", e0},       {"max_e", max_e}, {"slack", min_slack}, {"tolerance", tolerance},
              {"flagged", flagged}, {"status", status}};
}

// ---------------------------------------------------------------------------
// Mission

namespace {

DisturbanceModel seeded(DisturbanceModel m, std::uint64_t seed) {
  m.seed = split_seed(seed, 100 + m.seed);
  return m;
}

Points scatter_drones(const ScenarioConfig& c) {
  if (c.initial_drones) return *c.initial_drones;
  Rng rng(split_seed(c.seed, 1));
  Points p = Points::Zero(c.dim, c.num_drones);
  for (int i = 0; i < c.num_drones; ++i) {
    const double rad = c.scatter.radius * std::sqrt(rng.uniform());
    const double ang = 2.0 * std::numbers::pi * rng.uniform();
    const double z = rng.uniform(c.scatter.z_min, c.scatter.z_max);
    p(0, i) = c.scatter.center.x() + rad * std::cos(ang);
    p(1, i) = c.scatter.center.y() + rad * std::sin(ang);
    if (c.dim == 3) p(2, i) = c.scatter.center.z() + z;
  }
  return p;
}

Vec3 pad3(const Eigen::VectorXd& v) {
  Vec3 out = Vec3::Zero();
  for (Eigen::Index a = 0; a < std::min<Eigen::Index>(3, v.size()); ++a) out[a] = v[a];
  return out;
}

json sizes_json(const std::vector<int>& sizes) { return json(sizes); }

json assignment_json(const Assignment& a) {
  json groups = json::array();
  for (int g = 0; g < a.num_groups(); ++g)
    groups.push_back({{"targets", a.group_targets[static_cast<std::size_t>(g)]},
                      {"drones", a.members(g)}});
  return groups;
}

std::string mode_name(const std::optional<Intent>& intent) {
  return intent ? std::string(to_string(intent->mode)) : std::string("none");
}

}  // namespace

Mission::Mission(ScenarioConfig config, std::shared_ptr<SupervisorBackend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      nodes_(config_.nodes()),
      sampler_(seeded(config_.disturbance, config_.seed), config_.dim, config_.num_drones),
      search_rng_(split_seed(config_.seed, 3)) {
  config_.validate();
  if (!backend_) throw ParameterError("mission needs a supervisor backend");
  config_.supervision.check_interval = config_.check_interval;
  config_.supervision.observation_radius = config_.observation_radius;
  config_.supervision.landmark_targets.clear();
  for (const TargetSpec& t : config_.targets) config_.supervision.landmark_targets.push_back(t.landmark);

  for (const TargetSpec& t : config_.targets) scripts_.emplace_back(t.start, t.legs);
  total_ticks_ = config_.total_ticks();
  spc_ = config_.steps_per_check();
  log_every_ = config_.steps_per_log();

  state_.time = 0.0;
  state_.drones = scatter_drones(config_);
  state_.targets = Points::Zero(config_.dim, static_cast<Eigen::Index>(config_.targets.size()));
  for (std::size_t j = 0; j < config_.targets.size(); ++j)
    state_.targets.col(static_cast<Eigen::Index>(j)) = config_.targets[j].start;
  reference_ = ReferenceSignal{state_.drones, 0.0, 0.0};
  if (config_.initial_intent) queue_.push_back({next_ticket_++, "", config_.initial_intent});

  trajectory_ = std::string(kTrajectoryHeader) + "\n";
  supervision_ = std::string(kSupervisionHeader) + "\n";
}

double Mission::next_check_time() const {
  const long k = (tick_ + spc_ - 1) / spc_;
  return static_cast<double>(k * spc_) * config_.dt;
}

long Mission::submit(std::string text) {
  const long ticket = next_ticket_++;
  queue_.push_back({ticket, std::move(text), std::nullopt});
  return ticket;
}

long Mission::submit(Intent intent) {
  const long ticket = next_ticket_++;
  queue_.push_back({ticket, "", std::move(intent)});
  return ticket;
}

void Mission::run_to_end() {
  while (!finished()) tick();
}

void Mission::advance_check() {
  if (finished()) return;
  tick();
  while (!finished() && tick_ % spc_ != 0) tick();
}

std::optional<Points> Mission::begin_intent(const Intent& intent, json& info) {
  const SupervisionParams& params = config_.supervision;
  std::optional<Assignment> previous;
  if (have_memory_) previous = memory_.grounding.assignment;
  switch (intent.mode) {
    case Mode::track: {
      Regrounding rg = reground_tracking(intent, state_, params, previous, 0);
      memory_ = remember(rg.grounding, state_, rg.reassigned ? params.cooldown_checks : 0);
      have_memory_ = true;
      search_.reset();
      info["groups"] = assignment_json(rg.assignment);
      info["sizes"] = sizes_json(rg.assignment.sizes());
      return rg.grounding.reference;
    }
    case Mode::stationary: {
      Grounding g = ground_intent(intent, state_, params, previous);
      memory_ = remember(g, state_, 0);
      have_memory_ = true;
      search_.reset();
      info["groups"] = assignment_json(g.assignment);
      info["sizes"] = sizes_json(g.assignment.sizes());
      return g.reference;
    }
    case Mode::search: {
      SearchTick st = start_search(intent, state_, params, search_rng_);
      search_ = st.status;
      latched_detection_.reset();
      have_memory_ = false;
      memory_ = SupervisorMemory{};
      info["region"] = box_json(st.status.region);
      for (const SearchEvent& ev : st.events)
        events_.append(time(), "waypoint",
                       {{"drone", ev.drone}, {"position", vec3_json(ev.position)}, {"initial", true},
                        {"region", box_json(st.status.region)}});
      Points ref = *st.reference;
      if (config_.dim != 3) ref.conservativeResize(config_.dim, Eigen::NoChange);
      return ref;
    }
  }
  return std::nullopt;
}

std::optional<Points> Mission::regular_check(std::string& verdict) {
  const SupervisionParams& params = config_.supervision;
  const Intent& intent = *intent_;
  const double t = time();

  if (intent.mode == Mode::search) {
    if (!search_) return std::nullopt;
    SearchStatus status = *search_;
    if (latched_detection_) status.detection = latched_detection_;
    SearchTick st = search_tick(status, intent, state_, params, search_rng_);
    for (const SearchEvent& ev : st.events) {
      switch (ev.kind) {
        case SearchEvent::waypoint:
          events_.append(t, "waypoint", {{"drone", ev.drone}, {"position", vec3_json(ev.position)},
                                         {"region", box_json(st.status.region)}});
          break;
        case SearchEvent::cleared:
          events_.append(t, "waypoint_cleared",
                         {{"drone", ev.drone}, {"position", vec3_json(ev.position)},
                          {"cleared_waypoints", st.status.cleared_waypoints}});
          break;
        case SearchEvent::round:
          events_.append(t, "search_round", {{"rounds", st.status.rounds_completed}});
          break;
        case SearchEvent::expanded:
          events_.append(t, "region_expanded", {{"region", box_json(st.status.region)},
                                                {"expansions", st.status.expansions}});
          break;
        case SearchEvent::detection:
          events_.append(t, "detection", {{"drone", ev.drone},
                                          {"target", st.status.detection->target},
                                          {"position", vec3_json(ev.position)},
                                          {"detected_at", st.status.detection->time}});
          break;
      }
    }
    search_ = st.status;
    if (st.switched_intent) {
      intent_ = *st.switched_intent;
      Regrounding rg = reground_tracking(*intent_, state_, params, std::nullopt, 0);
      memory_ = remember(rg.grounding, state_, 0);
      have_memory_ = true;
      search_.reset();
      events_.append(t, "intent_changed", {{"reason", "detection"}, {"intent", intent_to_json(*intent_)}});
      verdict = "detection";
      return rg.grounding.reference;
    }
    verdict = st.reference ? "waypoints" : "consistent";
    if (!st.reference) return std::nullopt;
    Points ref = *st.reference;
    if (config_.dim != 3) ref.conservativeResize(config_.dim, Eigen::NoChange);
    return ref;
  }

  if (!have_memory_) return std::nullopt;
  if (intent.mode == Mode::track) {
    const int cooldown = memory_.cooldown_remaining;
    if (memory_.cooldown_remaining > 0) --memory_.cooldown_remaining;
    Regrounding rg =
        reground_tracking(intent, state_, params, memory_.grounding.assignment, cooldown);
    if (rg.reassigned) {
      const bool was_split = memory_.grounding.assignment.num_groups() > 1;
      memory_ = remember(rg.grounding, state_, params.cooldown_checks);
      events_.append(t, rg.split ? "split" : "merge",
                     {{"was_split", was_split},
                      {"nearest_sizes", sizes_json(rg.nearest_sizes)},
                      {"sizes", sizes_json(rg.assignment.sizes())},
                      {"groups", assignment_json(rg.assignment)}});
      verdict = rg.split ? "split" : "merge";
      return rg.grounding.reference;
    }
  }

  VerificationVerdict v = backend_->check(intent, state_, memory_, params);
  if (v.consistent) {
    verdict = "consistent";
    return std::nullopt;
  }
  const Assignment before = memory_.grounding.assignment;
  const Assignment after = v.corrected_assignment ? *v.corrected_assignment : before;
  Grounding g = ground_intent(intent, state_, params, after);
  memory_ = remember(g, state_, memory_.cooldown_remaining);
  json payload{{"reason", v.reason}, {"shape_residual", v.shape_residual},
               {"sizes_before", sizes_json(before.sizes())}, {"sizes", sizes_json(after.sizes())}};
  if (!(after == before)) payload["groups"] = assignment_json(after);
  events_.append(t, after == before ? "correction" : "rebalance", payload);
  verdict = after == before ? "corrected" : "rebalanced";
  return v.corrected_reference ? *v.corrected_reference : g.reference;
}

void Mission::close_interval() {
  if (open_row_) {
    supervision_ += format_supervision_row(*open_row_);
    rows_.push_back(*open_row_);
    if (open_row_->interval_edge_changes > 0)
      events_.append(time(), "graph_changes",
                     {{"k", open_row_->k}, {"count", open_row_->interval_edge_changes}});
    open_row_.reset();
  }
  if (bound_.k >= 0) {
    if (bound_.min_slack == std::numeric_limits<double>::infinity()) bound_.min_slack = 0.0;
    last_bound_ = bound_;
    bound_ = OnlineBoundRow{};
  }
}

void Mission::supervise(long k) {
  const double t = time();
  close_interval();

  // Scripted commands due by now join the queue ahead of this instant's drain.
  while (next_script_ < config_.commands.size() &&
         config_.commands[next_script_].time <= t + 0.5 * config_.dt) {
    const ScheduledCommand& c = config_.commands[next_script_++];
    queue_.push_back({next_ticket_++, c.text, c.intent});
  }

  std::optional<Points> new_ref;
  std::string verdict = intent_ ? "consistent" : "idle";
  bool changed = false;
  while (!queue_.empty()) {
    Pending cmd = std::move(queue_.front());
    queue_.pop_front();
    const json source = cmd.intent ? json(intent_to_json(*cmd.intent)) : json(cmd.text);
    try {
      Intent next;
      if (cmd.intent) {
        next = *cmd.intent;
      } else {
        GroundContext ctx;
        ctx.state = &state_;
        ctx.current = intent_;
        if (have_memory_) ctx.assignment = memory_.grounding.assignment;
        ctx.params = config_.supervision;
        ctx.default_search_region = config_.default_search_region;
        ctx.default_height = config_.default_height;
        GroundResult r = backend_->ground(cmd.text, ctx);
        if (r.fallback) throw InfeasibleIntent(r.warning);
        next = std::move(r.intent);
      }
      validate_intent(next, state_.num_drones(), state_.num_targets());
      // Grounding runs against copies so a rejected command leaves no trace.
      const SupervisorMemory saved_memory = memory_;
      const bool saved_have = have_memory_;
      const std::optional<SearchStatus> saved_search = search_;
      const std::optional<Detection> saved_latch = latched_detection_;
      const Rng saved_rng = search_rng_;
      const std::size_t saved_events = events_.records().size();
      json info = json::object();
      try {
        new_ref = begin_intent(next, info);
      } catch (...) {
        memory_ = saved_memory;
        have_memory_ = saved_have;
        search_ = saved_search;
        latched_detection_ = saved_latch;
        search_rng_ = saved_rng;
        if (events_.records().size() != saved_events)
          throw StructuralError("grounding failed after emitting events");
        throw;
      }
      intent_ = next;
      changed = true;
      events_.append(t, "command_applied", {{"ticket", cmd.ticket}, {"command", source},
                                            {"intent", intent_to_json(next)}, {"applied_at", t}});
      events_.append(t, "intent_changed", {{"reason", "command"}, {"intent", intent_to_json(next)}, {"grounding", info}});
    } catch (const Error& e) {
      events_.append(t, "command_rejected",
                     {{"ticket", cmd.ticket}, {"command", source}, {"error", e.what()}});
    }
  }

  if (changed) {
    verdict = "grounded";
  } else if (intent_) {
    try {
      new_ref = regular_check(verdict);
    } catch (const BackendFailure& e) {
      verdict = "backend_failure";
      events_.append(t, "backend_failure", {{"error", e.what()}});
      new_ref.reset();
    } catch (const ParseError& e) {
      verdict = "backend_failure";
      events_.append(t, "backend_failure", {{"error", e.what()}, {"offset", e.offset()}});
      new_ref.reset();
    }
  }

  const Points target_ref = new_ref ? *new_ref : reference_.drones;
  auto [next_ref, rec] = apply_jump(reference_, target_ref, graph_, graph_, state_);
  if (!new_ref) next_ref.valid_from = reference_.valid_from;
  reference_ = std::move(next_ref);
  if (rec.jump_norm > 0.0)
    events_.append(t, "jump", {{"k", k}, {"jump_norm", rec.jump_norm},
                               {"e_minus_norm", rec.e_minus_norm}, {"e_plus_norm", rec.e_plus_norm},
                               {"identity_residual", rec.identity_residual}});
  events_.append(t, "supervision", {{"k", k}, {"verdict", verdict}, {"mode", mode_name(intent_)}});

  const DroneSpectrum spec = drone_spectrum(graph_);
  SupervisionRow row;
  row.t = t;
  row.k = static_cast<int>(k);
  row.mode = mode_name(intent_);
  row.verdict = verdict;
  row.jump_norm = rec.jump_norm;
  row.e_minus_norm = rec.e_minus_norm;
  row.e_plus_norm = rec.e_plus_norm;
  row.reinitialized = rec.reinitialized;
  row.identity_residual = rec.identity_residual;
  row.graph_changed = have_check_edges_ && check_edges_ != graph_.edges();
  row.edge_count = graph_.edge_count();
  row.lambda_min_plus = spec.lambda_min_plus;
  row.incidence_norm = std::sqrt(std::max(0.0, spec.lambda_max));
  open_row_ = row;
  check_edges_ = graph_.edges();
  have_check_edges_ = true;

  bound_ = OnlineBoundRow{};
  bound_.k = static_cast<int>(k);
  bound_.t_k = t;
  bound_.lambda = spec.lambda_min_plus;
  bound_.w_bar = row.incidence_norm * config_.disturbance.bound;
  bound_.e0 = rec.e_plus_norm;
  bound_.min_slack = std::numeric_limits<double>::infinity();
  bound_.flagged = graph_.edge_count() == 0 || !(spec.lambda_min_plus > 0.0);
}

void Mission::log_sample(const Points& e) {
  const double t = time();
  const int na = nodes_.num_drones;
  std::vector<double> sq(static_cast<std::size_t>(nodes_.total()), 0.0);
  const auto& edges = graph_.edges();
  for (std::size_t c = 0; c < edges.size(); ++c) {
    const double s = e.col(static_cast<Eigen::Index>(c)).squaredNorm();
    sq[static_cast<std::size_t>(edges[c].tail)] += s;
    sq[static_cast<std::size_t>(edges[c].head)] += s;
  }
  for (int i = 0; i < nodes_.total(); ++i) {
    TrajectoryRow r;
    r.t = t;
    r.node_id = i;
    r.drone = i < na;
    if (r.drone) {
      r.pos = pad3(state_.drones.col(i));
      r.ref = pad3(reference_.drones.col(i));
    } else {
      r.pos = pad3(state_.targets.col(i - na));
    }
    r.edge_err_norm = std::sqrt(sq[static_cast<std::size_t>(i)]);
    trajectory_ += format_trajectory_row(r);
  }
}

void Mission::tick() {
  if (finished()) return;
  const long n = tick_;
  state_.time = static_cast<double>(n) * config_.dt;
  graph_ = build_graph(state_.stacked(), nodes_, config_.observation_radius);
  const bool edges_changed = n > 0 && graph_.edges() != previous_tick_edges_;

  if (n % spc_ == 0) {
    supervise(n / spc_);
  } else if (edges_changed && open_row_) {
    ++open_row_->interval_edge_changes;
    bound_.flagged = true;
  }
  previous_tick_edges_ = graph_.edges();

  const Points e = edge_error_drone_rows(state_, reference_, graph_);
  const double e_norm = e.norm();
  const Points u = control_input(state_, reference_, graph_);

  if (open_row_) {
    open_row_->max_e_norm = std::max(open_row_->max_e_norm, e_norm);
    if (config_.verify_every_tick && graph_.edge_count() > 0) {
      if (!projector_ || projector_edges_ != graph_.edges()) {
        projector_.emplace(graph_);
        projector_edges_ = graph_.edges();
      }
      const double residual = projector_->residual_norm(e) / std::max(1.0, e_norm);
      open_row_->max_range_residual = std::max(open_row_->max_range_residual, residual);
      const Points stacked = e * graph_.drone_rows().transpose();
      const double gap = stacked.size() ? (stacked - u).cwiseAbs().maxCoeff() : 0.0;
      open_row_->max_control_gap = std::max(open_row_->max_control_gap, gap);
    }
    const auto adjacency = graph_.adjacency();
    for (int i = 0; i < nodes_.num_drones; ++i)
      if (adjacency[static_cast<std::size_t>(i)].empty()) {
        ++open_row_->empty_neighbor_ticks;
        break;
      }
  }
  if (bound_.k >= 0 && !bound_.flagged) {
    IntervalParams p;
    p.lambda = bound_.lambda;
    p.w_bar = bound_.w_bar;
    p.e0_norm = bound_.e0;
    const double env = iss_envelope(p, state_.time - bound_.t_k);
    bound_.min_slack = std::min(bound_.min_slack, env - e_norm);
  }
  bound_.max_e = std::max(bound_.max_e, e_norm);

  if (n % log_every_ == 0) log_sample(e);

  if (intent_ && intent_->mode == Mode::search && search_ && !latched_detection_)
    latched_detection_ = detect(state_, config_.supervision);

  const Points d = sampler_.sample(state_.time);
  Points vb(config_.dim, static_cast<Eigen::Index>(scripts_.size()));
  for (std::size_t j = 0; j < scripts_.size(); ++j)
    vb.col(static_cast<Eigen::Index>(j)) = scripts_[j].velocity_at(state_.time);
  state_ = integrate(state_, u, d, vb, config_.dt);
  ++tick_;
  state_.time = static_cast<double>(tick_) * config_.dt;

  if (finished()) {
    graph_ = build_graph(state_.stacked(), nodes_, config_.observation_radius);
    if (tick_ % log_every_ == 0) log_sample(edge_error_drone_rows(state_, reference_, graph_));
    close_interval();
  }
}

std::string Mission::trajectory_csv() const { return trajectory_; }

std::string Mission::supervision_csv() const {
  std::string out = supervision_;
  if (open_row_) out += format_supervision_row(*open_row_);
  return out;
}

json Mission::snapshot(long events_from_seq) const {
  json nodes = json::array();
  const int na = nodes_.num_drones;
  for (int i = 0; i < nodes_.total(); ++i) {
    const bool drone = i < na;
    json n{{"id", i}, {"kind", drone ? "drone" : "target"}};
    n["pos"] = vec3_json(pad3(drone ? Eigen::VectorXd(state_.drones.col(i))
                                    : Eigen::VectorXd(state_.targets.col(i - na))));
    n["ref"] = drone ? vec3_json(pad3(reference_.drones.col(i))) : json(nullptr);
    if (!drone) n["name"] = config_.targets[static_cast<std::size_t>(i - na)].name;
    nodes.push_back(std::move(n));
  }
  json events = json::array();
  for (const EventRecord& r : events_.since(events_from_seq)) events.push_back(r.to_json());
  const double tol = config_.slack_constant * config_.dt;
  return json{{"t", state_.time},
              {"scenario", config_.name},
              {"nodes", nodes},
              {"intent", intent_ ? intent_to_json(*intent_) : json(nullptr)},
              {"events_since_last", events},
              {"bound_row", last_bound_ ? last_bound_->to_json(tol) : json(nullptr)},
              {"next_check", next_check_time()},
              {"check_interval", config_.check_interval}};
}

void Mission::write_logs(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_file(dir / "trajectory.csv", trajectory_csv());
  write_file(dir / "supervision.csv", supervision_csv());
  write_file(dir / "events.jsonl", events_.to_jsonl());
  write_file(dir / "config.json", config_to_json(config_).dump(2) + "\n");
}

RunResult run(const ScenarioConfig& config, std::shared_ptr<SupervisorBackend> backend) {
  Mission m(config, std::move(backend));
  m.run_to_end();
  return {m.trajectory_csv(), m.supervision_csv(), m.events().to_jsonl(), m.supervision_rows(),
          m.events()};
}

}  // namespace edgeform
