#include <algorithm>
#include <cctype>
#include <regex>

#include "edgeform/backend.hpp"

namespace edgeform {

namespace {

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

bool matches(const std::string& text, const char* pattern) {
  return std::regex_search(text, std::regex(pattern));
}

std::optional<double> number_after(const std::string& text, const char* pattern) {
  std::smatch m;
  if (!std::regex_search(text, m, std::regex(pattern))) return std::nullopt;
  for (std::size_t g = 1; g < m.size(); ++g)
    if (m[g].matched) return std::stod(m[g].str());
  return std::nullopt;
}

Shape shape_word(const std::string& w) {
  if (w == "grid" || w == "lattice") return Shape::grid;
  if (w == "square") return Shape::square;
  if (w == "cross") return Shape::cross;
  if (w == "line") return Shape::line;
  if (w == "cube" || w == "cubic") return Shape::cube;
  if (w == "spiral") return Shape::spiral;
  return Shape::circle;
}

std::vector<Shape> shapes_in_order(const std::string& text) {
  static const std::regex word(
      R"(\b(grid|lattice|circle|circular|encircle\w*|ring|square|cross|line|cube|cubic|spiral)\b)");
  std::vector<Shape> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word); it != std::sregex_iterator();
       ++it) {
    std::string w = (*it)[1].str();
    if (w.starts_with("encircle")) w = "circle";
    out.push_back(shape_word(w));
  }
  return out;
}

std::vector<int> explicit_targets(const std::string& text) {
  static const std::regex ref(R"(\b(car|target|vehicle|suspect)\s*#?\s*(\d+)\b)");
  std::vector<int> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), ref); it != std::sregex_iterator();
       ++it) {
    const int idx = std::stoi((*it)[2].str()) - 1;
    if (idx >= 0 && std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
  }
  return out;
}

Vec3 centroid_of(const SwarmState& state, const std::vector<int>& drones) {
  Vec3 c = Vec3::Zero();
  for (int i : drones) c.head(state.dim()) += state.drones.col(i);
  return drones.empty() ? c : Vec3(c / static_cast<double>(drones.size()));
}

}  // namespace

GroundResult RuleBackend::ground(const std::string& text, const GroundContext& ctx) {
  if (ctx.state == nullptr) throw StructuralError("grounding needs the current state");
  const SwarmState& state = *ctx.state;
  const std::string t = lowercase(text);
  GroundResult out;
  Intent& intent = out.intent;
  intent.command = text;
  intent.height = ctx.default_height;

  const bool negated = matches(t, R"(\b(stop|cease|quit|end|no longer|don'?t|do not|not)\s+(tracking|track|following|follow|escorting|escort)\b)");
  const bool track_kw = matches(t, R"(\b(track\w*|follow\w*|escort\w*|pursu\w*|chas\w*)\b|maintain\w* (a |the )?formation around)");
  const bool search_kw = matches(t, R"(\b(search\w*|scan\w*|explor\w*|patrol\w*|look for|find)\b)");
  const bool hold_kw = matches(t, R"(\b(hold|hover|stay|stationary|stop|halt|remain)\b)");
  const std::vector<Shape> shapes = shapes_in_order(t);
  std::vector<int> targets = explicit_targets(t);
  const bool plural_targets =
      matches(t, R"(\b(cars|targets|vehicles|suspects)\b|\ball (the )?(car|target|vehicle)|\beach (car|target|vehicle)\b)");
  const bool even = matches(t, R"(\b(evenly|equally|balanced)\b)");
  const auto spacing = number_after(
      t, R"((?:spacing|spaced|separation)\s*(?:of\s*)?(\d+(?:\.\d+)?)|(\d+(?:\.\d+)?)\s*(?:m|meters?|metres?)\s*(?:apart|spacing|separation))");
  const auto height = number_after(
      t, R"((?:height|altitude)\s*(?:of\s*)?(\d+(?:\.\d+)?)|at\s*(\d+(?:\.\d+)?)\s*(?:m|meters?|metres?)\s*(?:altitude|height|high|above))");

  const bool recognized = negated || track_kw || search_kw || hold_kw || !shapes.empty() ||
                          !targets.empty() || plural_targets || even || spacing || height;
  if (!recognized) {
    out.fallback = true;
    out.warning = "instruction not recognized; defaulting to stationary";
    return out;
  }

  const std::optional<Intent>& cur = ctx.current;
  const bool inherit = !negated && !track_kw && !search_kw && !hold_kw && cur &&
                       cur->mode != Mode::search && !shapes.empty();

  if (negated) {
    intent.mode = Mode::stationary;
  } else if (track_kw) {
    intent.mode = Mode::track;
  } else if (search_kw) {
    intent.mode = Mode::search;
  } else if (inherit) {
    intent.mode = cur->mode;
  } else {
    intent.mode = Mode::stationary;
  }

  if (inherit) {
    intent.even_split = cur->even_split;
    intent.spacing = cur->spacing;
    intent.height = cur->height;
    intent.altitude_band = cur->altitude_band;
  }
  if (even) intent.even_split = true;
  if (spacing && *spacing > 0.0) intent.spacing = *spacing;
  if (height) intent.height = *height;

  if (intent.mode == Mode::search) {
    intent.formation = Shape::circle;
    if (cur && cur->search_region) intent.search_region = cur->search_region;
    else intent.search_region = ctx.default_search_region;
  } else if (negated && cur) {
    intent.formation = cur->formation;
  }
  if (!shapes.empty()) intent.formation = shapes.front();

  if (intent.mode == Mode::track) {
    if (targets.empty() && inherit) {
      for (const GroupSpec& g : cur->groups)
        if (g.target) targets.push_back(*g.target);
    }
    if (targets.empty()) {
      for (int j = 0; j < state.num_targets(); ++j)
        if (!ctx.params.is_landmark(j)) targets.push_back(j);
    }
    for (std::size_t g = 0; g < targets.size(); ++g) {
      GroupSpec spec;
      spec.target = targets[g];
      if (shapes.size() > 1) spec.formation = shapes[g % shapes.size()];
      intent.groups.push_back(spec);
    }
  } else if (intent.mode == Mode::stationary && negated && ctx.assignment &&
             static_cast<int>(ctx.assignment->group_of.size()) == state.num_drones()) {
    // Hold every current group where it is now.
    const Assignment& a = *ctx.assignment;
    for (int g = 0; g < a.num_groups(); ++g) {
      GroupSpec spec;
      spec.anchor = to_point(centroid_of(state, a.members(g)));
      if (cur && a.group_targets[static_cast<std::size_t>(g)].size() == 1) {
        for (const GroupSpec& s : cur->groups)
          if (s.target == a.group_targets[static_cast<std::size_t>(g)][0] && s.formation)
            spec.formation = s.formation;
      }
      intent.groups.push_back(spec);
    }
  } else if (intent.mode == Mode::stationary && shapes.size() > 1) {
    for (Shape s : shapes) intent.groups.push_back(GroupSpec{std::nullopt, std::nullopt, s, std::nullopt});
  }
  return out;
}

FormationTemplate RuleBackend::formation(Shape shape, int count, double spacing, double height) {
  return formation_offsets(shape, count, spacing, height);
}

VerificationVerdict RuleBackend::check(const Intent& intent, const SwarmState& state,
                                       const SupervisorMemory& memory,
                                       const SupervisionParams& params) {
  return verify_and_correct(intent, state, memory, params);
}

std::shared_ptr<SupervisorBackend> make_backend(const std::string& kind,
                                                const std::filesystem::path& replay_path) {
  if (kind == "rule") return std::make_shared<RuleBackend>();
  if (kind == "llm" || kind == "replay") {
    LlmConfig cfg = kind == "llm" ? LlmConfig::from_env() : LlmConfig{};
    cfg.replay_path = replay_path;
    if (kind == "replay") {
      if (replay_path.empty()) throw ParameterError("replay backend needs a replay file");
      cfg.mode = LlmMode::replay;
    } else {
      cfg.mode = replay_path.empty() ? LlmMode::live : LlmMode::record;
    }
    return std::make_shared<LlmBackend>(std::make_shared<LlmClient>(std::move(cfg)));
  }
  throw ParameterError("unknown backend '" + kind + "' (expected rule, llm or replay)");
}

}  // namespace edgeform
