#include "edgeform/prompts.hpp"

#include <set>

#include <fmt/format.h>

namespace edgeform {

namespace {

constexpr std::string_view kMotionDescriptor = R"txt(You are an instruction parser for a multi-agent control system.

Rules:

1. "mode":
- "track" if the user mentions tracking, following, escorting, or maintaining formation around moving targets.
- "search" if the user mentions searching, scanning, exploring, or patrolling.
- "stationary" otherwise.

2. "tracking":
- true if mode is "track".
- false otherwise.

3. Each "group" corresponds to one target mentioned by the user (e.g. car1, car2).

4. "formation":
- Use the shape mentioned by the user.
- Use "grid" if not specified.

5. "even_split":
- true only if the user explicitly says "evenly", "equally", or "balanced".
- false otherwise.

6. "spacing":
- Use the number if provided.
- Default to 2 if not specified.

Output JSON only. No extra text.

User instruction: {USER_TEXT}
)txt";

constexpr std::string_view kFormationInstruction = R"txt(You are a formation geometry generator.

Your task is to output 3D formation offsets (x,y,z) for N drones,
relative to the formation center at (0,0) and at a height offset z above the ground.

Input:
- Formation shape (e.g., circle, square, grid, cross, spiral).
- Number of drones N.
- Optional spacing (meters), default is 1.0 meter.
- Optional height offset z (meters above ground), default is 0.

Rules:
- Output exactly N points.
- Points are relative offsets from the formation center (0,0).
- z represents the vertical offset above the ground.
- Use simple geometry consistent with the requested shape.
- If spacing is given, neighboring drones should be approximately spacing meters apart.
- Do not place multiple drones at the same location.

Output format (CSV only, no extra text):

id,x,y,z
0,x0,y0,z0
1,x1,y1,z1
...

Only output the table.

Formation shape: {SHAPE}
Number of drones N: {N}
Spacing: {SPACING}
Height offset z: {HEIGHT}
)txt";

constexpr std::string_view kAutoCorrection = R"txt(You are a multi-agent formation checker.

Goal:
Decide if the current drone formation meets the user's intent or if it should be revised.

INPUT:
1) USER INSTRUCTION: {USER_TEXT}
- Describes desired formation/behavior.

2) CURRENT FORMATION (CSV): {FEEDBACK_CSV}

- One or multiple groups.
- Groups separated by lines starting with "# group" or "---".
- Coordinates are 3D relative positions: id,x,y,z

CHECK:
Compare the user instruction with the current coordinates.
Consider:
- Formation shape (grid, circle, line, cluster)
- Group separation (if multiple targets implied)
- Rough symmetry/alignment
Small numeric deviations should NOT trigger revision.

OUTPUT (STRICT JSON ONLY):
{
  "feedback": true/false,
  "reason": "Short explanation (1-2 sentences)"
}

Examples:
{"feedback": false, "reason": "Grid matches user request."}
{"feedback": true, "reason": "One cluster but multiple groups requested."}
)txt";

const std::vector<PromptTemplate>& templates() {
  static const std::vector<PromptTemplate> all{
      {PromptName::motion_descriptor, std::string(kMotionDescriptor), {"USER_TEXT"}, OutputFormat::json},
      {PromptName::formation_instruction, std::string(kFormationInstruction),
       {"SHAPE", "N", "SPACING", "HEIGHT"}, OutputFormat::csv},
      {PromptName::auto_correction, std::string(kAutoCorrection), {"USER_TEXT", "FEEDBACK_CSV"},
       OutputFormat::json},
  };
  return all;
}

bool is_key_char(char c) { return (c >= 'A' && c <= 'Z') || c == '_'; }

}  // namespace

std::string_view to_string(PromptName name) {
  switch (name) {
    case PromptName::formation_instruction: return "formation_instruction";
    case PromptName::auto_correction: return "auto_correction";
    default: return "motion_descriptor";
  }
}

const PromptTemplate& prompt_template(PromptName name) {
  for (const PromptTemplate& t : templates())
    if (t.name == name) return t;
  throw ParameterError("unknown prompt template");
}

std::string fill_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values) {
  const std::set<std::string> expected(tmpl.placeholders.begin(), tmpl.placeholders.end());
  for (const auto& [key, value] : values)
    if (!expected.contains(key)) throw ParameterError(fmt::format("unknown placeholder '{}'", key));
  std::string out;
  const std::string& text = tmpl.text;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && is_key_char(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        const std::string key = text.substr(i + 1, j - i - 1);
        if (expected.contains(key)) {
          auto it = values.find(key);
          if (it == values.end()) throw ParameterError(fmt::format("missing value for '{}'", key));
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

std::string feedback_csv(const SwarmState& state, const Grounding& grounding) {
  std::string out;
  for (std::size_t g = 0; g < grounding.groups.size(); ++g) {
    const auto& drones = grounding.groups[g].drones;
    out += fmt::format("# group {}\nid,x,y,z\n", g);
    Vec3 c = Vec3::Zero();
    for (int i : drones) c.head(state.dim()) += state.drones.col(i);
    if (!drones.empty()) c /= static_cast<double>(drones.size());
    for (int i : drones) {
      Vec3 p = Vec3::Zero();
      p.head(state.dim()) = state.drones.col(i);
      p -= c;
      out += fmt::format("{},{:.3f},{:.3f},{:.3f}\n", i, p.x(), p.y(), p.z());
    }
  }
  return out;
}

}  // namespace edgeform
