#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "edgeform/dynamics.hpp"
#include "edgeform/supervision.hpp"

namespace edgeform {

enum class PromptName { motion_descriptor, formation_instruction, auto_correction };
enum class OutputFormat { json, csv };

std::string_view to_string(PromptName name);

struct PromptTemplate {
  PromptName name;
  std::string text;
  std::vector<std::string> placeholders;  ///< without braces, e.g. "USER_TEXT"
  OutputFormat format;
};

const PromptTemplate& prompt_template(PromptName name);

/// Substitutes every `{KEY}`. Missing or unknown keys raise ParameterError.
std::string fill_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values);

/// Current group layout for the formation checker: one `# group g` block per
/// group, rows `id,x,y,z` relative to the group centroid.
std::string feedback_csv(const SwarmState& state, const Grounding& grounding);

}  // namespace edgeform
