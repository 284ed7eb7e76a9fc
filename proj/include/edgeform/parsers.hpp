#pragma once

#include <string>
#include <string_view>

#include "edgeform/formation.hpp"
#include "edgeform/intent.hpp"
#include "edgeform/supervision.hpp"

namespace edgeform {

/// Strips surrounding whitespace and one enclosing Markdown code fence
/// (```json ... ```), if present. Anything else is left for the strict parser.
std::string unfence(std::string_view raw);

/// Motion Descriptor output to Intent. Extra text, non-JSON or a missing mode
/// raise ParseError carrying the byte offset of the offending span.
Intent parse_motion_descriptor(std::string_view raw);

/// Formation Instruction CSV (`id,x,y,z` header, exactly n rows, ids 0..n-1,
/// finite and pairwise distinct points).
FormationTemplate parse_formation_csv(std::string_view raw, int n, Shape shape = Shape::grid);

/// Auto-correction output: `feedback == true` means a revision is needed.
VerificationVerdict parse_feedback_json(std::string_view raw);

}  // namespace edgeform
