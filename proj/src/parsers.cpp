#include "edgeform/parsers.hpp"

#include <charconv>
#include <cmath>
#include <vector>

#include <fmt/format.h>

namespace edgeform {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

json strict_json(std::string_view raw) {
  const std::string text = unfence(raw);
  if (text.empty()) throw ParseError("empty response", 0);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const long at = e.byte > 0 ? static_cast<long>(e.byte) - 1 : 0;
    throw ParseError(fmt::format("response is not a single JSON value: {}", e.what()), at);
  }
}

}  // namespace

std::string unfence(std::string_view raw) {
  std::string_view s = trim(raw);
  if (s.starts_with("```")) {
    const std::size_t eol = s.find('\n');
    if (eol == std::string_view::npos) return std::string(s);
    std::string_view body = s.substr(eol + 1);
    body = trim(body);
    if (body.ends_with("```")) {
      body.remove_suffix(3);
      return std::string(trim(body));
    }
  }
  return std::string(s);
}

Intent parse_motion_descriptor(std::string_view raw) {
  const json j = strict_json(raw);
  return intent_from_json(j);
}

FormationTemplate parse_formation_csv(std::string_view raw, int n, Shape shape) {
  if (n < 1) throw ParameterError("expected drone count must be positive");
  const std::string text = unfence(raw);
  std::vector<std::pair<std::string_view, long>> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line = trim(std::string_view(text).substr(start, end - start));
    if (!line.empty()) lines.emplace_back(line, static_cast<long>(start));
    start = end + 1;
  }
  if (lines.empty()) throw ParseError("empty formation table", 0);
  if (lines.front().first != "id,x,y,z")
    throw ParseError("formation table must start with header 'id,x,y,z'", lines.front().second);
  if (static_cast<int>(lines.size()) - 1 != n)
    throw ParseError(fmt::format("expected {} rows, got {}", n, lines.size() - 1),
                     lines.back().second);

  FormationTemplate t{shape, Points::Zero(3, n)};
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto [line, offset] = lines[r];
    std::vector<std::string_view> f;
    std::size_t s = 0;
    for (;;) {
      const std::size_t c = line.find(',', s);
      f.push_back(trim(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s)));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (f.size() != 4) throw ParseError("each row needs exactly 4 fields", offset);
    int id = -1;
    auto [ip, iec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), id);
    if (iec != std::errc{} || ip != f[0].data() + f[0].size())
      throw ParseError(fmt::format("non-integer id '{}'", f[0]), offset);
    if (id < 0 || id >= n) throw ParseError(fmt::format("id {} outside 0..{}", id, n - 1), offset);
    if (seen[static_cast<std::size_t>(id)]) throw ParseError(fmt::format("duplicate id {}", id), offset);
    seen[static_cast<std::size_t>(id)] = true;
    for (int a = 0; a < 3; ++a) {
      const std::string_view v = f[static_cast<std::size_t>(a + 1)];
      double x = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
        throw ParseError(fmt::format("non-numeric coordinate '{}'", v), offset);
      if (!std::isfinite(x)) throw ParseError("coordinate is not finite", offset);
      t.offsets(a, id) = x;
    }
  }
  for (int i = 0; i < n; ++i)
    for (int k = i + 1; k < n; ++k)
      if ((t.offsets.col(i) - t.offsets.col(k)).norm() < 1e-9)
        throw ParseError(fmt::format("drones {} and {} share a location", i, k));
  return t;
}

VerificationVerdict parse_feedback_json(std::string_view raw) {
  const json j = strict_json(raw);
  if (!j.is_object()) throw ParseError("feedback must be a JSON object");
  if (!j.contains("feedback")) throw ParseError("missing field 'feedback'");
  if (!j["feedback"].is_boolean()) throw ParseError("'feedback' must be a boolean");
  if (!j.contains("reason")) throw ParseError("missing field 'reason'");
  if (!j["reason"].is_string()) throw ParseError("'reason' must be a string");
  VerificationVerdict v;
  v.consistent = !j["feedback"].get<bool>();
  v.reason = j["reason"].get<std::string>();
  return v;
}

}  // namespace edgeform
