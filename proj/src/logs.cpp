#include "edgeform/logs.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace edgeform {

using nlohmann::json;

json EventRecord::to_json() const {
  return json{{"t", t}, {"seq", seq}, {"kind", kind}, {"payload", payload}};
}

EventRecord EventRecord::from_json(const json& j) {
  EventRecord r;
  r.t = j.at("t").get<double>();
  r.seq = j.at("seq").get<long>();
  r.kind = j.at("kind").get<std::string>();
  r.payload = j.value("payload", json::object());
  return r;
}

const EventRecord& EventLog::append(double t, std::string kind, json payload) {
  if (!records_.empty() && t < records_.back().t)
    throw StructuralError("event log is append-only in time");
  records_.push_back({t, next_seq_++, std::move(kind), std::move(payload)});
  return records_.back();
}

std::vector<EventRecord> EventLog::since(long seq) const {
  std::vector<EventRecord> out;
  for (const EventRecord& r : records_)
    if (r.seq >= seq) out.push_back(r);
  return out;
}

std::string EventLog::to_jsonl() const {
  std::string out;
  for (const EventRecord& r : records_) {
    out += r.to_json().dump();
    out += '\n';
  }
  return out;
}

EventLog EventLog::from_jsonl(const std::string& text) {
  EventLog log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EventRecord r = EventRecord::from_json(json::parse(line));
    log.records_.push_back(r);
    log.next_seq_ = r.seq + 1;
  }
  return log;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw StructuralError(fmt::format("not a number: '{}'", s));
  return v;
}

int to_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw StructuralError(fmt::format("not an integer: '{}'", s));
  return v;
}

template <typename Fn>
void for_data_lines(const std::string& text, const char* header, Fn&& fn) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw StructuralError("unexpected CSV header");
  while (std::getline(in, line))
    if (!line.empty()) fn(split_csv(line));
}

}  // namespace

std::string format_trajectory_row(const TrajectoryRow& r) {
  if (r.drone)
    return fmt::format("{},{},drone,{},{},{},{},{},{},{}\n", r.t, r.node_id, r.pos.x(), r.pos.y(),
                       r.pos.z(), r.ref.x(), r.ref.y(), r.ref.z(), r.edge_err_norm);
  return fmt::format("{},{},target,{},{},{},,,,{}\n", r.t, r.node_id, r.pos.x(), r.pos.y(),
                     r.pos.z(), r.edge_err_norm);
}

std::vector<TrajectoryRow> parse_trajectory_csv(const std::string& text) {
  std::vector<TrajectoryRow> rows;
  for_data_lines(text, kTrajectoryHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 10) throw StructuralError("trajectory row needs 10 fields");
    TrajectoryRow r;
    r.t = to_double(f[0]);
    r.node_id = to_int(f[1]);
    if (f[2] != "drone" && f[2] != "target") throw StructuralError("unknown node kind");
    r.drone = f[2] == "drone";
    r.pos = {to_double(f[3]), to_double(f[4]), to_double(f[5])};
    if (r.drone) r.ref = {to_double(f[6]), to_double(f[7]), to_double(f[8])};
    r.edge_err_norm = to_double(f[9]);
    rows.push_back(r);
  });
  return rows;
}

std::string format_supervision_row(const SupervisionRow& r) {
  return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.t, r.k, r.mode,
                     r.verdict, r.jump_norm, r.e_minus_norm, r.e_plus_norm, r.reinitialized ? 1 : 0,
                     r.identity_residual, r.graph_changed ? 1 : 0, r.edge_count, r.lambda_min_plus,
                     r.incidence_norm, r.interval_edge_changes, r.max_range_residual,
                     r.max_control_gap, r.empty_neighbor_ticks, r.max_e_norm);
}

std::vector<SupervisionRow> parse_supervision_csv(const std::string& text) {
  std::vector<SupervisionRow> rows;
  for_data_lines(text, kSupervisionHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 18) throw StructuralError("supervision row needs 18 fields");
    SupervisionRow r;
    r.t = to_double(f[0]);
    r.k = to_int(f[1]);
    r.mode = std::string(f[2]);
    r.verdict = std::string(f[3]);
    r.jump_norm = to_double(f[4]);
    r.e_minus_norm = to_double(f[5]);
    r.e_plus_norm = to_double(f[6]);
    r.reinitialized = to_int(f[7]) != 0;
    r.identity_residual = to_double(f[8]);
    r.graph_changed = to_int(f[9]) != 0;
    r.edge_count = to_int(f[10]);
    r.lambda_min_plus = to_double(f[11]);
    r.incidence_norm = to_double(f[12]);
    r.interval_edge_changes = to_int(f[13]);
    r.max_range_residual = to_double(f[14]);
    r.max_control_gap = to_double(f[15]);
    r.empty_neighbor_ticks = to_int(f[16]);
    r.max_e_norm = to_double(f[17]);
    rows.push_back(r);
  });
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError(fmt::format("cannot write {}", path.string()));
  out << text;
}

}  // namespace edgeform
