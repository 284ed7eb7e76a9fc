#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "edgeform/backend.hpp"
#include "edgeform/parsers.hpp"

#include <httplib.h>

namespace edgeform {

using nlohmann::json;

LlmConfig LlmConfig::from_env() {
  LlmConfig c;
  if (const char* v = std::getenv("EDGEFORM_LLM_URL")) c.url = v;
  if (const char* v = std::getenv("EDGEFORM_LLM_KEY")) c.key = v;
  if (const char* v = std::getenv("EDGEFORM_LLM_MODEL")) c.model = v;
  return c;
}

LlmClient::LlmClient(LlmConfig config) : config_(std::move(config)) {
  if (config_.max_retries < 0) throw ParameterError("max_retries must be non-negative");
  if (config_.mode == LlmMode::replay) load_replay();
}

void LlmClient::load_replay() {
  std::ifstream in(config_.replay_path);
  if (!in) throw BackendFailure(fmt::format("cannot open replay file {}", config_.replay_path.string()));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    replay_[j.at("request").dump()].push_back(j.at("response").get<std::string>());
  }
}

json LlmClient::request_body(const std::string& prompt) const {
  return json{{"model", config_.model},
              {"temperature", 0},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
}

std::string LlmClient::post(const json& body) {
  const std::string& url = config_.url;
  const std::size_t scheme = url.find("://");
  if (url.empty() || scheme == std::string::npos)
    throw BackendFailure("EDGEFORM_LLM_URL is not set to an absolute URL");
  const std::size_t path_at = url.find('/', scheme + 3);
  const std::string origin = url.substr(0, path_at);
  const std::string path = path_at == std::string::npos ? "/" : url.substr(path_at);

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);

  std::string last_error;
  auto delay = config_.backoff;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    ++attempts_;
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = fmt::format("HTTP {}", res->status);
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
      continue;
    }
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      last_error = fmt::format("malformed completion envelope: {}", e.what());
    }
  }
  throw BackendFailure(fmt::format("LLM call failed after {} attempt(s): {}", attempts_, last_error));
}

std::string LlmClient::call(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values) {
  std::lock_guard lock(mutex_);
  const json body = request_body(fill_prompt(tmpl, values));
  const std::string key = body.dump();
  if (config_.mode == LlmMode::replay) {
    auto it = replay_.find(key);
    if (it == replay_.end()) throw BackendFailure("no recorded response for this request");
    std::size_t& cursor = replay_cursor_[key];
    const std::string& response = it->second[std::min(cursor, it->second.size() - 1)];
    ++cursor;
    return response;
  }
  std::string response = post(body);
  if (config_.mode == LlmMode::record) {
    std::ofstream out(config_.replay_path, std::ios::app);
    if (!out) throw BackendFailure("cannot append to replay file");
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    out << json{{"request", body}, {"response", response}, {"timestamp", stamp}}.dump() << '\n';
  }
  return response;
}

LlmBackend::LlmBackend(std::shared_ptr<LlmClient> client) : client_(std::move(client)) {}

GroundResult LlmBackend::ground(const std::string& text, const GroundContext& ctx) {
  const std::string raw =
      client_->call(prompt_template(PromptName::motion_descriptor), {{"USER_TEXT", text}});
  GroundResult out;
  out.intent = parse_motion_descriptor(raw);
  out.intent.command = text;
  if (out.intent.mode == Mode::search && !out.intent.search_region)
    out.intent.search_region = ctx.default_search_region;
  return out;
}

FormationTemplate LlmBackend::formation(Shape shape, int count, double spacing, double height) {
  const std::string raw = client_->call(prompt_template(PromptName::formation_instruction),
                                        {{"SHAPE", std::string(to_string(shape))},
                                         {"N", std::to_string(count)},
                                         {"SPACING", fmt::format("{}", spacing)},
                                         {"HEIGHT", fmt::format("{}", height)}});
  return parse_formation_csv(raw, count, shape);
}

VerificationVerdict LlmBackend::check(const Intent& intent, const SwarmState& state,
                                      const SupervisorMemory& memory,
                                      const SupervisionParams& params) {
  const std::string user = intent.command.empty() ? intent_to_json(intent).dump() : intent.command;
  const std::string raw =
      client_->call(prompt_template(PromptName::auto_correction),
                    {{"USER_TEXT", user}, {"FEEDBACK_CSV", feedback_csv(state, memory.grounding)}});
  VerificationVerdict v = parse_feedback_json(raw);
  if (!v.consistent) {
    Assignment a = memory.grounding.assignment;
    if (intent.even_split) a = rebalance(a, state);
    v.corrected_assignment = a;
    v.corrected_reference = ground_intent(intent, state, params, a).reference;
  }
  return v;
}

}  // namespace edgeform
