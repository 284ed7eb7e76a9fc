#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include <unistd.h>

#include "edgeform/backend.hpp"
#include "edgeform/parsers.hpp"
#include "edgeform/prompts.hpp"
#include "edgeform/scenario.hpp"

#include <httplib.h>

using namespace edgeform;
using nlohmann::json;

namespace {

SwarmState fleet(int drones, int targets) {
  SwarmState s;
  s.drones = Points::Zero(3, drones);
  for (int i = 0; i < drones; ++i) s.drones.col(i) = Vec3(i, 0, 0);
  s.targets = Points::Zero(3, targets);
  for (int t = 0; t < targets; ++t) s.targets.col(t) = Vec3(0, 10.0 * t, 0);
  return s;
}

GroundResult ground(const std::string& text, const SwarmState& s, std::optional<Intent> current = {}) {
  GroundContext ctx;
  ctx.state = &s;
  ctx.current = std::move(current);
  RuleBackend rb;
  return rb.ground(text, ctx);
}

std::string completion(const std::string& content) {
  return json{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

/// Chat-completions stand-in that answers every request with a fixed message.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::string content) : content_(std::move(content)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_body_ = req.body;
      res.set_content(completion(content_), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  int hits() const { return hits_; }
  std::string last_body() const { return last_body_; }

 private:
  std::string content_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> hits_{0};
  std::string last_body_;
};

std::filesystem::path temp_file(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("edgeform_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove(p);
  return p;
}

LlmConfig config_for(std::string url, LlmMode mode, std::filesystem::path path = {}) {
  LlmConfig c;
  c.url = std::move(url);
  c.model = "test-model";
  c.mode = mode;
  c.replay_path = std::move(path);
  c.timeout = std::chrono::milliseconds(2000);
  c.max_retries = 2;
  c.backoff = std::chrono::milliseconds(10);
  return c;
}

}  // namespace

TEST(RuleBackend, FollowInGrid) {
  const SwarmState s = fleet(6, 3);
  const GroundResult r = ground("Follow the group of cars in a grid formation", s);
  EXPECT_EQ(r.intent.mode, Mode::track);
  EXPECT_EQ(r.intent.formation, Shape::grid);
  EXPECT_FALSE(r.fallback);
}

TEST(RuleBackend, DragnetCircleThreeTargets) {
  const SwarmState s = fleet(6, 3);
  const GroundResult r = ground("Form a circle like a coordinated police dragnet and track all three targets", s);
  EXPECT_EQ(r.intent.mode, Mode::track);
  EXPECT_EQ(r.intent.formation, Shape::circle);
  EXPECT_EQ(r.intent.groups.size(), 3u);
}

TEST(RuleBackend, UnrecognizedTextFallsBack) {
  const SwarmState s = fleet(4, 1);
  const GroundResult r = ground("hello", s);
  EXPECT_EQ(r.intent.mode, Mode::stationary);
  EXPECT_TRUE(r.fallback);
  EXPECT_FALSE(r.warning.empty());
}

TEST(RuleBackend, KeywordsForSearchSplitAndSpacing) {
  const SwarmState s = fleet(4, 1);
  EXPECT_EQ(ground("scan the valley", s).intent.mode, Mode::search);
  const GroundResult r = ground("escort car1 and car2 evenly in a line with spacing 3.5", s);
  EXPECT_EQ(r.intent.mode, Mode::track);
  EXPECT_TRUE(r.intent.even_split);
  EXPECT_EQ(r.intent.formation, Shape::line);
  EXPECT_DOUBLE_EQ(r.intent.spacing, 3.5);
  EXPECT_FALSE(ground("escort car1 in a line", s).intent.even_split);
}

TEST(RuleBackend, Deterministic) {
  const SwarmState s = fleet(5, 2);
  const std::string text = "track both cars in a cross, balanced";
  EXPECT_EQ(ground(text, s).intent, ground(text, s).intent);
}

TEST(RuleBackend, IntentRoundTripsThroughDescriptor) {
  const SwarmState s = fleet(5, 3);
  const Intent in = ground("track car1 and car3 in a square evenly spacing 4", s).intent;
  Intent back = parse_motion_descriptor(intent_to_json(in).dump());
  back.command = in.command;
  EXPECT_EQ(back, in);
}

TEST(LlmClient, RecordThenReplayGivesSameIntent) {
  const auto path = temp_file("replay");
  const std::string content =
      R"({"mode": "track", "tracking": true, "groups": ["car1", "car2"], "formation": "circle", "even_split": false, "spacing": 2})";
  const SwarmState s = fleet(6, 2);
  GroundContext ctx;
  ctx.state = &s;
  Intent live;
  {
    FakeEndpoint endpoint(content);
    LlmBackend backend(std::make_shared<LlmClient>(config_for(endpoint.url(), LlmMode::record, path)));
    live = backend.ground("track car1 and car2 in a circle", ctx).intent;
    EXPECT_EQ(endpoint.hits(), 1);
    const json sent = json::parse(endpoint.last_body());
    EXPECT_EQ(sent.at("model"), "test-model");
  }
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const json rec = json::parse(line);
  EXPECT_TRUE(rec.contains("request"));
  EXPECT_EQ(rec.at("response"), content);
  EXPECT_TRUE(rec.contains("timestamp"));

  LlmBackend replay(std::make_shared<LlmClient>(config_for("", LlmMode::replay, path)));
  EXPECT_EQ(replay.ground("track car1 and car2 in a circle", ctx).intent, live);
  EXPECT_THROW(replay.ground("something never recorded", ctx), BackendFailure);
  std::filesystem::remove(path);
}

TEST(LlmClient, EndpointDownFailsAfterRetries) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  LlmClient client(config_for("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", LlmMode::live));
  EXPECT_THROW(client.call(prompt_template(PromptName::motion_descriptor), {{"USER_TEXT", "hold"}}), BackendFailure);
  EXPECT_EQ(client.attempts_made(), 3);
}

TEST(LlmClient, MalformedOutputSurfacesParseError) {
  FakeEndpoint endpoint("Sure, here is the JSON you asked for.");
  LlmBackend backend(std::make_shared<LlmClient>(config_for(endpoint.url(), LlmMode::live)));
  const SwarmState s = fleet(3, 1);
  GroundContext ctx;
  ctx.state = &s;
  EXPECT_THROW(backend.ground("track car1", ctx), ParseError);
}

TEST(LlmClient, ParseErrorLeavesMissionUntouched) {
  FakeEndpoint endpoint(R"({"mode": "track", "tracking": true, "groups": [)");
  ScenarioConfig c;
  c.num_drones = 4;
  Points drones(3, 4);
  drones << 0, 1, 2, 3, 0, 0, 0, 0, 5, 5, 5, 5;
  c.initial_drones = drones;
  TargetSpec t;
  t.name = "car1";
  t.start = Eigen::Vector3d(2, 1, 0);
  c.targets.push_back(t);
  c.duration = 3.0;
  c.observation_radius = 30.0;
  Mission m(c, std::make_shared<LlmBackend>(std::make_shared<LlmClient>(config_for(endpoint.url(), LlmMode::live))));
  m.advance_check();
  m.advance_check();
  const auto digest = [&] {
    json j;
    j["intent"] = m.intent() ? intent_to_json(*m.intent()) : json(nullptr);
    j["reference"] = std::vector<double>(m.reference().drones.data(), m.reference().drones.data() + m.reference().drones.size());
    j["memory"] = std::vector<double>(m.memory().grounding.reference.data(),
                                      m.memory().grounding.reference.data() + m.memory().grounding.reference.size());
    return std::hash<std::string>{}(j.dump());
  };
  const std::size_t before = digest();
  const long ticket = m.submit(std::string("track car1"));
  m.advance_check();
  EXPECT_EQ(digest(), before);
  bool rejected = false;
  for (const EventRecord& e : m.events().records())
    if (e.kind == "command_rejected" && e.payload.at("ticket") == ticket) rejected = true;
  EXPECT_TRUE(rejected);
  EXPECT_GE(endpoint.hits(), 1);
}
