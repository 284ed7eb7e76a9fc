#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "edgeform/dynamics.hpp"
#include "edgeform/formation.hpp"
#include "edgeform/intent.hpp"
#include "edgeform/prompts.hpp"
#include "edgeform/supervision.hpp"

namespace edgeform {

/// What the supervisor knows when grounding a new instruction.
struct GroundContext {
  const SwarmState* state = nullptr;
  std::optional<Intent> current;
  std::optional<Assignment> assignment;
  SupervisionParams params;
  std::optional<Box> default_search_region;
  double default_height = 5.0;
};

struct GroundResult {
  Intent intent;
  bool fallback = false;  ///< nothing in the text was recognized
  std::string warning;
};

class SupervisorBackend {
 public:
  virtual ~SupervisorBackend() = default;
  virtual std::string name() const = 0;
  virtual GroundResult ground(const std::string& text, const GroundContext& ctx) = 0;
  virtual FormationTemplate formation(Shape shape, int count, double spacing, double height) = 0;
  virtual VerificationVerdict check(const Intent& intent, const SwarmState& state,
                                    const SupervisorMemory& memory,
                                    const SupervisionParams& params) = 0;
};

/// Deterministic keyword grounding plus the verification checks of the
/// supervision module. Pure: identical inputs give identical outputs.
class RuleBackend final : public SupervisorBackend {
 public:
  std::string name() const override { return "rule"; }
  GroundResult ground(const std::string& text, const GroundContext& ctx) override;
  FormationTemplate formation(Shape shape, int count, double spacing, double height) override;
  VerificationVerdict check(const Intent& intent, const SwarmState& state,
                            const SupervisorMemory& memory,
                            const SupervisionParams& params) override;
};

enum class LlmMode { live, record, replay };

struct LlmConfig {
  std::string url;    ///< chat-completions endpoint, e.g. http://host:port/v1/chat/completions
  std::string key;
  std::string model;
  LlmMode mode = LlmMode::live;
  std::filesystem::path replay_path;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};  ///< doubled after each failed attempt

  /// Reads EDGEFORM_LLM_URL, EDGEFORM_LLM_KEY and EDGEFORM_LLM_MODEL.
  static LlmConfig from_env();
};

/// One chat-completion round trip per call with retries; record/replay of
/// every exchange as JSON lines {request, response, timestamp}.
class LlmClient {
 public:
  explicit LlmClient(LlmConfig config);
  std::string call(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values);
  const LlmConfig& config() const { return config_; }
  int attempts_made() const { return attempts_; }

  /// Request body sent to the endpoint for a filled prompt.
  nlohmann::json request_body(const std::string& prompt) const;

 private:
  std::string post(const nlohmann::json& body);
  void load_replay();

  LlmConfig config_;
  std::mutex mutex_;
  std::map<std::string, std::vector<std::string>> replay_;  // request dump -> responses
  std::map<std::string, std::size_t> replay_cursor_;
  int attempts_ = 0;
};

/// Prompt triple over an LlmClient. Grounding and checking go
/// through the model; corrections regenerate references deterministically.
class LlmBackend final : public SupervisorBackend {
 public:
  explicit LlmBackend(std::shared_ptr<LlmClient> client);
  std::string name() const override { return "llm"; }
  GroundResult ground(const std::string& text, const GroundContext& ctx) override;
  FormationTemplate formation(Shape shape, int count, double spacing, double height) override;
  VerificationVerdict check(const Intent& intent, const SwarmState& state,
                            const SupervisorMemory& memory,
                            const SupervisionParams& params) override;

 private:
  std::shared_ptr<LlmClient> client_;
};

std::shared_ptr<SupervisorBackend> make_backend(const std::string& kind,
                                                const std::filesystem::path& replay_path = {});

}  // namespace edgeform
