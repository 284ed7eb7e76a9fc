#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "edgeform/scenario.hpp"

namespace edgeform {

enum class RunPhase { idle, running, paused, finished };
std::string_view to_string(RunPhase phase);

struct StationOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  ///< 0 picks a free port
  double time_scale = 1.0;  ///< clamped to [0.1, 100]
  double snapshot_hz = 20.0;
  bool start_paused = false;
  std::filesystem::path out_dir;  ///< logs are written here on finish when set
};

inline constexpr double kMinTimeScale = 0.1;
inline constexpr double kMaxTimeScale = 100.0;

/// WebSocket front end over a paced Mission. One pacing thread owns the
/// mission; the network thread talks to it through an inbox and a snapshot
/// mailbox only.
///
/// Wire messages are JSON text frames {type, seq, payload}. Clients send
/// `command` ({text} or {intent}) and `control` ({action, value}); the server
/// sends `snapshot`, `command_ack`, `event`, `control` (acks) and `error`.
class ControlStation {
 public:
  ControlStation(ScenarioConfig config, std::shared_ptr<SupervisorBackend> backend,
                 StationOptions options = {});
  ~ControlStation();
  ControlStation(const ControlStation&) = delete;
  ControlStation& operator=(const ControlStation&) = delete;

  /// Binds, starts the network and pacing threads and returns the bound port.
  /// Throws StationError when the address cannot be bound.
  unsigned short start();
  /// Blocks until the mission is finished (ran out or stopped).
  void wait();
  bool wait_for(std::chrono::milliseconds timeout);
  /// Stops the network side; idempotent.
  void shutdown();

  RunPhase phase() const;
  int client_count() const;

  /// Log text of the mission; stable once the phase is finished.
  std::string trajectory_csv() const;
  std::string supervision_csv() const;
  std::string events_jsonl() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Minimal blocking client for scripts and tests.
class StationClient {
 public:
  StationClient();
  ~StationClient();
  StationClient(const StationClient&) = delete;
  StationClient& operator=(const StationClient&) = delete;

  void connect(const std::string& host, unsigned short port);
  void send(const std::string& type, const nlohmann::json& payload);
  void send_raw(const std::string& text);
  /// Next message; std::nullopt on timeout or closed connection.
  std::optional<nlohmann::json> receive(std::chrono::milliseconds timeout);
  /// Reads until a message satisfies `pred` (returned) or the timeout elapses.
  std::optional<nlohmann::json> receive_until(
      const std::function<bool(const nlohmann::json&)>& pred, std::chrono::milliseconds timeout);
  void close();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace edgeform
