#include "edgeform/station.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

namespace edgeform {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(RunPhase phase) {
  switch (phase) {
    case RunPhase::idle: return "idle";
    case RunPhase::running: return "running";
    case RunPhase::paused: return "paused";
    case RunPhase::finished: return "finished";
  }
  return "idle";
}

namespace {

constexpr std::size_t kSnapshotBacklog = 64;
constexpr std::size_t kMaxBacklog = 256;

class Session;

struct Hub {
  virtual ~Hub() = default;
  virtual void attach(const std::shared_ptr<Session>& s) = 0;
  virtual void detach(long id) = 0;
  virtual void on_message(long id, std::string text) = 0;
};

class Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Hub& hub, long id) : ws_(std::move(socket)), hub_(hub), id_(id) {}

  long id() const { return id_; }
  std::size_t backlog() const { return queue_.size(); }

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(beast::bind_front_handler(&Session::on_accept, shared_from_this()));
  }

  void send(const std::string& type, const json& payload) {
    if (closed_) return;
    if (queue_.size() >= kMaxBacklog) {
      close();
      return;
    }
    json msg{{"type", type}, {"seq", ++seq_}, {"payload", payload}};
    queue_.push_back(msg.dump());
    if (queue_.size() == 1) write_next();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    hub_.attach(shared_from_this());
    read_next();
  }

  void read_next() {
    ws_.async_read(buffer_, beast::bind_front_handler(&Session::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      hub_.detach(id_);
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    hub_.on_message(id_, std::move(text));
    read_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&Session::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      queue_.clear();
      hub_.detach(id_);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  Hub& hub_;
  long id_;
  long seq_ = 0;
  bool closed_ = false;
};

struct Inbound {
  long session = 0;
  std::string text;
};

}  // namespace

struct ControlStation::Impl : Hub {
  ScenarioConfig config;
  std::shared_ptr<SupervisorBackend> backend;
  StationOptions options;

  // Owned by the pacing thread; accessors lock mission_mutex.
  std::unique_ptr<Mission> mission;
  mutable std::mutex mission_mutex;
  std::map<long, long> ticket_owner;
  long routed_seq = 0;
  double time_scale = 1.0;

  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  net::steady_timer broadcast_timer{ioc};
  std::map<long, std::shared_ptr<Session>> sessions;  // network thread only
  long next_session = 1;
  std::atomic<int> clients{0};
  json last_snapshot;  // network thread only

  std::mutex inbox_mutex;
  std::condition_variable inbox_cv;
  std::deque<Inbound> inbox;

  std::mutex mailbox_mutex;
  json mailbox_snapshot;
  json mailbox_events = json::array();
  bool mailbox_fresh = false;

  std::atomic<RunPhase> phase{RunPhase::idle};
  std::mutex phase_mutex;
  std::condition_variable phase_cv;
  std::atomic<bool> stopping{false};

  std::thread net_thread;
  std::thread pace_thread;
  bool started = false;
  bool network_down = false;

  // --- network thread -------------------------------------------------------

  void attach(const std::shared_ptr<Session>& s) override {
    sessions[s->id()] = s;
    clients = static_cast<int>(sessions.size());
    if (!last_snapshot.is_null()) {
      json first = last_snapshot;
      first["events_since_last"] = json::array();
      s->send("snapshot", first);
    }
    s->send("event", json{{"phase", std::string(to_string(phase.load()))}, {"session", s->id()}});
  }

  void detach(long id) override {
    sessions.erase(id);
    clients = static_cast<int>(sessions.size());
  }

  void on_message(long id, std::string text) override {
    {
      std::lock_guard lock(inbox_mutex);
      inbox.push_back({id, std::move(text)});
    }
    inbox_cv.notify_one();
  }

  void accept_next() {
    acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<Session>(std::move(socket), *this, next_session++)->run();
      accept_next();
    });
  }

  void schedule_broadcast() {
    const auto period = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(1.0 / std::max(1e-3, options.snapshot_hz)));
    broadcast_timer.expires_after(period);
    broadcast_timer.async_wait([this](beast::error_code ec) {
      if (ec) return;
      broadcast_snapshot();
      schedule_broadcast();
    });
  }

  void broadcast_snapshot() {
    json payload;
    {
      std::lock_guard lock(mailbox_mutex);
      if (!mailbox_fresh) return;
      payload = mailbox_snapshot;
      payload["events_since_last"] = std::move(mailbox_events);
      mailbox_events = json::array();
      mailbox_fresh = false;
    }
    last_snapshot = payload;
    for (auto& [id, s] : sessions)
      if (s->backlog() < kSnapshotBacklog) s->send("snapshot", payload);
  }

  // --- pacing thread ----------------------------------------------------------

  void reply(long session, std::string type, json payload) {
    net::post(ioc, [this, session, type = std::move(type), payload = std::move(payload)] {
      auto it = sessions.find(session);
      if (it != sessions.end()) it->second->send(type, payload);
    });
  }

  void broadcast(std::string type, json payload) {
    net::post(ioc, [this, type = std::move(type), payload = std::move(payload)] {
      for (auto& [id, s] : sessions) s->send(type, payload);
    });
  }

  void set_phase(RunPhase p) {
    {
      std::lock_guard lock(phase_mutex);
      phase = p;
    }
    phase_cv.notify_all();
    broadcast("event", json{{"phase", std::string(to_string(p))}});
  }

  void publish(bool force) {
    static thread_local Clock::time_point last{};
    const auto now = Clock::now();
    const double min_gap = 0.5 / std::max(1e-3, options.snapshot_hz);
    json events = json::array();
    for (const EventRecord& r : mission->events().since(routed_seq)) events.push_back(r.to_json());
    route_events();
    if (!force && events.empty() && std::chrono::duration<double>(now - last).count() < min_gap)
      return;
    last = now;
    json snap = mission->snapshot(mission->events().next_seq());
    snap["phase"] = std::string(to_string(phase.load()));
    snap["time_scale"] = time_scale;
    std::lock_guard lock(mailbox_mutex);
    mailbox_snapshot = std::move(snap);
    for (json& e : events) mailbox_events.push_back(std::move(e));
    mailbox_fresh = true;
  }

  void route_events() {
    for (const EventRecord& r : mission->events().since(routed_seq)) {
      if (r.kind != "command_applied" && r.kind != "command_rejected") continue;
      const long ticket = r.payload.value("ticket", -1L);
      auto it = ticket_owner.find(ticket);
      if (it == ticket_owner.end()) continue;
      json ack{{"ticket", ticket}, {"applied_at", r.t}};
      if (r.kind == "command_applied") {
        ack["status"] = "applied";
        ack["intent"] = r.payload.at("intent");
      } else {
        ack["status"] = "rejected";
        ack["error"] = r.payload.at("error");
      }
      reply(it->second, "command_ack", ack);
      ticket_owner.erase(it);
    }
    routed_seq = mission->events().next_seq();
  }

  void finish() {
    if (phase == RunPhase::finished) return;
    if (!options.out_dir.empty()) mission->write_logs(options.out_dir);
    {
      std::lock_guard lock(phase_mutex);
      phase = RunPhase::finished;
    }
    publish(true);
    phase_cv.notify_all();
    broadcast("event", json{{"phase", "finished"}, {"t", mission->time()}});
  }

  void handle_command(long sid, const json& payload) {
    const RunPhase p = phase;
    if (p != RunPhase::running && p != RunPhase::paused) {
      reply(sid, "error", json{{"error", fmt::format("commands are not accepted while {}", to_string(p))}});
      return;
    }
    long ticket = -1;
    json ack{{"status", "queued"}};
    if (payload.contains("intent")) {
      Intent intent;
      try {
        intent = intent_from_json(payload.at("intent"));
      } catch (const Error& e) {
        reply(sid, "command_ack", json{{"status", "rejected"}, {"error", e.what()}});
        return;
      }
      ticket = mission->submit(intent);
    } else if (payload.contains("text") && payload["text"].is_string() &&
               !payload["text"].get<std::string>().empty()) {
      ack["text"] = payload["text"];
      ticket = mission->submit(payload["text"].get<std::string>());
    } else {
      reply(sid, "command_ack", json{{"status", "rejected"}, {"error", "command needs a non-empty text or an intent"}});
      return;
    }
    ticket_owner[ticket] = sid;
    ack["ticket"] = ticket;
    ack["applied_at"] = mission->next_check_time();
    reply(sid, "command_ack", ack);
  }

  void handle_control(long sid, const json& payload) {
    const std::string action = payload.value("action", "");
    const RunPhase p = phase;
    auto fail = [&](const std::string& why) {
      reply(sid, "error", json{{"action", action}, {"error", why}, {"phase", std::string(to_string(p))}});
    };
    auto ok = [&](json extra = json::object()) {
      extra["action"] = action;
      extra["ok"] = true;
      extra["phase"] = std::string(to_string(phase.load()));
      extra["t"] = mission->time();
      extra["time_scale"] = time_scale;
      reply(sid, "control", extra);
    };
    if (action == "pause") {
      if (p != RunPhase::running) return fail("pause requires a running mission");
      set_phase(RunPhase::paused);
      ok();
    } else if (action == "resume") {
      if (p != RunPhase::paused) return fail("resume requires a paused mission");
      set_phase(RunPhase::running);
      ok();
    } else if (action == "step") {
      if (p != RunPhase::paused) return fail("step requires a paused mission");
      {
        std::lock_guard lock(mission_mutex);
        mission->advance_check();
      }
      publish(true);
      if (mission->finished()) finish();
      ok();
    } else if (action == "set_time_scale") {
      if (p != RunPhase::running && p != RunPhase::paused)
        return fail("time scale can only change while running or paused");
      if (!payload.contains("value") || !payload["value"].is_number())
        return fail("set_time_scale needs a numeric value");
      time_scale = std::clamp(payload["value"].get<double>(), kMinTimeScale, kMaxTimeScale);
      ok();
    } else if (action == "stop") {
      if (p != RunPhase::running && p != RunPhase::paused) return fail("stop requires an active mission");
      finish();
      ok();
    } else {
      fail(fmt::format("unknown action '{}'", action));
    }
  }

  void handle(const Inbound& in) {
    json msg;
    try {
      msg = json::parse(in.text);
    } catch (const json::exception& e) {
      reply(in.session, "error", json{{"error", fmt::format("malformed message: {}", e.what())}});
      return;
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      reply(in.session, "error", json{{"error", "message needs a string type"}});
      return;
    }
    const std::string type = msg["type"];
    const json payload = msg.value("payload", json::object());
    if (type == "command") handle_command(in.session, payload);
    else if (type == "control") handle_control(in.session, payload);
    else reply(in.session, "error", json{{"error", fmt::format("unknown message type '{}'", type)}});
  }

  void pace_loop() {
    auto last_wall = Clock::now();
    double budget = 0.0;
    const double dt = config.dt;
    publish(true);
    while (phase != RunPhase::finished) {
      std::deque<Inbound> batch;
      {
        std::unique_lock lock(inbox_mutex);
        inbox_cv.wait_for(lock, std::chrono::milliseconds(1),
                          [this] { return !inbox.empty() || stopping.load(); });
        batch.swap(inbox);
      }
      for (const Inbound& in : batch) {
        handle(in);
        if (phase == RunPhase::finished) break;
      }
      if (phase == RunPhase::finished) break;
      if (stopping) {
        finish();
        break;
      }

      const auto now = Clock::now();
      if (phase == RunPhase::running) {
        budget += std::chrono::duration<double>(now - last_wall).count() * time_scale;
        budget = std::min(budget, 0.25 * time_scale + dt);
        long ticks = static_cast<long>(budget / dt);
        bool advanced = false;
        {
          std::lock_guard lock(mission_mutex);
          for (; ticks > 0 && !mission->finished(); --ticks) {
            mission->tick();
            budget -= dt;
            advanced = true;
          }
        }
        if (advanced) publish(false);
        if (mission->finished()) finish();
      }
      last_wall = now;
    }
  }

  void start_network() {
    beast::error_code ec;
    const auto address = net::ip::make_address(options.address, ec);
    if (ec) throw StationError(fmt::format("invalid bind address '{}'", options.address));
    const tcp::endpoint endpoint(address, options.port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec)
      throw StationError(fmt::format("cannot bind {}:{}: {}", options.address, options.port, ec.message()));
    accept_next();
    schedule_broadcast();
  }

  void stop_network() {
    if (network_down || !started) return;
    network_down = true;
    // Give queued acks and the final snapshot a moment to drain.
    const auto deadline = Clock::now() + std::chrono::milliseconds(300);
    while (Clock::now() < deadline) {
      std::promise<std::size_t> pending;
      auto fut = pending.get_future();
      net::post(ioc, [this, &pending] {
        broadcast_snapshot();
        std::size_t n = 0;
        for (auto& [id, s] : sessions) n += s->backlog();
        pending.set_value(n);
      });
      if (fut.wait_for(std::chrono::milliseconds(100)) != std::future_status::ready || fut.get() == 0) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    net::post(ioc, [this] {
      beast::error_code ec;
      acceptor.close(ec);
      broadcast_timer.cancel();
      for (auto& [id, s] : sessions) s->close();
    });
    ioc.stop();
    if (net_thread.joinable()) net_thread.join();
    sessions.clear();
    clients = 0;
  }
};

ControlStation::ControlStation(ScenarioConfig config, std::shared_ptr<SupervisorBackend> backend,
                               StationOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->backend = std::move(backend);
  impl_->options = std::move(options);
  impl_->time_scale = std::clamp(impl_->options.time_scale, kMinTimeScale, kMaxTimeScale);
  impl_->mission = std::make_unique<Mission>(impl_->config, impl_->backend);
}

ControlStation::~ControlStation() {
  try {
    shutdown();
  } catch (...) {
  }
}

unsigned short ControlStation::start() {
  if (impl_->started) throw StationError("station already started");
  impl_->start_network();
  impl_->started = true;
  const unsigned short port = impl_->acceptor.local_endpoint().port();
  impl_->phase = impl_->options.start_paused ? RunPhase::paused : RunPhase::running;
  impl_->net_thread = std::thread([this] {
    auto guard = net::make_work_guard(impl_->ioc);
    impl_->ioc.run();
  });
  impl_->pace_thread = std::thread([this] { impl_->pace_loop(); });
  return port;
}

void ControlStation::wait() {
  std::unique_lock lock(impl_->phase_mutex);
  impl_->phase_cv.wait(lock, [this] { return impl_->phase == RunPhase::finished; });
}

bool ControlStation::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->phase_mutex);
  return impl_->phase_cv.wait_for(lock, timeout, [this] { return impl_->phase == RunPhase::finished; });
}

void ControlStation::shutdown() {
  if (!impl_->started) return;
  impl_->stopping = true;
  impl_->inbox_cv.notify_all();
  if (impl_->pace_thread.joinable()) impl_->pace_thread.join();
  impl_->stop_network();
}

RunPhase ControlStation::phase() const { return impl_->phase; }
int ControlStation::client_count() const { return impl_->clients; }

std::string ControlStation::trajectory_csv() const {
  std::lock_guard lock(impl_->mission_mutex);
  return impl_->mission->trajectory_csv();
}

std::string ControlStation::supervision_csv() const {
  std::lock_guard lock(impl_->mission_mutex);
  return impl_->mission->supervision_csv();
}

std::string ControlStation::events_jsonl() const {
  std::lock_guard lock(impl_->mission_mutex);
  return impl_->mission->events().to_jsonl();
}

// ---------------------------------------------------------------------------
// Client

struct StationClient::Impl {
  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws{ioc};
  beast::flat_buffer buffer;
  std::deque<std::string> outbox;  // io thread only
  std::thread thread;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> guard;
  long seq = 0;

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<json> inbox;
  bool closed = false;

  void read_next() {
    ws.async_read(buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        std::lock_guard lock(mutex);
        closed = true;
        cv.notify_all();
        return;
      }
      json msg;
      try {
        msg = json::parse(beast::buffers_to_string(buffer.data()));
      } catch (const json::exception&) {
        msg = json{{"type", "unparsable"}};
      }
      buffer.consume(buffer.size());
      {
        std::lock_guard lock(mutex);
        inbox.push_back(std::move(msg));
      }
      cv.notify_all();
      read_next();
    });
  }

  void write_next() {
    ws.text(true);
    ws.async_write(net::buffer(outbox.front()), [this](beast::error_code ec, std::size_t) {
      if (ec) {
        outbox.clear();
        return;
      }
      outbox.pop_front();
      if (!outbox.empty()) write_next();
    });
  }
};

StationClient::StationClient() : impl_(std::make_unique<Impl>()) {}

StationClient::~StationClient() {
  try {
    close();
  } catch (...) {
  }
}

void StationClient::connect(const std::string& host, unsigned short port) {
  tcp::resolver resolver(impl_->ioc);
  auto results = resolver.resolve(host, std::to_string(port));
  beast::get_lowest_layer(impl_->ws).connect(results);
  impl_->ws.handshake(host, "/");
  impl_->guard.emplace(net::make_work_guard(impl_->ioc));
  impl_->read_next();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void StationClient::send_raw(const std::string& text) {
  net::post(impl_->ioc, [this, text] {
    impl_->outbox.push_back(text);
    if (impl_->outbox.size() == 1) impl_->write_next();
  });
}

void StationClient::send(const std::string& type, const json& payload) {
  send_raw(json{{"type", type}, {"seq", ++impl_->seq}, {"payload", payload}}.dump());
}

std::optional<json> StationClient::receive(std::chrono::milliseconds timeout) {
  std::unique_lock lock(impl_->mutex);
  impl_->cv.wait_for(lock, timeout, [this] { return !impl_->inbox.empty() || impl_->closed; });
  if (impl_->inbox.empty()) return std::nullopt;
  json msg = std::move(impl_->inbox.front());
  impl_->inbox.pop_front();
  return msg;
}

std::optional<json> StationClient::receive_until(const std::function<bool(const json&)>& pred,
                                                 std::chrono::milliseconds timeout) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) return std::nullopt;
    auto msg = receive(left);
    if (!msg) return std::nullopt;
    if (pred(*msg)) return msg;
  }
}

void StationClient::close() {
  if (!impl_->thread.joinable()) return;
  net::post(impl_->ioc, [this] {
    impl_->ws.async_close(websocket::close_code::normal, [](beast::error_code) {});
  });
  impl_->guard.reset();
  {
    // The read loop ends once the close handshake completes or the peer is gone.
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, std::chrono::seconds(2), [this] { return impl_->closed; });
  }
  impl_->ioc.stop();
  impl_->thread.join();
}

}  // namespace edgeform
