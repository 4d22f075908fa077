#pragma once

// HTTP binding of GameService.
//
//   POST /rooms                    config JSON -> {"room": id}
//   GET  /rooms/{id}               room snapshot
//   POST /rooms/{id}/messages      client message -> array of replies
//   GET  /rooms/{id}/events        ?player=&since=&wait_ms= long poll
//   GET  /rooms/{id}/metrics       MetricsReport JSON
//   GET  /rooms/{id}/log           JSON-lines round log

#include <algorithm>
#include <atomic>
#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "seesaw/errors.hpp"
#include "seesaw/service.hpp"

namespace seesaw {

class GameServer {
 public:
  explicit GameServer(GameService& service, std::chrono::milliseconds tick_period = std::chrono::milliseconds(20))
      : service_(service), tick_period_(tick_period) {
    routes();
  }

  ~GameServer() { stop(); }

  GameServer(const GameServer&) = delete;
  GameServer& operator=(const GameServer&) = delete;

  /// Binds and serves until stop(). Blocks.
  bool listen(const std::string& host, int port) {
    start_ticker();
    return http_.listen(host, port);
  }

  /// Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host = "127.0.0.1") {
    const int port = http_.bind_to_any_port(host);
    if (port <= 0) throw ResourceError("cannot bind " + host);
    start_ticker();
    listener_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
    return port;
  }

  void stop() {
    running_ = false;
    http_.stop();
    if (listener_.joinable()) listener_.join();
    if (ticker_.joinable()) ticker_.join();
  }

 private:
  static void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  template <typename Fn>
  static void guarded(httplib::Response& res, Fn&& fn) {
    try {
      fn();
    } catch (const RoomNotFound& e) {
      send_json(res, {{"type", "error"}, {"code", "not_found"}, {"message", e.what()}}, 404);
    } catch (const ProtocolError& e) {
      send_json(res, {{"type", "error"}, {"code", "protocol"}, {"message", e.what()}}, 400);
    } catch (const nlohmann::json::exception& e) {
      send_json(res, {{"type", "error"}, {"code", "protocol"}, {"message", e.what()}}, 400);
    } catch (const InsufficientDataError& e) {
      send_json(res, {{"type", "error"}, {"code", "insufficient_data"}, {"message", e.what()}}, 409);
    } catch (const std::exception& e) {
      send_json(res, {{"type", "error"}, {"code", "internal"}, {"message", e.what()}}, 500);
    }
  }

  void routes() {
    http_.Post("/rooms", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
        send_json(res, {{"room", service_.create_room(body)}}, 201);
      });
    });
    http_.Get(R"(/rooms/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, service_.room_state(req.matches[1])); });
    });
    http_.Post(R"(/rooms/([^/]+)/messages)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto body = nlohmann::json::parse(req.body);
        if (body.is_object() && !body.contains("room")) body["room"] = std::string(req.matches[1]);
        if (!body.is_object() || body.value("room", "") != std::string(req.matches[1])) {
          throw ProtocolError("room in path and body differ");
        }
        send_json(res, service_.post_message(body));
      });
    });
    http_.Get(R"(/rooms/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto player = req.get_param_value("player");
        const auto since = req.has_param("since") ? std::stoull(req.get_param_value("since")) : 0ULL;
        const auto wait = req.has_param("wait_ms") ? std::stoll(req.get_param_value("wait_ms")) : 0LL;
        send_json(res, service_.poll(req.matches[1], player, since,
                                     std::chrono::milliseconds(std::clamp<long long>(wait, 0, 30'000))));
      });
    });
    http_.Get(R"(/rooms/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, nlohmann::json::parse(to_json(service_.room_metrics(req.matches[1])).dump())); });
    });
    http_.Get(R"(/rooms/([^/]+)/log)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { res.set_content(service_.room_log(req.matches[1]), "application/x-ndjson"); });
    });
  }

  void start_ticker() {
    if (ticker_.joinable()) return;
    running_ = true;
    ticker_ = std::thread([this] {
      while (running_) {
        service_.tick_all();
        std::this_thread::sleep_for(tick_period_);
      }
    });
  }

  GameService& service_;
  std::chrono::milliseconds tick_period_;
  httplib::Server http_;
  std::thread listener_;
  std::thread ticker_;
  std::atomic<bool> running_{false};
};

}  // namespace seesaw
