#pragma once

// Room registry shared by transport threads. Each room is serialised by its
// own mutex; rooms share nothing else.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seesaw/errors.hpp"
#include "seesaw/room.hpp"

namespace seesaw {

class RoomNotFound : public ProtocolError {
 public:
  explicit RoomNotFound(const std::string& id) : ProtocolError("room '" + id + "' not found") {}
};

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  /// Empty keeps round logs in memory only.
  std::string log_dir;
  /// Room defaults, overridden by each create-room request.
  RoomConfig room_defaults;
  bool allow_hot_join = false;
};

/// Reads a JSON config file; SEESAW_BIND ("host" or "host:port") and
/// SEESAW_LOG_DIR override the file.
inline ServiceConfig load_service_config(const std::string& path) {
  ServiceConfig cfg;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      if (j.contains("bind")) cfg.bind_address = j.at("bind").get<std::string>();
      if (j.contains("port")) cfg.port = j.at("port").get<int>();
      if (j.contains("log_dir")) cfg.log_dir = j.at("log_dir").get<std::string>();
      if (j.contains("allow_hot_join")) cfg.allow_hot_join = j.at("allow_hot_join").get<bool>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), 1);
    }
    if (j.contains("room")) cfg.room_defaults = room_config_from_json(j.at("room"));
  }
  cfg.room_defaults.hot_join = cfg.room_defaults.hot_join || cfg.allow_hot_join;
  if (const char* bind = std::getenv("SEESAW_BIND")) {
    std::string b = bind;
    const auto colon = b.rfind(':');
    if (colon != std::string::npos) {
      cfg.port = std::stoi(b.substr(colon + 1));
      b = b.substr(0, colon);
    }
    if (!b.empty()) cfg.bind_address = b;
  }
  if (const char* dir = std::getenv("SEESAW_LOG_DIR")) cfg.log_dir = dir;
  return cfg;
}

class GameService {
 public:
  using Clock = std::chrono::steady_clock;

  explicit GameService(ServiceConfig config = {}) : config_(std::move(config)), epoch_(Clock::now()) {
    if (!config_.log_dir.empty()) std::filesystem::create_directories(config_.log_dir);
  }

  const ServiceConfig& config() const { return config_; }

  /// Milliseconds since the service started; the unit of every deadline.
  Millis now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch_).count();
  }

  std::string create_room(const nlohmann::json& config_json) {
    const auto cfg = room_config_from_json(config_json.is_null() ? nlohmann::json::object() : config_json,
                                           config_.room_defaults);
    std::lock_guard registry_lock(registry_mutex_);
    const std::string id = "room-" + std::to_string(++room_counter_);
    std::shared_ptr<RoundSink> sink;
    std::string log_path;
    if (config_.log_dir.empty()) {
      sink = std::make_shared<MemoryRoundSink>();
    } else {
      log_path = (std::filesystem::path(config_.log_dir) / (id + ".jsonl")).string();
      sink = std::make_shared<FileRoundSink>(log_path);
    }
    auto slot = std::make_shared<Slot>(Room(id, cfg, sink));
    slot->sink = sink;
    slot->log_path = log_path;
    rooms_.emplace(id, std::move(slot));
    return id;
  }

  /// Routes one wire message. Returns the messages addressed to its sender
  /// (including broadcasts); everything is also queued for pollers.
  nlohmann::json post_message(const nlohmann::json& wire, Millis now) {
    const auto msg = parse_client_message(wire);
    auto slot = find(msg.room);
    std::lock_guard lock(slot->mutex);
    auto out = slot->room.handle(msg, now);
    return publish(*slot, out, msg.player);
  }

  nlohmann::json post_message(const nlohmann::json& wire) { return post_message(wire, now()); }

  /// Advances every room's clock.
  void tick_all(Millis now) {
    std::vector<std::shared_ptr<Slot>> slots;
    {
      std::lock_guard registry_lock(registry_mutex_);
      for (auto& [id, slot] : rooms_) slots.push_back(slot);
    }
    for (auto& slot : slots) {
      std::lock_guard lock(slot->mutex);
      publish(*slot, slot->room.tick(now), "");
    }
  }

  void tick_all() { tick_all(now()); }

  /// Messages for `player` with sequence number > `since`, waiting up to
  /// `wait` for the first one. Returns {"seq": last, "messages": [...]}.
  nlohmann::json poll(const std::string& room_id, const std::string& player, std::uint64_t since,
                      std::chrono::milliseconds wait = std::chrono::milliseconds(0)) {
    auto slot = find(room_id);
    std::unique_lock lock(slot->mutex);
    auto pending = [&] { return slot->next_seq > since + 1; };
    if (!pending() && wait.count() > 0) slot->cv.wait_for(lock, wait, pending);
    nlohmann::json out;
    auto msgs = nlohmann::json::array();
    for (const auto& e : slot->outbox) {
      if (e.seq <= since) continue;
      if (!e.recipient.empty() && e.recipient != player) continue;
      msgs.push_back(e.body);
    }
    out["seq"] = slot->next_seq - 1;
    out["messages"] = std::move(msgs);
    return out;
  }

  MetricsReport room_metrics(const std::string& room_id) {
    auto slot = find(room_id);
    std::lock_guard lock(slot->mutex);
    const auto& records = slot->room.records();
    if (records.empty()) throw InsufficientDataError("room has no settled rounds");
    return metrics(records);
  }

  /// The persisted JSON-lines log of the room.
  std::string room_log(const std::string& room_id) {
    auto slot = find(room_id);
    std::lock_guard lock(slot->mutex);
    if (auto mem = std::dynamic_pointer_cast<MemoryRoundSink>(slot->sink)) return mem->text();
    std::ifstream in(slot->log_path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  nlohmann::json room_state(const std::string& room_id) {
    auto slot = find(room_id);
    std::lock_guard lock(slot->mutex);
    nlohmann::json j;
    j["room"] = room_id;
    j["phase"] = to_string(slot->room.phase());
    j["round"] = slot->room.round();
    j["roster"] = slot->room.roster_json();
    j["config"] = to_json(slot->room.config());
    return j;
  }

  std::vector<std::string> room_ids() {
    std::lock_guard registry_lock(registry_mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, slot] : rooms_) ids.push_back(id);
    return ids;
  }

 private:
  struct Envelope {
    std::uint64_t seq;
    std::string recipient;
    nlohmann::json body;
  };

  struct Slot {
    explicit Slot(Room r) : room(std::move(r)) {}
    std::mutex mutex;
    std::condition_variable cv;
    Room room;
    std::shared_ptr<RoundSink> sink;
    std::string log_path;
    std::deque<Envelope> outbox;
    std::uint64_t next_seq = 1;
  };

  static constexpr std::size_t kOutboxLimit = 10'000;

  std::shared_ptr<Slot> find(const std::string& id) {
    std::lock_guard registry_lock(registry_mutex_);
    auto it = rooms_.find(id);
    if (it == rooms_.end()) throw RoomNotFound(id);
    return it->second;
  }

  nlohmann::json publish(Slot& slot, const std::vector<ServerMessage>& msgs, const std::string& sender) {
    auto reply = nlohmann::json::array();
    for (const auto& m : msgs) {
      nlohmann::json body = nlohmann::json::parse(m.body.dump());
      slot.outbox.push_back({slot.next_seq++, m.recipient, body});
      if (m.recipient.empty() || m.recipient == sender) reply.push_back(std::move(body));
    }
    while (slot.outbox.size() > kOutboxLimit) slot.outbox.pop_front();
    if (!msgs.empty()) slot.cv.notify_all();
    return reply;
  }

  ServiceConfig config_;
  Clock::time_point epoch_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> rooms_;
  std::uint64_t room_counter_ = 0;
};

}  // namespace seesaw
