#pragma once

// Live game room: a sequential state machine fed with client messages and
// clock ticks. Transport-agnostic; see service.hpp for the threaded registry
// and server.hpp for the HTTP binding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#if defined(__unix__) || defined(__APPLE__)
#include <unistd.h>
#endif

#include "seesaw/errors.hpp"
#include "seesaw/game.hpp"

namespace seesaw {

/// Milliseconds on a monotonic clock chosen by the host.
using Millis = std::int64_t;

enum class Phase { lobby, counting_down, settling, finished };
enum class Visibility { own_score, full };
enum class PlayerKind { human, bot };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::lobby: return "lobby";
    case Phase::counting_down: return "counting_down";
    case Phase::settling: return "settling";
    case Phase::finished: return "finished";
  }
  return "?";
}

struct RoomConfig {
  int rounds = 100;
  PayoffMode payoff_mode = PayoffMode::minority_point;
  double skip_prob = 0.0;  // bots only
  std::uint64_t seed = 0;
  double countdown_seconds = 5.0;
  Visibility visibility = Visibility::own_score;
  bool hot_join = false;
  int bots = 0;
  BotKind bot_kind = BotKind::demand_efficient;
  int max_players = 64;

  void validate() const {
    if (rounds < 1) throw ParameterError("rounds must be >= 1");
    if (!(skip_prob >= 0.0 && skip_prob <= 1.0)) throw ParameterError("skip_prob must lie in [0, 1]");
    if (!(countdown_seconds > 0.0)) throw ParameterError("countdown_seconds must be > 0");
    if (bots < 0 || bots > max_players) throw ParameterError("bots must lie in [0, max_players]");
  }

  /// Offline configuration that replays this room when it holds bots only.
  GameConfig game_config() const { return {bots, payoff_mode, skip_prob, rounds, seed}; }
};

/// Applies the fields present in `j` on top of `base`.
inline RoomConfig room_config_from_json(const nlohmann::json& j, RoomConfig base = {}) {
  if (!j.is_object()) throw ProtocolError("config must be a JSON object");
  try {
    if (j.contains("rounds")) base.rounds = j.at("rounds").get<int>();
    if (j.contains("payoff")) base.payoff_mode = payoff_mode_from_string(j.at("payoff").get<std::string>());
    if (j.contains("skip_prob")) base.skip_prob = j.at("skip_prob").get<double>();
    if (j.contains("seed")) base.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("countdown_seconds")) base.countdown_seconds = j.at("countdown_seconds").get<double>();
    if (j.contains("visibility")) {
      const auto v = j.at("visibility").get<std::string>();
      if (v == "own_score") {
        base.visibility = Visibility::own_score;
      } else if (v == "full") {
        base.visibility = Visibility::full;
      } else {
        throw ProtocolError("unknown visibility '" + v + "'");
      }
    }
    if (j.contains("hot_join")) base.hot_join = j.at("hot_join").get<bool>();
    if (j.contains("bots")) base.bots = j.at("bots").get<int>();
    if (j.contains("bot_kind")) base.bot_kind = bot_kind_from_string(j.at("bot_kind").get<std::string>());
    if (j.contains("max_players")) base.max_players = j.at("max_players").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("bad config: ") + e.what());
  } catch (const ParameterError& e) {
    throw ProtocolError(std::string("bad config: ") + e.what());
  }
  try {
    base.validate();
  } catch (const ParameterError& e) {
    throw ProtocolError(std::string("bad config: ") + e.what());
  }
  return base;
}

inline nlohmann::ordered_json to_json(const RoomConfig& c) {
  nlohmann::ordered_json j;
  j["rounds"] = c.rounds;
  j["payoff"] = to_string(c.payoff_mode);
  j["skip_prob"] = c.skip_prob;
  j["seed"] = c.seed;
  j["countdown_seconds"] = c.countdown_seconds;
  j["visibility"] = c.visibility == Visibility::full ? "full" : "own_score";
  j["hot_join"] = c.hot_join;
  j["bots"] = c.bots;
  j["bot_kind"] = to_string(c.bot_kind);
  j["max_players"] = c.max_players;
  return j;
}

struct Player {
  std::string id;
  std::string display_name;
  PlayerKind kind = PlayerKind::human;
  double score = 0.0;
  bool left = false;
};

struct ClientMessage {
  enum class Type { join, leave, choose, start, config_update };
  Type type = Type::join;
  std::string room;
  std::string player;
  std::optional<int> value;
  std::string display_name;
  nlohmann::json config;
};

/// Validates the wire form {type, room, player, value?, name?, config?}.
inline ClientMessage parse_client_message(const nlohmann::json& j) {
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  ClientMessage m;
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "join") {
      m.type = ClientMessage::Type::join;
    } else if (type == "leave") {
      m.type = ClientMessage::Type::leave;
    } else if (type == "choose") {
      m.type = ClientMessage::Type::choose;
    } else if (type == "start") {
      m.type = ClientMessage::Type::start;
    } else if (type == "config" || type == "config-update" || type == "config_update") {
      m.type = ClientMessage::Type::config_update;
    } else {
      throw ProtocolError("unknown message type '" + type + "'");
    }
    m.room = j.at("room").get<std::string>();
    m.player = j.at("player").get<std::string>();
    if (m.player.empty()) throw ProtocolError("empty player id");
    if (j.contains("value") && !j.at("value").is_null()) m.value = j.at("value").get<int>();
    if (j.contains("name")) m.display_name = j.at("name").get<std::string>();
    if (j.contains("config")) m.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (m.type == ClientMessage::Type::choose && (!m.value || (*m.value != 1 && *m.value != -1))) {
    throw ProtocolError("choose requires value +1 or -1");
  }
  if (m.type == ClientMessage::Type::config_update && !m.config.is_object()) {
    throw ProtocolError("config-update requires a config object");
  }
  return m;
}

/// A message produced by the room. An empty recipient means every human.
struct ServerMessage {
  std::string recipient;
  nlohmann::ordered_json body;
};

/// Destination for settled rounds.
class RoundSink {
 public:
  virtual ~RoundSink() = default;
  /// Must not return before the record is durable.
  virtual void append(const RoundRecord& record) = 0;
};

class MemoryRoundSink : public RoundSink {
 public:
  void append(const RoundRecord& record) override { text_ += to_json_line(record); }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

/// Append-only JSON-lines file, flushed and synced per record.
class FileRoundSink : public RoundSink {
 public:
  explicit FileRoundSink(const std::string& path) : path_(path), file_(std::fopen(path.c_str(), "ab")) {
    if (!file_) throw ResourceError("cannot open round log '" + path + "'");
  }
  ~FileRoundSink() override {
    if (file_) std::fclose(file_);
  }
  FileRoundSink(const FileRoundSink&) = delete;
  FileRoundSink& operator=(const FileRoundSink&) = delete;

  void append(const RoundRecord& record) override {
    const auto line = to_json_line(record);
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
      throw ResourceError("write to round log '" + path_ + "' failed");
    }
#if defined(__unix__) || defined(__APPLE__)
    ::fsync(fileno(file_));
#endif
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::FILE* file_;
};

class Room {
 public:
  Room(std::string id, RoomConfig config, std::shared_ptr<RoundSink> sink = std::make_shared<MemoryRoundSink>())
      : id_(std::move(id)), config_(config), sink_(std::move(sink)), rng_(config.seed) {
    config_.validate();
    add_bots();
  }

  const std::string& id() const { return id_; }
  const RoomConfig& config() const { return config_; }
  Phase phase() const { return phase_; }
  int round() const { return round_; }
  std::optional<Millis> deadline() const { return deadline_; }
  const std::vector<Player>& roster() const { return roster_; }
  const std::vector<RoundRecord>& records() const { return records_; }
  const std::map<std::string, int>& pending_choices() const { return pending_; }
  int prev_excess() const { return prev_excess_; }

  std::vector<ServerMessage> handle(const ClientMessage& msg, Millis now) {
    if (msg.room != id_) return {error_to(msg.player, "not_found", "message addressed to another room")};
    switch (msg.type) {
      case ClientMessage::Type::join: return on_join(msg);
      case ClientMessage::Type::leave: return on_leave(msg);
      case ClientMessage::Type::choose: return on_choose(msg, now);
      case ClientMessage::Type::start: return on_start(msg, now);
      case ClientMessage::Type::config_update: return on_config(msg);
    }
    return {};
  }

  /// Settles the round once its deadline has passed. A tick earlier than the
  /// previous one is ignored.
  std::vector<ServerMessage> tick(Millis now) {
    if (last_tick_ && now < *last_tick_) return {};
    last_tick_ = now;
    if (phase_ != Phase::counting_down || !deadline_ || now < *deadline_) return {};

    phase_ = Phase::settling;
    std::vector<int> choices(roster_.size(), 0);
    for (std::size_t i = 0; i < roster_.size(); ++i) {
      auto it = pending_.find(roster_[i].id);
      if (it != pending_.end()) choices[i] = it->second;
    }
    auto record = settle_round(choices, prev_excess_, config_.payoff_mode, round_);
    sink_->append(record);
    for (std::size_t i = 0; i < roster_.size(); ++i) roster_[i].score += record.points_delta[i];
    prev_excess_ = excess_demand(choices);
    pending_.clear();
    deadline_.reset();
    records_.push_back(record);

    auto out = round_result_messages(records_.back());
    if (round_ < config_.rounds) {
      auto next = begin_round(now);
      out.insert(out.end(), next.begin(), next.end());
    } else {
      phase_ = Phase::finished;
      out.push_back(state_message(""));
    }
    return out;
  }

  nlohmann::ordered_json roster_json() const {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : roster_) {
      nlohmann::ordered_json e;
      e["id"] = p.id;
      e["name"] = p.display_name;
      e["kind"] = p.kind == PlayerKind::human ? "human" : "bot";
      if (config_.visibility == Visibility::full) e["score"] = p.score;
      e["left"] = p.left;
      arr.push_back(e);
    }
    return arr;
  }

 private:
  void add_bots() {
    for (int b = 1; b <= config_.bots; ++b) {
      const auto id = "bot-" + std::to_string(b);
      roster_.push_back({id, id, PlayerKind::bot, 0.0, false});
    }
  }

  Player* find(const std::string& id) {
    for (auto& p : roster_) {
      if (p.id == id) return &p;
    }
    return nullptr;
  }

  nlohmann::ordered_json base(const std::string& type) const {
    nlohmann::ordered_json j;
    j["type"] = type;
    j["room"] = id_;
    j["round"] = round_;
    j["phase"] = to_string(phase_);
    if (deadline_) {
      j["deadline"] = *deadline_;
    } else {
      j["deadline"] = nullptr;
    }
    return j;
  }

  ServerMessage state_message(const std::string& recipient) const {
    auto j = base("state");
    j["roster"] = roster_json();
    j["superplayer"] = -prev_excess_;
    if (!recipient.empty()) {
      auto it = pending_.find(recipient);
      if (it != pending_.end()) j["choice"] = it->second;
      for (const auto& p : roster_) {
        if (p.id == recipient) j["score"] = p.score;
      }
    }
    return {recipient, std::move(j)};
  }

  ServerMessage error_to(const std::string& recipient, const std::string& code, const std::string& text) const {
    auto j = base("error");
    j["code"] = code;
    j["message"] = text;
    return {recipient, std::move(j)};
  }

  std::vector<ServerMessage> on_join(const ClientMessage& msg) {
    if (Player* p = find(msg.player)) {
      if (p->kind == PlayerKind::bot) return {error_to(msg.player, "protocol", "id belongs to a bot")};
      p->left = false;
      return {state_message("")};
    }
    if (phase_ != Phase::lobby && !config_.hot_join) {
      return {error_to(msg.player, "joins_closed", "the game has already started")};
    }
    if (phase_ == Phase::finished) return {error_to(msg.player, "joins_closed", "the game is over")};
    if (static_cast<int>(roster_.size()) >= config_.max_players) {
      return {error_to(msg.player, "room_full", "room is full")};
    }
    roster_.push_back({msg.player, msg.display_name.empty() ? msg.player : msg.display_name, PlayerKind::human, 0.0,
                       false});
    return {state_message("")};
  }

  std::vector<ServerMessage> on_leave(const ClientMessage& msg) {
    Player* p = find(msg.player);
    if (!p || p->kind == PlayerKind::bot) return {error_to(msg.player, "unknown_player", "not in this room")};
    if (phase_ == Phase::lobby) {
      roster_.erase(std::remove_if(roster_.begin(), roster_.end(), [&](const Player& q) { return q.id == msg.player; }),
                    roster_.end());
    } else {
      // Keeps its seat so choice vectors stay aligned; recorded as 0 from now on.
      p->left = true;
      pending_.erase(msg.player);
    }
    return {state_message("")};
  }

  std::vector<ServerMessage> on_choose(const ClientMessage& msg, Millis now) {
    Player* p = find(msg.player);
    if (!p || p->left) return {error_to(msg.player, "unknown_player", "not in this room")};
    if (p->kind == PlayerKind::bot) return {error_to(msg.player, "protocol", "bots choose on their own")};
    if (phase_ == Phase::lobby) return {error_to(msg.player, "too_early", "no round is running")};
    if (phase_ != Phase::counting_down || !deadline_ || now >= *deadline_) {
      return {error_to(msg.player, "too_late", "the countdown has run out")};
    }
    pending_[msg.player] = *msg.value;
    return {state_message(msg.player)};
  }

  std::vector<ServerMessage> on_start(const ClientMessage& msg, Millis now) {
    if (phase_ != Phase::lobby) return {error_to(msg.player, "protocol", "game already started")};
    // A room of bots only has nobody to join it, so any sender may start it.
    const bool bots_only = std::none_of(roster_.begin(), roster_.end(),
                                        [](const Player& q) { return q.kind == PlayerKind::human; });
    if (!bots_only && !find(msg.player)) return {error_to(msg.player, "unknown_player", "join before starting")};
    if (roster_.size() < 2) return {error_to(msg.player, "protocol", "need at least 2 players")};
    return begin_round(now);
  }

  std::vector<ServerMessage> on_config(const ClientMessage& msg) {
    if (phase_ != Phase::lobby) return {error_to(msg.player, "protocol", "config can change only in the lobby")};
    RoomConfig updated;
    try {
      updated = room_config_from_json(msg.config, config_);
    } catch (const ProtocolError& e) {
      return {error_to(msg.player, "protocol", e.what())};
    }
    const bool reseed = updated.seed != config_.seed;
    const int old_bots = config_.bots;
    config_ = updated;
    if (reseed) rng_.seed(config_.seed);
    if (config_.bots != old_bots) {
      roster_.erase(std::remove_if(roster_.begin(), roster_.end(),
                                   [](const Player& q) { return q.kind == PlayerKind::bot; }),
                    roster_.end());
      std::vector<Player> humans = std::move(roster_);
      roster_.clear();
      add_bots();
      roster_.insert(roster_.end(), humans.begin(), humans.end());
    }
    return {state_message("")};
  }

  /// Opens the next countdown. Bots commit at countdown start, in roster
  /// order, drawing from the room generator.
  std::vector<ServerMessage> begin_round(Millis now) {
    ++round_;
    phase_ = Phase::counting_down;
    pending_.clear();
    deadline_ = now + static_cast<Millis>(std::llround(config_.countdown_seconds * 1000.0));
    const int n = static_cast<int>(roster_.size());
    for (const auto& p : roster_) {
      if (p.kind != PlayerKind::bot || p.left) continue;
      const int c = bot_choice(config_.bot_kind, prev_excess_, n, config_.skip_prob, rng_);
      if (c != 0) pending_[p.id] = c;
    }
    auto j = base("round_start");
    j["superplayer"] = -prev_excess_;
    j["roster"] = roster_json();
    return {{"", std::move(j)}};
  }

  std::vector<ServerMessage> round_result_messages(const RoundRecord& rec) const {
    auto common = base("round_result");
    common["round"] = rec.round;
    common["outcome"] = rec.outcome;
    common["superplayer"] = rec.superplayer;
    common["next_superplayer"] = -prev_excess_;
    auto winners = nlohmann::ordered_json::array();
    for (int w : rec.winners) winners.push_back(roster_[static_cast<std::size_t>(w)].id);
    common["winners"] = winners;

    if (config_.visibility == Visibility::full) {
      auto scores = nlohmann::ordered_json::object();
      auto choices = nlohmann::ordered_json::object();
      for (std::size_t i = 0; i < roster_.size(); ++i) {
        scores[roster_[i].id] = roster_[i].score;
        choices[roster_[i].id] = rec.choices[i];
      }
      common["scores"] = scores;
      common["choices"] = choices;
      common["roster"] = roster_json();
      return {{"", std::move(common)}};
    }
    std::vector<ServerMessage> out;
    for (std::size_t i = 0; i < roster_.size(); ++i) {
      const auto& p = roster_[i];
      if (p.kind != PlayerKind::human) continue;
      auto j = common;
      j["scores"] = nlohmann::ordered_json::object({{p.id, p.score}});
      j["choice"] = rec.choices[i];
      j["points"] = rec.points_delta[i];
      out.push_back({p.id, std::move(j)});
    }
    return out;
  }

  std::string id_;
  RoomConfig config_;
  std::shared_ptr<RoundSink> sink_;
  GameRng rng_;
  Phase phase_ = Phase::lobby;
  int round_ = 0;
  int prev_excess_ = 0;
  std::optional<Millis> deadline_;
  std::optional<Millis> last_tick_;
  std::vector<Player> roster_;
  std::map<std::string, int> pending_;
  std::vector<RoundRecord> records_;
};

/// Metrics recomputed from a persisted round log.
inline MetricsReport replay_metrics(const std::string& log_path) {
  std::ifstream in(log_path);
  if (!in) throw ResourceError("cannot open round log '" + log_path + "'");
  const auto records = read_round_log(in);
  if (records.empty()) throw InsufficientDataError("replay_metrics: empty log");
  return metrics(records);
}

}  // namespace seesaw
