#pragma once

// Minority game against a superplayer who always bets against the previous
// round's excess demand. Pure settlement rules, bot policies, and the
// group-level metrics (outcome variance, choice/demand correlation, bubbles).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seesaw/errors.hpp"

namespace seesaw {

enum class PayoffMode {
  /// Minority side wins one point; nobody scores on a zero outcome.
  minority_point,
  /// Each player earns -c_i * outcome.
  return_proportional,
};

enum class BotKind { coin_flip, demand_efficient };

inline std::string to_string(PayoffMode m) {
  return m == PayoffMode::minority_point ? "minority" : "return";
}
inline PayoffMode payoff_mode_from_string(const std::string& s) {
  if (s == "minority" || s == "minority_point") return PayoffMode::minority_point;
  if (s == "return" || s == "return_proportional") return PayoffMode::return_proportional;
  throw ParameterError("unknown payoff mode '" + s + "'");
}
inline std::string to_string(BotKind k) { return k == BotKind::coin_flip ? "coin" : "efficient"; }
inline BotKind bot_kind_from_string(const std::string& s) {
  if (s == "coin" || s == "coin_flip") return BotKind::coin_flip;
  if (s == "efficient" || s == "demand_efficient") return BotKind::demand_efficient;
  throw ParameterError("unknown bot kind '" + s + "'");
}

struct GameConfig {
  int n_players = 11;
  PayoffMode payoff_mode = PayoffMode::minority_point;
  double skip_prob = 0.0;
  int rounds = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_players < 2) throw ParameterError("n_players must be >= 2");
    if (!(skip_prob >= 0.0 && skip_prob <= 1.0)) throw ParameterError("skip_prob must lie in [0, 1]");
    if (rounds < 1) throw ParameterError("rounds must be >= 1");
  }
};

struct RoundRecord {
  int round = 0;
  std::vector<int> choices;  // c_i in {-1, 0, +1}
  int prev_excess = 0;       // D_{t-1}, sum of the previous round's choices
  int superplayer = 0;       // C_t = -D_{t-1}
  int outcome = 0;           // sum of choices + C_t
  std::vector<int> winners;  // player indices, ascending
  std::vector<double> points_delta;

  bool operator==(const RoundRecord&) const = default;
};

inline int sign(int v) { return (v > 0) - (v < 0); }

inline RoundRecord settle_round(std::span<const int> choices, int prev_excess, PayoffMode mode, int round = 1) {
  RoundRecord rec;
  rec.round = round;
  rec.choices.assign(choices.begin(), choices.end());
  rec.prev_excess = prev_excess;
  rec.superplayer = -prev_excess;
  int sum = 0;
  for (int c : choices) {
    if (c < -1 || c > 1) throw DomainError("settle_round: choice " + std::to_string(c) + " not in {-1, 0, +1}");
    sum += c;
  }
  rec.outcome = sum + rec.superplayer;
  rec.points_delta.assign(choices.size(), 0.0);

  const int minority = -sign(rec.outcome);
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (minority != 0 && choices[i] == minority) rec.winners.push_back(static_cast<int>(i));
    if (mode == PayoffMode::return_proportional) {
      rec.points_delta[i] = -static_cast<double>(choices[i]) * rec.outcome;
    }
  }
  if (mode == PayoffMode::minority_point) {
    for (int w : rec.winners) rec.points_delta[static_cast<std::size_t>(w)] = 1.0;
  }
  return rec;
}

/// Sum of choices in a round, i.e. the next round's prev_excess.
inline int excess_demand(std::span<const int> choices) {
  int s = 0;
  for (int c : choices) s += c;
  return s;
}

template <typename Rng>
int coin_flip_bot(double skip_prob, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < skip_prob) return 0;
  return u(rng) < 0.5 ? 1 : -1;
}

/// Buy probability for the signed game: the market's demand-efficient rule
/// with d = (N + D) / 2.
inline double demand_efficient_buy_prob(int prev_excess, int n_players) {
  const double q = 0.5 + static_cast<double>(prev_excess) / (2.0 * n_players);
  return std::clamp(q, 0.0, 1.0);
}

template <typename Rng>
int demand_efficient_bot(int prev_excess, int n_players, double skip_prob, Rng& rng) {
  if (std::abs(prev_excess) > n_players) throw DomainError("demand_efficient_bot: |prev_excess| > n_players");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < skip_prob) return 0;
  return u(rng) < demand_efficient_buy_prob(prev_excess, n_players) ? 1 : -1;
}

template <typename Rng>
int bot_choice(BotKind kind, int prev_excess, int n_players, double skip_prob, Rng& rng) {
  return kind == BotKind::coin_flip ? coin_flip_bot(skip_prob, rng)
                                    : demand_efficient_bot(prev_excess, n_players, skip_prob, rng);
}

/// Generator shared by offline games and live rooms so both replay alike.
using GameRng = std::mt19937_64;

/// All-bot game. Round 1 starts from prev_excess = 0.
inline std::vector<RoundRecord> run_bot_game(const GameConfig& config, BotKind kind) {
  config.validate();
  GameRng rng(config.seed);
  std::vector<RoundRecord> out;
  out.reserve(static_cast<std::size_t>(config.rounds));
  std::vector<int> choices(static_cast<std::size_t>(config.n_players));
  int prev_excess = 0;
  for (int t = 1; t <= config.rounds; ++t) {
    for (auto& c : choices) c = bot_choice(kind, prev_excess, config.n_players, config.skip_prob, rng);
    out.push_back(settle_round(choices, prev_excess, config.payoff_mode, t));
    prev_excess = excess_demand(choices);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

struct MetricsReport {
  double outcome_variance = 0.0;
  /// Pooled Pearson correlation of c_{i,t} with D_{t-1} over non-skipped
  /// choices from round 2 on. NaN when either side has zero variance.
  double choice_demand_correlation = 0.0;
  double bubble_fraction = 0.0;
  int n_rounds = 0;
  /// Same correlation computed per player (index = player position).
  std::vector<std::optional<double>> per_player_correlation;
};

/// One side chose at least twice as often as the other, and someone chose.
inline bool is_bubble_round(int n_plus, int n_minus) {
  const int hi = std::max(n_plus, n_minus);
  const int lo = std::min(n_plus, n_minus);
  return hi > 0 && hi >= 2 * lo;
}

namespace detail {

struct PearsonAccumulator {
  double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  void add(double x, double y) {
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  std::optional<double> value() const {
    if (n < 2) return std::nullopt;
    const double cov = sxy - sx * sy / n;
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    if (!(vx > 0.0) || !(vy > 0.0)) return std::nullopt;
    return cov / std::sqrt(vx * vy);
  }
};

}  // namespace detail

inline MetricsReport metrics(std::span<const RoundRecord> records) {
  if (records.size() < 2) throw InsufficientDataError("metrics: need at least 2 rounds");
  bool any_choice = false;
  for (const auto& r : records) {
    for (int c : r.choices) any_choice = any_choice || c != 0;
  }
  if (!any_choice) throw InsufficientDataError("metrics: every choice is zero");

  MetricsReport rep;
  rep.n_rounds = static_cast<int>(records.size());

  double mean = 0.0;
  for (const auto& r : records) mean += r.outcome;
  mean /= static_cast<double>(records.size());
  double ss = 0.0;
  for (const auto& r : records) ss += (r.outcome - mean) * (r.outcome - mean);
  rep.outcome_variance = ss / static_cast<double>(records.size() - 1);

  std::size_t bubbles = 0;
  for (const auto& r : records) {
    const auto plus = std::count(r.choices.begin(), r.choices.end(), 1);
    const auto minus = std::count(r.choices.begin(), r.choices.end(), -1);
    if (is_bubble_round(static_cast<int>(plus), static_cast<int>(minus))) ++bubbles;
  }
  rep.bubble_fraction = static_cast<double>(bubbles) / static_cast<double>(records.size());

  detail::PearsonAccumulator pooled;
  std::vector<detail::PearsonAccumulator> per_player;
  for (std::size_t t = 1; t < records.size(); ++t) {
    const auto& r = records[t];
    if (per_player.size() < r.choices.size()) per_player.resize(r.choices.size());
    for (std::size_t i = 0; i < r.choices.size(); ++i) {
      if (r.choices[i] == 0) continue;
      pooled.add(r.choices[i], r.prev_excess);
      per_player[i].add(r.choices[i], r.prev_excess);
    }
  }
  rep.choice_demand_correlation = pooled.value().value_or(std::numeric_limits<double>::quiet_NaN());
  for (const auto& acc : per_player) rep.per_player_correlation.push_back(acc.value());
  return rep;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::ordered_json to_json(const RoundRecord& r) {
  nlohmann::ordered_json j;
  j["round"] = r.round;
  j["choices"] = r.choices;
  j["prev_excess"] = r.prev_excess;
  j["superplayer"] = r.superplayer;
  j["outcome"] = r.outcome;
  j["winners"] = r.winners;
  j["points"] = r.points_delta;
  return j;
}

inline RoundRecord round_record_from_json(const nlohmann::json& j) {
  RoundRecord r;
  r.round = j.at("round").get<int>();
  r.choices = j.at("choices").get<std::vector<int>>();
  r.prev_excess = j.at("prev_excess").get<int>();
  r.superplayer = j.at("superplayer").get<int>();
  r.outcome = j.at("outcome").get<int>();
  r.winners = j.at("winners").get<std::vector<int>>();
  r.points_delta = j.at("points").get<std::vector<double>>();
  for (int c : r.choices) {
    if (c < -1 || c > 1) throw DomainError("choice not in {-1, 0, +1}");
  }
  if (r.points_delta.size() != r.choices.size()) throw DomainError("points and choices differ in length");
  return r;
}

/// One compact JSON object per line.
inline std::string to_json_line(const RoundRecord& r) { return to_json(r).dump() + "\n"; }

inline void write_round_log(std::ostream& os, std::span<const RoundRecord> records) {
  for (const auto& r : records) os << to_json_line(r);
}

/// Parses a JSON-lines round log; blank lines are skipped.
inline std::vector<RoundRecord> read_round_log(std::istream& is) {
  std::vector<RoundRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(round_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

inline nlohmann::ordered_json to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["outcome_variance"] = m.outcome_variance;
  if (std::isnan(m.choice_demand_correlation)) {
    j["choice_demand_correlation"] = nullptr;
  } else {
    j["choice_demand_correlation"] = m.choice_demand_correlation;
  }
  j["bubble_fraction"] = m.bubble_fraction;
  j["n_rounds"] = m.n_rounds;
  auto per = nlohmann::ordered_json::array();
  for (const auto& c : m.per_player_correlation) {
    if (c) {
      per.push_back(*c);
    } else {
      per.push_back(nullptr);
    }
  }
  j["per_player_correlation"] = per;
  return j;
}

}  // namespace seesaw
