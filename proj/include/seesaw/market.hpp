#pragma once

// Stochastic bidding market: N_s speculators who keep the expected demand
// unchanged from step to step, plus N_r coin-flipping random traders.

#include <cstdint>
#include <istream>
#include <map>
#include <new>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "seesaw/errors.hpp"
#include "seesaw/format.hpp"

namespace seesaw {

/// How speculators behave once the demand hits 0 or N.
///   clamp:      buy probability is clamped into [0, 1]; with no random
///               traders the boundaries are absorbing.
///   reset_rule: every agent buys with probability 1/2 at a boundary.
enum class BoundaryMode { clamp, reset_rule };

inline std::string to_string(BoundaryMode mode) {
  return mode == BoundaryMode::clamp ? "clamp" : "reset_rule";
}

inline BoundaryMode boundary_mode_from_string(const std::string& text) {
  if (text == "clamp") return BoundaryMode::clamp;
  if (text == "reset_rule") return BoundaryMode::reset_rule;
  throw ParameterError("unknown boundary mode '" + text + "'");
}

struct ModelParams {
  int n_speculators = 1;
  int n_random = 0;
  BoundaryMode boundary_mode = BoundaryMode::clamp;
  std::uint64_t seed = 0;

  int total() const noexcept { return n_speculators + n_random; }

  void validate() const {
    if (n_speculators < 1) throw ParameterError("n_speculators must be >= 1");
    if (n_random < 0) throw ParameterError("n_random must be >= 0");
    if (total() < 2) throw ParameterError("total agent count must be >= 2");
  }

  bool operator==(const ModelParams&) const = default;
};

struct MarketState {
  int demand = 0;
  std::uint64_t time = 0;

  bool operator==(const MarketState&) const = default;
};

/// Demand path d_0, d_1, ..., d_steps. Prices follow from price().
struct Trajectory {
  ModelParams params;
  std::vector<int> demands;
};

/// Price set by the buyer/seller ratio d / (N - d).
inline double price(int demand, int n_total) {
  if (demand < 0 || demand > n_total) {
    throw DomainError("price: demand " + std::to_string(demand) + " outside [0, " +
                      std::to_string(n_total) + "]");
  }
  if (demand == n_total) throw UndefinedPriceError("price: zero supply at d = N");
  return static_cast<double>(demand) / static_cast<double>(n_total - demand);
}

/// Per-speculator buy probability that makes the expected next demand equal
/// the previous demand, clamped to [0, 1] where that is impossible.
inline double speculator_buy_prob(int prev_demand, const ModelParams& params) {
  const int n = params.total();
  if (prev_demand < 0 || prev_demand > n) throw DomainError("speculator_buy_prob: demand outside [0, N]");
  const double q = (prev_demand - 0.5 * params.n_random) / params.n_speculators;
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return q;
}

namespace detail {

template <typename Rng>
int draw_binomial(int trials, double p, Rng& rng) {
  if (trials == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  return std::binomial_distribution<int>(trials, p)(rng);
}

}  // namespace detail

/// Advances the market by one step.
template <typename Rng>
MarketState step(const MarketState& state, const ModelParams& params, Rng& rng) {
  const int n = params.total();
  if (state.demand < 0 || state.demand > n) throw DomainError("step: demand outside [0, N]");

  MarketState next{0, state.time + 1};
  if (params.boundary_mode == BoundaryMode::reset_rule && (state.demand == 0 || state.demand == n)) {
    next.demand = detail::draw_binomial(n, 0.5, rng);
    return next;
  }
  const double q = speculator_buy_prob(state.demand, params);
  next.demand = detail::draw_binomial(params.n_speculators, q, rng) +
                detail::draw_binomial(params.n_random, 0.5, rng);
  return next;
}

/// The generator used by simulate(); exposed so callers can reproduce runs.
using MarketRng = std::mt19937_64;

/// Runs `steps` steps from `initial_demand` (floor(N/2) when absent).
inline Trajectory simulate(const ModelParams& params, std::size_t steps,
                           std::optional<int> initial_demand = std::nullopt) {
  params.validate();
  if (steps < 1) throw ParameterError("simulate: steps must be >= 1");
  const int n = params.total();
  const int start = initial_demand.value_or(n / 2);
  if (start < 0 || start > n) throw DomainError("simulate: initial demand outside [0, N]");

  Trajectory out{params, {}};
  try {
    if (steps >= out.demands.max_size()) throw std::length_error("trajectory too long");
    out.demands.reserve(steps + 1);
  } catch (const std::length_error&) {
    throw ResourceError("simulate: " + std::to_string(steps) + " steps exceed container capacity");
  } catch (const std::bad_alloc&) {
    throw ResourceError("simulate: out of memory for " + std::to_string(steps) + " steps");
  }

  MarketRng rng(params.seed);
  MarketState state{start, 0};
  out.demands.push_back(state.demand);
  for (std::size_t t = 0; t < steps; ++t) {
    state = step(state, params, rng);
    out.demands.push_back(state.demand);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export formats

/// CSV with header `t,demand,price`; the price cell is empty when d = N.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.params.total();
  os << "t,demand,price\n";
  for (std::size_t t = 0; t < traj.demands.size(); ++t) {
    const int d = traj.demands[t];
    os << t << ',' << d << ',';
    if (d < n) os << format_double(price(d, n));
    os << '\n';
  }
}

/// Reads the demand column back. Parameters are not part of the CSV and must
/// come from the accompanying params file.
inline Trajectory read_trajectory_csv(std::istream& is, const ModelParams& params) {
  Trajectory traj{params, {}};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(is, line)) throw ParseError("empty trajectory file", 1);
  ++line_no;
  if (line != "t,demand,price") throw ParseError("unexpected header '" + line + "'", line_no);
  const int n = params.total();
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw ParseError("expected three columns", line_no);
    }
    int d = 0;
    try {
      d = parse_integer<int>(std::string_view(line).substr(first + 1, second - first - 1));
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (d < 0 || d > n) throw ParseError("demand outside [0, N]", line_no);
    traj.demands.push_back(d);
  }
  return traj;
}

/// Flat `key = value` config.
inline void write_params(std::ostream& os, const ModelParams& p) {
  os << "n_speculators = " << p.n_speculators << '\n'
     << "n_random = " << p.n_random << '\n'
     << "boundary_mode = " << to_string(p.boundary_mode) << '\n'
     << "seed = " << p.seed << '\n';
}

inline ModelParams read_params(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing key '" + key + "'", line_no);
    return it->second;
  };
  ModelParams p;
  p.n_speculators = parse_integer<int>(get("n_speculators"));
  p.n_random = parse_integer<int>(get("n_random"));
  p.boundary_mode = boundary_mode_from_string(get("boundary_mode"));
  p.seed = parse_integer<std::uint64_t>(get("seed"));
  p.validate();
  return p;
}

}  // namespace seesaw
