#pragma once

// Exact price efficiency: find the speculator buy probability q for which the
// expected next price equals the current price, and compare it against the
// closed-form demand-efficient probability.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "seesaw/binomial.hpp"
#include "seesaw/errors.hpp"
#include "seesaw/format.hpp"
#include "seesaw/market.hpp"

namespace seesaw {

/// Treatment of the infinite-price state d' = N inside the expectation.
struct Regularization {
  enum class Kind {
    /// Condition on d' < N and renormalise the remaining mass.
    conditional,
    /// Keep d' = N but assign it the finite price `cap`.
    capped,
  };
  Kind kind = Kind::conditional;
  double cap = 0.0;

  static Regularization conditional() { return {}; }
  static Regularization capped(double cap) { return {Kind::capped, cap}; }

  std::string describe() const {
    return kind == Kind::conditional ? "conditional_below_full" : "capped:" + format_double(cap);
  }
};

/// Distribution of the next demand when speculators buy with probability q
/// and random traders flip fair coins.
inline std::vector<double> next_demand_pmf(double q, const ModelParams& params) {
  return convolve(binomial_pmf(params.n_speculators, q), binomial_pmf(params.n_random, 0.5));
}

inline double expected_price(double q, const ModelParams& params,
                             Regularization reg = Regularization::conditional()) {
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("expected_price: q outside [0, 1]");
  params.validate();
  const int n = params.total();
  const auto pmf = next_demand_pmf(q, params);

  double mass = 0.0;
  double weighted = 0.0;
  for (int d = 0; d < n; ++d) {
    const double w = pmf[static_cast<std::size_t>(d)];
    mass += w;
    weighted += w * static_cast<double>(d) / static_cast<double>(n - d);
  }
  if (reg.kind == Regularization::Kind::capped) {
    return weighted + pmf[static_cast<std::size_t>(n)] * reg.cap;
  }
  if (mass <= 0.0) {
    throw DegenerateDistributionError("expected_price: all mass at d' = N");
  }
  return weighted / mass;
}

/// Bisection on q in [0, 1] for expected_price(q) = price(prev_demand).
/// Clamps to 0 or 1 when the target lies outside the attainable range.
inline double solve_price_efficient(int prev_demand, const ModelParams& params, double tol = 1e-10,
                                    Regularization reg = Regularization::conditional()) {
  if (!(tol > 0.0)) throw ParameterError("solve_price_efficient: tol must be > 0");
  params.validate();
  const int n = params.total();
  if (prev_demand <= 0 || prev_demand >= n) {
    throw DomainError("solve_price_efficient: prev_demand must lie in (0, N)");
  }
  const double target = price(prev_demand, n);

  // With N_r = 0 the q = 1 endpoint is degenerate under conditioning; the
  // expectation tends to +inf there, so it never limits the bracket.
  auto residual = [&](double q) { return expected_price(q, params, reg) - target; };

  const double at_zero = residual(0.0);
  if (at_zero >= 0.0) return 0.0;
  try {
    if (residual(1.0) <= 0.0) return 1.0;
  } catch (const DegenerateDistributionError&) {
  }
  double lo = 0.0;
  double hi = 1.0;

  double best_q = lo;
  double best_abs = -at_zero;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // interval exhausted at double resolution
    double r = 0.0;
    try {
      r = residual(mid);
    } catch (const DegenerateDistributionError&) {
      hi = mid;
      continue;
    }
    if (std::abs(r) < best_abs) {
      best_abs = std::abs(r);
      best_q = mid;
    }
    if (std::abs(r) <= tol) return mid;
    if (r < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best_q;
}

struct EfficiencyProfile {
  ModelParams params;
  std::vector<double> q_price;   // indexed by previous demand d = 0..N
  std::vector<double> q_demand;  // indexed by previous demand d = 0..N
  Regularization regularization;
  double max_abs_difference = 0.0;  // over interior d = 1..N-1
  int argmax_difference = 0;
};

/// Solves the price-efficient probability for every interior demand and
/// pairs it with the demand-efficient closed form. The endpoints d = 0 and
/// d = N carry the clamped values 0 and 1.
inline EfficiencyProfile compare_profiles(const ModelParams& params, double tol = 1e-10,
                                          Regularization reg = Regularization::conditional()) {
  params.validate();
  const int n = params.total();
  EfficiencyProfile prof{params, std::vector<double>(n + 1), std::vector<double>(n + 1), reg, 0.0, 0};
  for (int d = 0; d <= n; ++d) prof.q_demand[d] = speculator_buy_prob(d, params);
  prof.q_price.front() = 0.0;
  prof.q_price.back() = 1.0;
  for (int d = 1; d < n; ++d) {
    prof.q_price[d] = solve_price_efficient(d, params, tol, reg);
    const double diff = std::abs(prof.q_price[d] - prof.q_demand[d]);
    if (diff > prof.max_abs_difference) {
      prof.max_abs_difference = diff;
      prof.argmax_difference = d;
    }
  }
  return prof;
}

/// CSV `d,d_over_N,q_demand,q_price`.
inline void write_profile_csv(std::ostream& os, const EfficiencyProfile& prof) {
  const int n = prof.params.total();
  os << "d,d_over_N,q_demand,q_price\n";
  for (int d = 0; d <= n; ++d) {
    os << d << ',' << format_double(static_cast<double>(d) / n) << ',' << format_double(prof.q_demand[d]) << ','
       << format_double(prof.q_price[d]) << '\n';
  }
}

}  // namespace seesaw
