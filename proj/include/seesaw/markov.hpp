#pragma once

// Exact Markov-chain view of the demand process on states 0..N.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "seesaw/binomial.hpp"
#include "seesaw/efficiency.hpp"
#include "seesaw/errors.hpp"
#include "seesaw/format.hpp"
#include "seesaw/market.hpp"

namespace seesaw {

/// Boundary treatment of the chain.
///   absorbing:      the pure copying chain; 0 and N never leave.
///   reset_rule:     rows 0 and N are replaced by Binomial(N, 1/2).
///   random_traders: the full market chain (speculators plus coin flippers).
enum class ChainBoundary { absorbing, reset_rule, random_traders };

/// Dense row-stochastic (N+1) x (N+1) matrix, row-major.
class TransitionMatrix {
 public:
  TransitionMatrix(int n, ChainBoundary boundary)
      : n_(n), boundary_(boundary), entries_(static_cast<std::size_t>(n + 1) * (n + 1), 0.0) {}

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_) + 1; }
  ChainBoundary boundary() const noexcept { return boundary_; }

  double operator()(int i, int j) const { return entries_[index(i, j)]; }
  double& operator()(int i, int j) { return entries_[index(i, j)]; }

  std::span<const double> row(int i) const { return {entries_.data() + index(i, 0), size()}; }
  std::span<double> row(int i) { return {entries_.data() + index(i, 0), size()}; }

  /// Largest |row sum - 1|.
  double max_row_sum_error() const {
    double worst = 0.0;
    for (int i = 0; i <= n_; ++i) {
      double s = 0.0;
      for (double v : row(i)) s += v;
      worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
  }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * size() + static_cast<std::size_t>(j); }

  int n_;
  ChainBoundary boundary_;
  std::vector<double> entries_;
};

namespace detail {

inline std::vector<double> copying_row(int n, int i, ChainBoundary boundary) {
  if (boundary == ChainBoundary::reset_rule && (i == 0 || i == n)) return binomial_pmf(n, 0.5);
  return binomial_pmf(n, static_cast<double>(i) / n);
}

}  // namespace detail

/// Entry (i, j) = C(N, j) (i/N)^j (1 - i/N)^(N-j), with 0^0 = 1.
inline TransitionMatrix transition_matrix(int n, ChainBoundary boundary) {
  if (n < 1) throw DomainError("transition_matrix: n must be >= 1");
  if (boundary == ChainBoundary::random_traders) {
    throw ParameterError("transition_matrix: use market_transition_matrix for the random-trader chain");
  }
  TransitionMatrix m(n, boundary);
  for (int i = 0; i <= n; ++i) {
    const auto r = detail::copying_row(n, i, boundary);
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

/// The chain actually sampled by seesaw::step for the given parameters.
inline TransitionMatrix market_transition_matrix(const ModelParams& params) {
  params.validate();
  const int n = params.total();
  TransitionMatrix m(n, params.boundary_mode == BoundaryMode::reset_rule ? ChainBoundary::reset_rule
                                                                          : ChainBoundary::random_traders);
  for (int i = 0; i <= n; ++i) {
    std::vector<double> r;
    if (params.boundary_mode == BoundaryMode::reset_rule && (i == 0 || i == n)) {
      r = binomial_pmf(n, 0.5);
    } else {
      r = next_demand_pmf(speculator_buy_prob(i, params), params);
    }
    std::copy(r.begin(), r.end(), m.row(i).begin());
  }
  return m;
}

struct StationaryResult {
  std::vector<double> distribution;
  double residual = 0.0;  // max_j |pi_j - (pi P)_j|
  std::size_t iterations = 0;
  /// False for absorbing chains: the returned vector is the limit from the
  /// uniform start, not a unique stationary law.
  bool unique = true;
};

namespace detail {

/// Power iteration from the uniform vector. `apply` computes out = in * P.
template <typename Apply>
StationaryResult power_iterate(std::size_t states, Apply&& apply, double tol, std::size_t max_iter, bool unique) {
  if (!(tol > 0.0)) throw ParameterError("stationary_distribution: tol must be > 0");
  std::vector<double> cur(states, 1.0 / static_cast<double>(states));
  std::vector<double> next(states);
  double change = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  while (iter < max_iter) {
    apply(cur, next);
    ++iter;
    double total = 0.0;
    for (double v : next) total += v;
    change = 0.0;
    for (std::size_t j = 0; j < states; ++j) {
      next[j] /= total;
      change = std::max(change, std::abs(next[j] - cur[j]));
    }
    cur.swap(next);
    if (change < tol) break;
  }
  if (change >= tol) {
    throw ConvergenceError("stationary_distribution: no convergence in " + std::to_string(max_iter) + " iterations",
                           change);
  }
  apply(cur, next);
  double residual = 0.0;
  for (std::size_t j = 0; j < states; ++j) residual = std::max(residual, std::abs(next[j] - cur[j]));
  return {std::move(cur), residual, iter, unique};
}

}  // namespace detail

/// Stationary law of a dense chain by power iteration.
inline StationaryResult stationary_distribution(const TransitionMatrix& m, double tol = 1e-12,
                                                std::size_t max_iter = 1'000'000) {
  const std::size_t states = m.size();
  // Skip the exactly-zero head and tail of each row.
  std::vector<std::pair<std::size_t, std::size_t>> support(states);
  for (std::size_t i = 0; i < states; ++i) {
    const auto r = m.row(static_cast<int>(i));
    std::size_t lo = 0;
    std::size_t hi = states;
    while (lo < hi && r[lo] == 0.0) ++lo;
    while (hi > lo && r[hi - 1] == 0.0) --hi;
    support[i] = {lo, hi};
  }
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < states; ++i) {
      const double w = in[i];
      if (w == 0.0) continue;
      const auto r = m.row(static_cast<int>(i));
      for (std::size_t j = support[i].first; j < support[i].second; ++j) out[j] += w * r[j];
    }
  };
  return detail::power_iterate(states, apply, tol, max_iter, m.boundary() != ChainBoundary::absorbing);
}

/// Matrix-free variant for large N: rows of the copying chain are regenerated
/// on every multiplication, so memory stays O(N).
inline StationaryResult stationary_distribution_matrix_free(int n, ChainBoundary boundary, double tol = 1e-12,
                                                            std::size_t max_iter = 1'000'000) {
  if (n < 1) throw DomainError("stationary_distribution_matrix_free: n must be >= 1");
  if (boundary == ChainBoundary::random_traders) {
    throw ParameterError("stationary_distribution_matrix_free: copying chain only");
  }
  const std::size_t states = static_cast<std::size_t>(n) + 1;
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int i = 0; i <= n; ++i) {
      const double w = in[static_cast<std::size_t>(i)];
      if (w == 0.0) continue;
      const auto r = detail::copying_row(n, i, boundary);
      for (std::size_t j = 0; j < states; ++j) out[j] += w * r[j];
    }
  };
  return detail::power_iterate(states, apply, tol, max_iter, boundary != ChainBoundary::absorbing);
}

/// S(N, j) = sum_{i=0}^{N} C(N, j) (i/N)^j (1 - i/N)^(N - j), the column sum
/// of the copying chain. A Riemann-sum view of a Beta integral gives N/(N+1).
inline double beta_identity_sum(int n, int j) {
  if (n < 1) throw DomainError("beta_identity_sum: n must be >= 1");
  if (j < 0 || j > n) throw DomainError("beta_identity_sum: j outside [0, n]");
  const double log_choose = log_binomial_coefficient(n, j);
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = static_cast<double>(i) / n;
    // 0^0 = 1
    const double log_a = j == 0 ? 0.0 : (i == 0 ? -std::numeric_limits<double>::infinity() : j * std::log(x));
    const double log_b = (n - j) == 0 ? 0.0 : (i == n ? -std::numeric_limits<double>::infinity() : (n - j) * std::log1p(-x));
    sum += std::exp(log_choose + log_a + log_b);
  }
  return sum;
}

/// S(N, j) - N/(N+1).
inline double beta_identity_residual(int n, int j) {
  return beta_identity_sum(n, j) - static_cast<double>(n) / (n + 1.0);
}

/// CSV `d,probability`.
inline void write_stationary_csv(std::ostream& os, std::span<const double> distribution) {
  os << "d,probability\n";
  for (std::size_t d = 0; d < distribution.size(); ++d) os << d << ',' << format_double(distribution[d]) << '\n';
}

/// Plain CSV grid, one matrix row per line.
inline void write_matrix_csv(std::ostream& os, const TransitionMatrix& m) {
  for (int i = 0; i <= m.n(); ++i) {
    const auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (j) os << ',';
      os << format_double(r[j]);
    }
    os << '\n';
  }
}

}  // namespace seesaw
