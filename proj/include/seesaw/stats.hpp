#pragma once

// Time-series statistics of simulated demand paths: log returns, tails,
// autocorrelations, conditional fluctuations and demand-uniformity checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seesaw/errors.hpp"
#include "seesaw/format.hpp"
#include "seesaw/market.hpp"

namespace seesaw {

struct ReturnSeries {
  std::vector<double> values;
  /// Demand at the start of each return, aligned with `values`.
  std::vector<int> from_demand;
  /// Steps dropped because either endpoint was 0 or N.
  std::size_t skipped = 0;
};

/// r_t = log(p_t / p_{t-1}) for every step with both demands in (0, N).
inline ReturnSeries log_returns(const Trajectory& traj) {
  if (traj.demands.size() < 2) throw InsufficientDataError("log_returns: trajectory shorter than 2");
  const int n = traj.params.total();
  ReturnSeries out;
  out.values.reserve(traj.demands.size() - 1);
  out.from_demand.reserve(traj.demands.size() - 1);
  for (std::size_t t = 1; t < traj.demands.size(); ++t) {
    const int d0 = traj.demands[t - 1];
    const int d1 = traj.demands[t];
    if (d0 <= 0 || d0 >= n || d1 <= 0 || d1 >= n) {
      ++out.skipped;
      continue;
    }
    // log(d1/(N-d1)) - log(d0/(N-d0)), grouped to keep precision for small moves.
    const double r = std::log(static_cast<double>(d1) / d0) - std::log(static_cast<double>(n - d1) / (n - d0));
    out.values.push_back(r);
    out.from_demand.push_back(d0);
  }
  if (out.values.empty()) throw InsufficientDataError("log_returns: fewer than 2 usable prices");
  return out;
}

/// First-order expansion of the log return around d.
inline double linearized_return(int d, int d_next, int n_total) {
  if (d <= 0 || d >= n_total) throw DomainError("linearized_return: d must lie in (0, N)");
  return (d_next - d) * (1.0 / d + 1.0 / (n_total - d));
}

inline std::vector<double> magnitudes(std::span<const double> values) {
  std::vector<double> out(values.size());
  std::transform(values.begin(), values.end(), out.begin(), [](double v) { return std::abs(v); });
  return out;
}

struct CcdfPoint {
  double threshold;
  double probability;  // P(X >= threshold)
};

/// Empirical P(X >= x) at every distinct sample value, ascending in x.
inline std::vector<CcdfPoint> ccdf(std::span<const double> sample) {
  if (sample.empty()) throw InsufficientDataError("ccdf: empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  std::vector<CcdfPoint> out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.push_back({sorted[i], static_cast<double>(sorted.size() - i) / n});
    i = j;
  }
  return out;
}

/// Least-squares slope of log P against log x for points with x in
/// [x_min, x_max] and P > 0.
inline double ccdf_loglog_slope(std::span<const CcdfPoint> points, double x_min, double x_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (const auto& p : points) {
    if (p.threshold < x_min || p.threshold > x_max || p.threshold <= 0.0 || p.probability <= 0.0) continue;
    const double x = std::log(p.threshold);
    const double y = std::log(p.probability);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) throw InsufficientDataError("ccdf_loglog_slope: fewer than 2 points in range");
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

struct TailFit {
  double xi = 0.0;                // exponent of the complementary CDF
  double density_exponent = 0.0;  // xi + 1
  double tail_fraction = 0.0;
  std::size_t n_tail = 0;
  double standard_error = 0.0;
  double threshold = 0.0;  // x_(k+1), the first order statistic outside the tail
};

/// Hill estimator over the top `tail_fraction` order statistics.
inline TailFit hill_tail_exponent(std::span<const double> sample, double tail_fraction = 0.01) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.1)) {
    throw ParameterError("hill_tail_exponent: tail_fraction must lie in (0, 0.1]");
  }
  const std::size_t k = static_cast<std::size_t>(std::floor(tail_fraction * static_cast<double>(sample.size())));
  if (k < 100 || k + 1 > sample.size()) {
    throw InsufficientDataError("hill_tail_exponent: " + std::to_string(k) + " tail points, need >= 100");
  }
  std::vector<double> x(sample.begin(), sample.end());
  // x[0..k-1] become the k largest values, x[k] the (k+1)-th largest.
  std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end(), std::greater<>());
  const double threshold = x[k];
  if (!(threshold > 0.0)) throw InsufficientDataError("hill_tail_exponent: non-positive tail threshold");
  double sum_log = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum_log += std::log(x[i] / threshold);
  if (!(sum_log > 0.0)) throw InsufficientDataError("hill_tail_exponent: tail has no spread");

  TailFit fit;
  fit.xi = static_cast<double>(k) / sum_log;
  fit.density_exponent = fit.xi + 1.0;
  fit.tail_fraction = tail_fraction;
  fit.n_tail = k;
  fit.standard_error = fit.xi / std::sqrt(static_cast<double>(k));
  fit.threshold = threshold;
  return fit;
}

/// Sample autocorrelation at lags 0..max_lag with the biased 1/T normalisation.
inline std::vector<double> autocorrelation(std::span<const double> series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= 10 * max_lag || n < 2) {
    throw InsufficientDataError("autocorrelation: series length must exceed 10 * max_lag");
  }
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centred(n);
  for (std::size_t i = 0; i < n; ++i) centred[i] = series[i] - mean;
  double var = 0.0;
  for (double v : centred) var += v * v;
  if (!(var > 0.0)) throw DomainError("autocorrelation: zero-variance series");

  std::vector<double> acf(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t t = lag; t < n; ++t) s += centred[t] * centred[t - lag];
    acf[lag] = s / var;
  }
  return acf;
}

/// Which half of the state space to bin by distance to the boundary.
enum class Side { lower, upper };

struct FluctuationBin {
  int d_low = 0;   // inclusive, distance to the boundary
  int d_high = 0;  // exclusive
  double d_mean = 0.0;
  double mean_r2 = 0.0;
  double standard_error = 0.0;  // of mean_r2, treating samples as independent
  std::size_t count = 0;
};

/// Mean squared log return conditioned on the starting demand, in
/// logarithmically spaced bins of m = d (lower) or m = N - d (upper) over
/// (0, N/2]. Bins with no samples are dropped from the output.
inline std::vector<FluctuationBin> conditional_return_variance(const Trajectory& traj, int n_bins = 40,
                                                               Side side = Side::lower,
                                                               std::size_t min_occupied_bins = 30) {
  if (n_bins < 1) throw ParameterError("conditional_return_variance: n_bins must be >= 1");
  const int n = traj.params.total();
  const int half = n / 2;
  if (half < 1) throw DomainError("conditional_return_variance: N too small");

  std::vector<int> edges;
  for (int b = 0; b <= n_bins; ++b) {
    const int e = static_cast<int>(std::lround(std::pow(static_cast<double>(half), static_cast<double>(b) / n_bins)));
    if (edges.empty() || e > edges.back()) edges.push_back(e);
  }
  // The last bin also takes m = N/2.
  if (edges.size() == 1) {
    edges.push_back(half + 1);
  } else {
    edges.back() = half + 1;
  }

  std::vector<FluctuationBin> bins(edges.size() - 1);
  std::vector<double> sum_m(bins.size(), 0.0), sum_r4(bins.size(), 0.0);
  for (std::size_t b = 0; b < bins.size(); ++b) {
    bins[b].d_low = edges[b];
    bins[b].d_high = edges[b + 1];
  }

  const auto returns = log_returns(traj);
  for (std::size_t i = 0; i < returns.values.size(); ++i) {
    const int d = returns.from_demand[i];
    const int m = side == Side::lower ? d : n - d;
    if (m < 1 || m > half) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), m);
    const std::size_t b = static_cast<std::size_t>(it - edges.begin()) - 1;
    const double r = returns.values[i];
    bins[b].mean_r2 += r * r;
    sum_r4[b] += r * r * r * r;
    sum_m[b] += m;
    ++bins[b].count;
  }

  std::vector<FluctuationBin> out;
  std::size_t occupied = 0;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    const double c = static_cast<double>(bins[b].count);
    bins[b].mean_r2 /= c;
    if (c > 1) {
      const double var = (sum_r4[b] / c - bins[b].mean_r2 * bins[b].mean_r2) * c / (c - 1.0);
      bins[b].standard_error = std::sqrt(std::max(var, 0.0) / c);
    }
    bins[b].d_mean = sum_m[b] / static_cast<double>(bins[b].count);
    if (bins[b].count >= 100) ++occupied;
    out.push_back(bins[b]);
  }
  if (occupied < min_occupied_bins) {
    throw InsufficientDataError("conditional_return_variance: only " + std::to_string(occupied) +
                                " bins with >= 100 samples");
  }
  return out;
}

/// Log-log least-squares slope of mean r^2 against the bin's mean distance,
/// over bins with >= 100 samples, non-zero variance, and d_mean in [d_min, d_max].
inline double fluctuation_scaling_slope(std::span<const FluctuationBin> bins, double d_min, double d_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t k = 0;
  for (const auto& b : bins) {
    if (b.count < 100 || b.d_mean < d_min || b.d_mean > d_max || !(b.mean_r2 > 0.0)) continue;
    const double x = std::log(b.d_mean);
    const double y = std::log(b.mean_r2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  if (k < 2) throw InsufficientDataError("fluctuation_scaling_slope: fewer than 2 usable bins");
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

struct UniformityResult {
  double chi_square = 0.0;
  std::size_t degrees_of_freedom = 0;
  double max_relative_deviation = 0.0;
  bool pass = false;
  int interior_low = 0;   // first interior state
  int interior_high = 0;  // last interior state
  std::vector<std::size_t> observed;
  std::vector<double> expected;
};

/// Histogram of demands on the interior states [ceil(e N), floor((1-e) N)],
/// grouped into `n_bins` contiguous bins and compared with the uniform law.
/// Passes when every bin deviates by less than `max_deviation` relative.
inline UniformityResult uniformity_test(std::span<const int> demands, int n_total, double edge_exclusion = 0.02,
                                        int n_bins = 50, double max_deviation = 0.05) {
  if (!(edge_exclusion >= 0.0 && edge_exclusion <= 0.1)) {
    throw ParameterError("uniformity_test: edge_exclusion must lie in [0, 0.1]");
  }
  if (demands.size() < 100'000) throw InsufficientDataError("uniformity_test: need >= 1e5 samples");
  UniformityResult res;
  res.interior_low = static_cast<int>(std::ceil(edge_exclusion * n_total - 1e-9));
  res.interior_high = static_cast<int>(std::floor((1.0 - edge_exclusion) * n_total + 1e-9));
  const int states = res.interior_high - res.interior_low + 1;
  if (n_bins < 1 || n_bins > states) throw ParameterError("uniformity_test: bad bin count");

  std::vector<std::size_t> per_state(static_cast<std::size_t>(states), 0);
  std::size_t inside = 0;
  for (int d : demands) {
    if (d < res.interior_low || d > res.interior_high) continue;
    ++per_state[static_cast<std::size_t>(d - res.interior_low)];
    ++inside;
  }
  if (inside == 0) throw InsufficientDataError("uniformity_test: no interior samples");

  res.observed.assign(static_cast<std::size_t>(n_bins), 0);
  res.expected.assign(static_cast<std::size_t>(n_bins), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    const int lo = static_cast<int>(static_cast<long long>(b) * states / n_bins);
    const int hi = static_cast<int>(static_cast<long long>(b + 1) * states / n_bins);
    std::size_t obs = 0;
    for (int s = lo; s < hi; ++s) obs += per_state[static_cast<std::size_t>(s)];
    const double exp = static_cast<double>(inside) * (hi - lo) / states;
    res.observed[b] = obs;
    res.expected[b] = exp;
    const double diff = static_cast<double>(obs) - exp;
    res.chi_square += diff * diff / exp;
    res.max_relative_deviation = std::max(res.max_relative_deviation, std::abs(diff) / exp);
  }
  res.degrees_of_freedom = static_cast<std::size_t>(n_bins - 1);
  res.pass = res.max_relative_deviation < max_deviation;
  return res;
}

struct DriftBin {
  int d_low = 0;   // inclusive
  int d_high = 0;  // exclusive
  double mean_drift = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
  /// mean_drift / standard_error, 0 when the error vanishes.
  double z() const { return standard_error > 0.0 ? mean_drift / standard_error : 0.0; }
};

/// Empirical E[d_t - d_{t-1} | d_{t-1}] over the interior states, in
/// `n_bins` contiguous bins.
inline std::vector<DriftBin> conditional_drift(const Trajectory& traj, int n_bins = 50, double edge_exclusion = 0.02) {
  const int n = traj.params.total();
  const int lo_state = static_cast<int>(std::ceil(edge_exclusion * n - 1e-9));
  const int hi_state = static_cast<int>(std::floor((1.0 - edge_exclusion) * n + 1e-9));
  const int states = hi_state - lo_state + 1;
  if (n_bins < 1 || n_bins > states) throw ParameterError("conditional_drift: bad bin count");

  std::vector<DriftBin> bins(static_cast<std::size_t>(n_bins));
  std::vector<double> sum(bins.size(), 0.0), sum_sq(bins.size(), 0.0);
  for (int b = 0; b < n_bins; ++b) {
    bins[b].d_low = lo_state + static_cast<int>(static_cast<long long>(b) * states / n_bins);
    bins[b].d_high = lo_state + static_cast<int>(static_cast<long long>(b + 1) * states / n_bins);
  }
  for (std::size_t t = 1; t < traj.demands.size(); ++t) {
    const int d = traj.demands[t - 1];
    if (d < lo_state || d > hi_state) continue;
    const std::size_t b = static_cast<std::size_t>(static_cast<long long>(d - lo_state) * n_bins / states);
    const double delta = traj.demands[t] - d;
    sum[b] += delta;
    sum_sq[b] += delta * delta;
    ++bins[b].count;
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const double c = static_cast<double>(bins[b].count);
    if (c < 2) continue;
    bins[b].mean_drift = sum[b] / c;
    const double var = (sum_sq[b] - c * bins[b].mean_drift * bins[b].mean_drift) / (c - 1.0);
    bins[b].standard_error = std::sqrt(std::max(var, 0.0) / c);
  }
  return bins;
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("ks_statistic: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return d;
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_ccdf_csv(std::ostream& os, std::span<const CcdfPoint> points) {
  os << "threshold,probability\n";
  for (const auto& p : points) os << format_double(p.threshold) << ',' << format_double(p.probability) << '\n';
}

inline void write_acf_csv(std::ostream& os, std::span<const double> acf) {
  os << "lag,acf\n";
  for (std::size_t lag = 0; lag < acf.size(); ++lag) os << lag << ',' << format_double(acf[lag]) << '\n';
}

inline void write_fluctuations_csv(std::ostream& os, std::span<const FluctuationBin> bins) {
  os << "d_low,d_high,d_mean,mean_r2,count\n";
  for (const auto& b : bins) {
    os << b.d_low << ',' << b.d_high << ',' << format_double(b.d_mean) << ',' << format_double(b.mean_r2) << ','
       << b.count << '\n';
  }
}

}  // namespace seesaw
