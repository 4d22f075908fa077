#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "seesaw/errors.hpp"

namespace seesaw {

/// Probability mass function of Binomial(n, p) for k = 0..n, evaluated in log
/// space so that n in the tens of thousands does not underflow the bulk.
/// Uses 0^0 = 1, so p = 0 and p = 1 give point masses.
inline std::vector<double> binomial_pmf(int n, double p) {
  if (n < 0) throw DomainError("binomial_pmf: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_pmf: p outside [0, 1]");

  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  if (p == 0.0) {
    pmf.front() = 1.0;
    return pmf;
  }
  if (p == 1.0) {
    pmf.back() = 1.0;
    return pmf;
  }
  const double log_p = std::log(p);
  const double log_q = std::log1p(-p);
  double log_choose = 0.0;  // log C(n, k), updated incrementally
  for (int k = 0; k <= n; ++k) {
    if (k > 0) log_choose += std::log(static_cast<double>(n - k + 1)) - std::log(static_cast<double>(k));
    pmf[static_cast<std::size_t>(k)] = std::exp(log_choose + k * log_p + (n - k) * log_q);
  }
  return pmf;
}

inline double log_binomial_coefficient(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Distribution of the sum of two independent integer-valued variables.
inline std::vector<double> convolve(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

}  // namespace seesaw
