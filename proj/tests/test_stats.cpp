#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "seesaw/market.hpp"
#include "seesaw/stats.hpp"

using namespace seesaw;
using Catch::Approx;

namespace {

// Inverse-transform sample with P(X >= x) = x^-xi for x >= 1.
std::vector<double> pareto_sample(std::size_t n, double xi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) x = std::pow(1.0 - u(rng), -1.0 / xi);
  return out;
}

}  // namespace

TEST_CASE("log returns from demands", "[stats][returns]") {
  const ModelParams p{10, 2};
  const auto flat = log_returns(Trajectory{p, {5, 5, 5, 5}});
  CHECK(flat.values == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(flat.skipped == 0);

  const auto one = log_returns(Trajectory{p, {3, 4}});
  REQUIRE(one.values.size() == 1);
  CHECK(one.values[0] == Approx(std::log(1.5)).epsilon(1e-14));
}

TEST_CASE("boundary steps are skipped and counted", "[stats][returns]") {
  const ModelParams p{10, 2};
  const auto r = log_returns(Trajectory{p, {3, 0, 4, 12, 6, 7}});
  CHECK(r.skipped == 4);
  CHECK(r.values.size() == 1);
  CHECK(r.from_demand == std::vector<int>{6});

  CHECK_THROWS_AS(log_returns(Trajectory{p, {0, 12, 0}}), InsufficientDataError);
  CHECK_THROWS_AS(log_returns(Trajectory{p, {4}}), InsufficientDataError);
}

TEST_CASE("linearized return", "[stats][returns]") {
  CHECK(linearized_return(10, 10, 1000) == 0.0);
  CHECK(linearized_return(500, 530, 1000) == Approx(0.12).epsilon(1e-15));
  CHECK(linearized_return(10, 12, 1000) == Approx(2 * (1.0 / 10 + 1.0 / 990)).epsilon(1e-15));
  CHECK(linearized_return(990, 988, 1000) == -linearized_return(10, 12, 1000));
  CHECK_THROWS_AS(linearized_return(0, 1, 1000), DomainError);
  CHECK_THROWS_AS(linearized_return(1000, 1, 1000), DomainError);
}

TEST_CASE("first-order expansion tracks the exact return for unit moves", "[stats][returns]") {
  const int n = 1000;
  const ModelParams p{n - 2, 2};
  for (int d = n / 4; d <= 3 * n / 4; ++d) {
    for (int delta : {-1, 1}) {
      const double exact = log_returns(Trajectory{p, {d, d + delta}}).values[0];
      const double approx = linearized_return(d, d + delta, n);
      REQUIRE(std::abs(approx - exact) <= 0.05 * std::abs(exact));
    }
  }
}

TEST_CASE("ccdf counts tail mass", "[stats][ccdf]") {
  const auto point = ccdf(std::vector<double>{1, 1, 1});
  REQUIRE(point.size() == 1);
  CHECK(point[0].probability == 1.0);

  const auto four = ccdf(std::vector<double>{4, 2, 3, 1});
  REQUIRE(four.size() == 4);
  CHECK(four[2].threshold == 3.0);
  CHECK(four[2].probability == 0.5);
  CHECK_THROWS_AS(ccdf(std::vector<double>{}), InsufficientDataError);
}

TEST_CASE("ccdf is normalised and non-increasing", "[stats][ccdf][property]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<int> len(1, 300);
    std::exponential_distribution<double> e(1.0);
    std::vector<double> xs(static_cast<std::size_t>(len(rng)));
    for (auto& x : xs) x = std::round(e(rng) * 4) / 4;  // forces ties
    const auto c = ccdf(xs);
    REQUIRE(c.front().probability == 1.0);
    for (std::size_t i = 1; i < c.size(); ++i) {
      REQUIRE(c[i].threshold > c[i - 1].threshold);
      REQUIRE(c[i].probability < c[i - 1].probability);
    }
  }
}

TEST_CASE("ccdf slope of a Pareto sample", "[stats][ccdf][oracle]") {
  const auto xs = pareto_sample(1'000'000, 2.0, 21);
  const auto c = ccdf(xs);
  CHECK(ccdf_loglog_slope(c, 1.0, 100.0) == Approx(-2.0).margin(0.05));
}

TEST_CASE("Hill estimator on synthetic tails", "[stats][hill][oracle]") {
  const auto fit = hill_tail_exponent(pareto_sample(100'000, 2.0, 17), 0.01);
  CHECK(fit.n_tail == 1000);
  CHECK(fit.xi == Approx(2.0).margin(0.1));
  CHECK(fit.density_exponent == fit.xi + 1.0);
  CHECK(fit.standard_error == Approx(fit.xi / std::sqrt(1000.0)));

  std::mt19937_64 rng(18);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> g(100'000);
  for (auto& x : g) x = std::abs(gauss(rng));
  CHECK(hill_tail_exponent(g, 0.01).xi > 4.0);
}

TEST_CASE("Hill estimator error shrinks with the tail size", "[stats][hill][property]") {
  // Quadrupling the tail should roughly halve the RMS error.
  auto rms = [](std::size_t n) {
    double ss = 0.0;
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
      const double xi = hill_tail_exponent(pareto_sample(n, 2.0, 1000 + seed + n), 0.01).xi;
      ss += (xi - 2.0) * (xi - 2.0);
    }
    return std::sqrt(ss / 40.0);
  };
  const double small = rms(1'000'000);  // 1e4 tail points
  const double large = rms(4'000'000);  // 4e4 tail points
  CHECK(small / large > 1.4);
  CHECK(small / large < 2.8);
}

TEST_CASE("Hill estimator preconditions", "[stats][hill][errors]") {
  const auto xs = pareto_sample(5000, 2.0, 3);
  CHECK_THROWS_AS(hill_tail_exponent(xs, 0.01), InsufficientDataError);
  CHECK_THROWS_AS(hill_tail_exponent(xs, 0.2), ParameterError);
  CHECK_THROWS_AS(hill_tail_exponent(xs, 0.0), ParameterError);
}

TEST_CASE("autocorrelation of white noise", "[stats][acf]") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(100'000);
  for (auto& v : x) v = gauss(rng);
  const auto acf = autocorrelation(x, 100);
  CHECK(acf[0] == Approx(1.0).epsilon(1e-14));
  // 4.5 sigma keeps the joint false-alarm rate over 100 lags below 1e-3.
  const double band = 4.5 / std::sqrt(static_cast<double>(x.size()));
  for (std::size_t lag = 1; lag <= 100; ++lag) REQUIRE(std::abs(acf[lag]) < band);
}

TEST_CASE("autocorrelation of a ramp", "[stats][acf][oracle]") {
  std::vector<double> ramp(11);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i + 1);
  const auto acf = autocorrelation(ramp, 1);
  CHECK(acf[1] == Approx(80.0 / 110.0).epsilon(1e-14));
}

TEST_CASE("autocorrelation errors", "[stats][acf][errors]") {
  CHECK_THROWS_AS(autocorrelation(std::vector<double>(200, 1.0), 5), DomainError);
  CHECK_THROWS_AS(autocorrelation(std::vector<double>(50, 1.0), 5), InsufficientDataError);
}

TEST_CASE("conditional fluctuations vanish for a constant path", "[stats][fluctuations]") {
  Trajectory traj{ModelParams{98, 2}, std::vector<int>(5000, 17)};
  const auto bins = conditional_return_variance(traj, 20, Side::lower, 1);
  REQUIRE_FALSE(bins.empty());
  for (const auto& b : bins) CHECK(b.mean_r2 == 0.0);
  CHECK_THROWS_AS(conditional_return_variance(traj, 20), InsufficientDataError);
}

TEST_CASE("conditional fluctuations scale like 1/d and mirror around N/2", "[stats][fluctuations][statistical]") {
  const ModelParams p{2000, 2, BoundaryMode::clamp, 5};
  const auto traj = simulate(p, 2'000'000);
  const auto lower = conditional_return_variance(traj, 40, Side::lower);
  const auto upper = conditional_return_variance(traj, 40, Side::upper);
  CHECK(fluctuation_scaling_slope(lower, 10.0, p.total() / 10.0) == Approx(-1.0).margin(0.2));
  CHECK(fluctuation_scaling_slope(upper, 10.0, p.total() / 10.0) == Approx(-1.0).margin(0.2));

  std::size_t compared = 0;
  for (const auto& lo : lower) {
    for (const auto& up : upper) {
      if (lo.d_low != up.d_low || lo.count < 10'000 || up.count < 10'000) continue;
      ++compared;
      INFO("bin " << lo.d_low << ": " << lo.mean_r2 << " vs " << up.mean_r2);
      CHECK(std::abs(std::log(lo.mean_r2 / up.mean_r2)) < 0.2);
    }
  }
  CHECK(compared >= 10);
}

TEST_CASE("uniformity test", "[stats][uniformity]") {
  std::mt19937_64 rng(12);
  const int n = 1001;
  std::uniform_int_distribution<int> uni(0, n);
  std::vector<int> flat(1'000'000);
  for (auto& d : flat) d = uni(rng);
  const auto ok = uniformity_test(flat, n, 0.02, 50);
  CHECK(ok.pass);
  CHECK(ok.interior_low == 21);
  CHECK(ok.interior_high == 980);
  CHECK(ok.degrees_of_freedom == 49);

  std::binomial_distribution<int> bin(n, 0.5);
  std::vector<int> peaked(1'000'000);
  for (auto& d : peaked) d = bin(rng);
  CHECK_FALSE(uniformity_test(peaked, n, 0.02, 50).pass);

  CHECK_THROWS_AS(uniformity_test(std::vector<int>(10, 1), n), InsufficientDataError);
  CHECK_THROWS_AS(uniformity_test(flat, n, 0.2), ParameterError);
}

TEST_CASE("returns of the symmetric model are sign symmetric", "[stats][statistical]") {
  const ModelParams p{200, 2, BoundaryMode::clamp, 31};
  const auto r = log_returns(simulate(p, 1'000'000));
  std::vector<double> neg(r.values.size());
  for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -r.values[i];
  CHECK(ks_statistic(r.values, neg) < 0.01);
}

TEST_CASE("ks statistic", "[stats]") {
  CHECK(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(ks_statistic(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == 1.0);
}

TEST_CASE("CSV writers", "[stats][io]") {
  std::ostringstream os;
  write_acf_csv(os, std::vector<double>{1.0, 0.25});
  CHECK(os.str() == "lag,acf\n0,1\n1,0.25\n");
  std::ostringstream cs;
  write_ccdf_csv(cs, ccdf(std::vector<double>{1, 2}));
  CHECK(cs.str() == "threshold,probability\n1,1\n2,0.5\n");
}
