#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "seesaw/efficiency.hpp"

using namespace seesaw;
using Catch::Approx;

TEST_CASE("expected price at the degenerate corners", "[efficiency]") {
  CHECK(expected_price(0.0, ModelParams{5, 0}) == 0.0);
  CHECK_THROWS_AS(expected_price(1.0, ModelParams{5, 0}), DegenerateDistributionError);
  CHECK_THROWS_AS(expected_price(1.5, ModelParams{5, 0}), DomainError);
  // With random traders d' = N never carries all the mass.
  CHECK(std::isfinite(expected_price(1.0, ModelParams{5, 1})));
}

TEST_CASE("expected price matches direct summation", "[efficiency][oracle]") {
  // Frozen from a 40-digit convolution of Binomial(20, q) and Binomial(2, 1/2),
  // conditioned on d' < 22.
  const ModelParams p{20, 2};
  CHECK(expected_price(0.4, p) == Approx(0.7522324771086041724).epsilon(1e-12));
  CHECK(expected_price(0.6, p) == Approx(1.6443058225261736309).epsilon(1e-12));
  CHECK(expected_price(0.6, p) > expected_price(0.4, p));
}

TEST_CASE("expected price is strictly increasing in q", "[efficiency][property]") {
  for (const ModelParams p : {ModelParams{20, 2}, ModelParams{4, 0}, ModelParams{100, 10}, ModelParams{1, 1}}) {
    double previous = expected_price(0.0, p);
    for (int k = 1; k < 100; ++k) {
      const double e = expected_price(k / 100.0, p);
      REQUIRE(e > previous);
      previous = e;
    }
  }
}

TEST_CASE("price-efficient probability for four speculators", "[efficiency][oracle]") {
  // 40-digit bisection over the exhaustive five-outcome enumeration.
  const ModelParams p{4, 0};
  CHECK(solve_price_efficient(1, p, 1e-10) == Approx(0.18547209365357910332).margin(1e-8));
  CHECK(solve_price_efficient(2, p, 1e-10) == Approx(0.41628588270661175077).margin(1e-8));
  // The target price 3 is only reached in the q -> 1 limit.
  CHECK(solve_price_efficient(3, p, 1e-10) == Approx(1.0).margin(1e-8));

  const auto prof = compare_profiles(p, 1e-10);
  CHECK(prof.q_price[1] == Approx(0.18547209365357910332).margin(1e-8));
  CHECK(prof.q_price[2] == Approx(0.41628588270661175077).margin(1e-8));
  CHECK(prof.q_price[3] == Approx(1.0).margin(1e-8));
}

TEST_CASE("solver meets the residual contract or clamps", "[efficiency][property]") {
  for (const ModelParams p : {ModelParams{20, 2}, ModelParams{10, 1}, ModelParams{100, 10}}) {
    const int n = p.total();
    for (int d = 1; d < n; ++d) {
      const double q = solve_price_efficient(d, p, 1e-10);
      REQUIRE((q >= 0.0 && q <= 1.0));
      const double target = price(d, n);
      const double residual = expected_price(q, p) - target;
      if (q == 0.0) {
        REQUIRE(residual >= 0.0);
      } else if (q == 1.0) {
        REQUIRE(residual <= 0.0);
      } else {
        INFO("d = " << d << " q = " << q << " residual = " << residual);
        REQUIRE(std::abs(residual) <= 1e-10);
      }
    }
  }
}

TEST_CASE("solver errors", "[efficiency][errors]") {
  CHECK_THROWS_AS(solve_price_efficient(2, ModelParams{4, 0}, 0.0), ParameterError);
  CHECK_THROWS_AS(solve_price_efficient(0, ModelParams{4, 0}, 1e-10), DomainError);
  CHECK_THROWS_AS(solve_price_efficient(4, ModelParams{4, 0}, 1e-10), DomainError);
}

TEST_CASE("price and demand efficiency converge with system size", "[efficiency]") {
  // N_r / N_s = 0.1 at N = 22 and N = 110.
  const auto small = compare_profiles(ModelParams{20, 2}, 1e-10);
  const auto large = compare_profiles(ModelParams{100, 10}, 1e-10);
  CHECK(large.max_abs_difference < small.max_abs_difference);
  CHECK(small.max_abs_difference > 0.0);
  for (int d = 0; d <= 22; ++d) CHECK(small.q_demand[d] == speculator_buy_prob(d, small.params));
}

TEST_CASE("capped regularisation keeps d' = N in the expectation", "[efficiency]") {
  const ModelParams p{4, 0};
  const auto reg = Regularization::capped(100.0);
  CHECK(expected_price(1.0, p, reg) == Approx(100.0));
  const double q = solve_price_efficient(2, p, 1e-10, reg);
  CHECK(std::abs(expected_price(q, p, reg) - 1.0) <= 1e-10);
  // The capped state pulls the expectation up, so fewer buyers are needed.
  CHECK(q < solve_price_efficient(2, p, 1e-10));
}

TEST_CASE("profile CSV layout", "[efficiency][io]") {
  const auto prof = compare_profiles(ModelParams{4, 0}, 1e-10);
  std::ostringstream os;
  write_profile_csv(os, prof);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "d,d_over_N,q_demand,q_price");
  std::getline(is, line);
  CHECK(line == "0,0,0,0");
  int rows = 1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 5);
}
