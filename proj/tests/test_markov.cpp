#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "seesaw/markov.hpp"

using namespace seesaw;
using Catch::Approx;

namespace {

// Dominant left eigenvector of a dense chain, via Eigen's general eigensolver.
Eigen::VectorXd eigen_stationary(const TransitionMatrix& m) {
  const int s = static_cast<int>(m.size());
  Eigen::MatrixXd pt(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) pt(j, i) = m(i, j);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(pt);
  int best = 0;
  for (int k = 1; k < s; ++k) {
    if (std::abs(solver.eigenvalues()[k] - 1.0) < std::abs(solver.eigenvalues()[best] - 1.0)) best = k;
  }
  Eigen::VectorXd v = solver.eigenvectors().col(best).real();
  return v / v.sum();
}

}  // namespace

TEST_CASE("copying-chain rows", "[markov]") {
  const auto m2 = transition_matrix(2, ChainBoundary::absorbing);
  CHECK(m2(1, 0) == Approx(0.25));
  CHECK(m2(1, 1) == Approx(0.5));
  CHECK(m2(1, 2) == Approx(0.25));

  const auto m5 = transition_matrix(5, ChainBoundary::absorbing);
  CHECK(m5(0, 0) == 1.0);
  for (int j = 1; j <= 5; ++j) CHECK(m5(0, j) == 0.0);
  CHECK(m5(5, 5) == 1.0);

  const auto r5 = transition_matrix(5, ChainBoundary::reset_rule);
  CHECK(r5(0, 0) == Approx(1.0 / 32));
  CHECK(r5(5, 2) == Approx(10.0 / 32));
  CHECK_THROWS_AS(transition_matrix(0, ChainBoundary::absorbing), DomainError);
}

TEST_CASE("rows are probability vectors", "[markov][property]") {
  for (auto boundary : {ChainBoundary::absorbing, ChainBoundary::reset_rule}) {
    const auto m = transition_matrix(200, boundary);
    CHECK(m.max_row_sum_error() < 1e-12);
    for (int i = 0; i <= 200; ++i) {
      for (double v : m.row(i)) REQUIRE(v >= 0.0);
    }
  }
  const auto market = market_transition_matrix(ModelParams{100, 3});
  CHECK(market.max_row_sum_error() < 1e-12);
}

TEST_CASE("small reset chains", "[markov][stationary]") {
  const auto one = stationary_distribution(transition_matrix(1, ChainBoundary::reset_rule));
  CHECK(one.distribution[0] == Approx(0.5).margin(1e-12));
  CHECK(one.distribution[1] == Approx(0.5).margin(1e-12));

  const auto two = stationary_distribution(transition_matrix(2, ChainBoundary::reset_rule));
  CHECK(std::abs(two.distribution[0] - 0.25) < 1e-10);
  CHECK(std::abs(two.distribution[1] - 0.5) < 1e-10);
  CHECK(std::abs(two.distribution[2] - 0.25) < 1e-10);
  CHECK(two.unique);
  CHECK(two.residual < 1e-12);
}

TEST_CASE("power iteration agrees with a dense eigensolve", "[markov][oracle]") {
  for (int n : {2, 3, 7, 20, 50}) {
    const auto m = transition_matrix(n, ChainBoundary::reset_rule);
    const auto res = stationary_distribution(m, 1e-14);
    const auto oracle = eigen_stationary(m);
    for (int j = 0; j <= n; ++j) {
      INFO("n = " << n << " j = " << j);
      REQUIRE(std::abs(res.distribution[j] - oracle[j]) < 1e-8);
    }
  }
  const auto market = market_transition_matrix(ModelParams{30, 2});
  const auto res = stationary_distribution(market, 1e-14);
  const auto oracle = eigen_stationary(market);
  for (int j = 0; j <= 32; ++j) REQUIRE(std::abs(res.distribution[j] - oracle[j]) < 1e-8);
}

TEST_CASE("stationary vector is a fixed point", "[markov][property]") {
  const auto m = transition_matrix(60, ChainBoundary::reset_rule);
  const auto res = stationary_distribution(m, 1e-12);
  double total = 0.0;
  for (double v : res.distribution) {
    REQUIRE(v >= 0.0);
    total += v;
  }
  CHECK(total == Approx(1.0).margin(1e-10));
  for (int j = 0; j <= 60; ++j) {
    double mixed = 0.0;
    for (int i = 0; i <= 60; ++i) mixed += res.distribution[i] * m(i, j);
    REQUIRE(std::abs(mixed - res.distribution[j]) <= 1e-12);
  }
}

TEST_CASE("matrix-free iteration matches the dense one", "[markov]") {
  const auto dense = stationary_distribution(transition_matrix(40, ChainBoundary::reset_rule), 1e-13);
  const auto free = stationary_distribution_matrix_free(40, ChainBoundary::reset_rule, 1e-13);
  for (int j = 0; j <= 40; ++j) REQUIRE(std::abs(dense.distribution[j] - free.distribution[j]) < 1e-10);
}

TEST_CASE("absorbing chains are flagged and concentrate on the boundaries", "[markov]") {
  const auto res = stationary_distribution(transition_matrix(10, ChainBoundary::absorbing), 1e-13);
  CHECK_FALSE(res.unique);
  CHECK(res.distribution[0] + res.distribution[10] == Approx(1.0).margin(1e-8));
  CHECK(res.distribution[0] == Approx(0.5).margin(1e-8));
}

TEST_CASE("non-convergence is reported with the last change", "[markov][errors]") {
  try {
    (void)stationary_distribution(transition_matrix(100, ChainBoundary::reset_rule), 1e-15, 3);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.last_residual() > 0.0);
  }
  CHECK_THROWS_AS(stationary_distribution(transition_matrix(3, ChainBoundary::reset_rule), 0.0), ParameterError);
}

TEST_CASE("beta identity", "[markov][beta]") {
  // 40-digit direct summation: S(100, 50) = 100/101 and S(10, 3) = 0.9099927.
  CHECK(std::abs(beta_identity_sum(100, 50) - 100.0 / 101.0) < 0.05);
  CHECK(beta_identity_sum(100, 50) == Approx(0.99009900990099009901).epsilon(1e-13));
  CHECK(beta_identity_sum(10, 3) == Approx(0.9099927).epsilon(1e-13));
  CHECK(beta_identity_sum(1, 0) == 1.0);
  CHECK(beta_identity_residual(1, 0) == 0.5);
  CHECK(beta_identity_residual(10, 3) == Approx(0.00090179090909090909091).epsilon(1e-9));
  // Column sums approach one as N grows.
  CHECK(std::abs(beta_identity_sum(1000, 500) - 1.0) < std::abs(beta_identity_sum(100, 50) - 1.0));
  CHECK_THROWS_AS(beta_identity_sum(5, 6), DomainError);
}

TEST_CASE("stationary CSV layout", "[markov][io]") {
  std::ostringstream os;
  const std::vector<double> dist{0.25, 0.5, 0.25};
  write_stationary_csv(os, dist);
  CHECK(os.str() == "d,probability\n0,0.25\n1,0.5\n2,0.25\n");
}
