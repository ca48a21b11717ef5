#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "cvx/errors.hpp"
#include "cvx/risk.hpp"
#include "doctest.h"

using namespace cvx;

namespace {

FiniteMarket six_state_market(double beta = 1.0) {
  Eigen::VectorXd w(6), p(6);
  w << -8.0, -6.8, 5.6, -2.8, -2.0, 0.0;
  p << 0.10, 0.15, 0.25, 0.25, 0.15, 0.10;
  return FiniteMarket(std::move(w), std::move(p), beta);
}

// direct two-pass moment computation, independent of the library kernels
PayoffStats brute_stats(const FiniteMarket& market, double strike) {
  double mean = 0.0, second = 0.0;
  for (std::int64_t j = 0; j < market.states(); ++j) {
    const double payoff =
        std::max(0.0, std::abs(market.wealth[j]) - strike);
    mean += market.probabilities[j] * payoff;
    second += market.probabilities[j] * payoff * payoff;
  }
  return {mean, second - mean * mean};
}

}  // namespace

TEST_CASE("call payoff statistics at hand points") {
  Eigen::VectorXd w(2), p(2);
  w << 0.0, -2.0;
  p << 0.5, 0.5;
  FiniteMarket flip(w, p);

  PayoffStats mid = call_payoff_stats(flip, 1.0);
  CHECK(mid.mean == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mid.variance == doctest::Approx(0.25).epsilon(1e-14));

  PayoffStats edge = call_payoff_stats(flip, 2.0);
  CHECK(edge.mean == 0.0);
  CHECK(edge.variance == 0.0);

  FiniteMarket market = six_state_market();
  PayoffStats at_zero = call_payoff_stats(market, 0.0);
  PayoffStats oracle = brute_stats(market, 0.0);
  CHECK(at_zero.mean == doctest::Approx(oracle.mean).epsilon(1e-14));
  CHECK(at_zero.variance == doctest::Approx(oracle.variance).epsilon(1e-14));
  CHECK(at_zero.mean == doctest::Approx(4.22).epsilon(1e-12));
  CHECK(at_zero.variance == doctest::Approx(5.9276).epsilon(1e-12));

  CHECK_THROWS_AS(call_payoff_stats(market, -0.1), EvaluationError);
  CHECK_THROWS_AS(call_payoff_stats(market, 8.1), EvaluationError);
}

TEST_CASE("variance inversion brackets, round-trips, and plateau edges") {
  FiniteMarket market = six_state_market();
  const double var0 = call_payoff_stats(market, 0.0).variance;

  CHECK(invert_variance(market, var0) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(invert_variance(market, 0.0) == doctest::Approx(8.0).epsilon(1e-9));
  CHECK_THROWS_AS(invert_variance(market, var0 + 1e-6), EvaluationError);
  CHECK_THROWS_AS(invert_variance(market, -1e-6), EvaluationError);

  std::mt19937 rng(7101);
  std::uniform_real_distribution<double> pick(0.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double k = pick(rng);
    const double target = call_payoff_stats(market, k).variance;
    const double back = invert_variance(market, target);
    CHECK(back <= k + 1e-9);
    CHECK(call_payoff_stats(market, back).variance ==
          doctest::Approx(target).epsilon(1e-8));
    const double ahead = call_payoff_stats(market, k + 1e-6).variance;
    const double behind = call_payoff_stats(market, k - 1e-6).variance;
    if (k > 1e-6 && k < 8.0 - 1e-6 && behind - ahead > 1e-9)
      CHECK(back == doctest::Approx(k).epsilon(1e-7));
  }

  // strictly positive outcomes leave the variance flat below the smallest
  // atom; the smallest root is still the one reported
  Eigen::VectorXd w(2), p(2);
  w << -1.0, -3.0;
  p << 0.5, 0.5;
  FiniteMarket gap(w, p);
  CHECK(call_payoff_stats(gap, 0.0).variance ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(call_payoff_stats(gap, 1.0).variance ==
        doctest::Approx(1.0).epsilon(1e-14));
  CHECK(invert_variance(gap, 1.0) <= 1e-9);

  double previous = call_payoff_stats(market, 0.0).variance;
  for (int step = 1; step <= 500; ++step) {
    const double value =
        call_payoff_stats(market, 8.0 * step / 500.0).variance;
    CHECK(value <= previous + 1e-12);
    previous = value;
  }
}

TEST_CASE("entropic risk identities") {
  FiniteMarket market = six_state_market();

  CHECK(entropic_risk(market, Eigen::VectorXd::Zero(6)) ==
        doctest::Approx(0.0).epsilon(1e-14));
  CHECK(entropic_risk(market, Eigen::VectorXd::Constant(6, 3.25)) ==
        doctest::Approx(-3.25).epsilon(1e-13));

  FiniteMarket sharper = six_state_market(2.0);
  CHECK(entropic_risk(sharper, Eigen::VectorXd::Constant(6, 3.25)) ==
        doctest::Approx(-6.5).epsilon(1e-13));

  std::mt19937 rng(4180);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd x(6);
    for (int j = 0; j < 6; ++j) x[j] = noise(rng);
    const double cash = noise(rng);
    CHECK(entropic_risk(market, x.array() + cash) ==
          doctest::Approx(entropic_risk(market, x) - cash).epsilon(1e-12));

    Eigen::VectorXd y = x;
    for (int j = 0; j < 6; ++j) y[j] += std::abs(noise(rng));
    CHECK(entropic_risk(market, x) >= entropic_risk(market, y) - 1e-13);
  }

  // direct summation oracle on the reference wealth
  double plain = 0.0;
  for (int j = 0; j < 6; ++j)
    plain += market.probabilities[j] * std::exp(-market.wealth[j]);
  CHECK(entropic_risk(market, market.wealth) ==
        doctest::Approx(std::log(plain)).epsilon(1e-13));
}

TEST_CASE("objective without participation is the bare wealth risk") {
  RiskProblem problem = example_risk_problem();
  const Eigen::VectorXd zero6 = Eigen::VectorXd::Zero(6);

  Eigen::VectorXd strikes = strikes_for_slopes(problem, zero6);
  for (int i = 0; i < 6; ++i)
    CHECK(strikes[i] == doctest::Approx(8.0).epsilon(1e-9));

  CHECK(risk_objective(problem, zero6, zero6) ==
        doctest::Approx(entropic_risk(problem.market, problem.market.wealth))
            .epsilon(1e-9));

  CHECK_THROWS_AS(
      risk_objective(problem, Eigen::VectorXd::Constant(6, -0.1), zero6),
      EvaluationError);
  CHECK_THROWS_AS(
      risk_objective(problem, zero6, Eigen::VectorXd::Constant(6, 0.1)),
      EvaluationError);
}

TEST_CASE("objective gradient matches central differences") {
  RiskProblem problem = example_risk_problem();
  const double atoms[] = {0.0, 2.0, 2.8, 5.6, 6.8, 8.0};

  std::mt19937 rng(9257);
  std::uniform_real_distribution<double> value_pick(0.3, 5.0);
  std::uniform_real_distribution<double> slope_pick(-5.5, -0.5);

  int accepted = 0;
  while (accepted < 50) {
    Eigen::VectorXd v(6), s(6);
    for (int i = 0; i < 6; ++i) {
      v[i] = value_pick(rng);
      s[i] = slope_pick(rng);
    }
    Eigen::VectorXd strikes = strikes_for_slopes(problem, s);
    bool near_kink = false;
    for (int i = 0; i < 6 && !near_kink; ++i)
      for (double atom : atoms)
        if (std::abs(strikes[i] - atom) < 2e-3) near_kink = true;
    if (near_kink) continue;
    ++accepted;

    const Eigen::VectorXd analytic = risk_objective_gradient(problem, v, s);
    REQUIRE(analytic.size() == 12);
    for (int coord = 0; coord < 12; ++coord) {
      auto probe = [&](double shift) {
        Eigen::VectorXd vv = v, ss = s;
        if (coord < 6)
          vv[coord] += shift;
        else
          ss[coord - 6] += shift;
        return risk_objective(problem, vv, ss);
      };
      const double h = 1e-6;
      const double fd = (probe(h) - probe(-h)) / (2.0 * h);
      CHECK(std::abs(fd - analytic[coord]) <=
            1e-5 * std::max(1.0, std::abs(analytic[coord])));
    }
  }
}

TEST_CASE("single-type solve matches a dense grid search") {
  Eigen::VectorXd one_type(1);
  one_type << 0.7;
  RiskProblem problem(six_state_market(), one_type, 10.0, 5.9);

  RiskSolution sol = solve_risk(problem);
  CHECK(sol.values[0] <= 1e-5);
  CHECK(sol.slopes[0] >= -5.9);
  CHECK(sol.slopes[0] <= 0.0);

  // brute force over the slope with the value pinned at its obvious optimum
  // (the objective increases in v, so v* = 0)
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(1);
  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  for (int step = 0; step <= 20000; ++step) {
    Eigen::VectorXd s(1);
    s << -5.9 * step / 20000.0;
    const double candidate = risk_objective(problem, v0, s);
    if (candidate < best) {
      best = candidate;
      best_s = s[0];
    }
  }
  for (int step = -2000; step <= 2000; ++step) {
    Eigen::VectorXd s(1);
    s << std::clamp(best_s + step * 1e-6, -5.9, 0.0);
    const double candidate = risk_objective(problem, v0, s);
    best = std::min(best, candidate);
  }

  CHECK(sol.report.objective <= best + 1e-5);
  CHECK(sol.report.objective >= best - 1e-5);
  CHECK(sol.risk_before ==
        doctest::Approx(entropic_risk(problem.market, problem.market.wealth))
            .epsilon(1e-12));
  CHECK(sol.risk_after < sol.risk_before);
}

TEST_CASE("six-type instance reproduces the documented structure") {
  RiskProblem problem = example_risk_problem();
  RiskSolution sol = solve_risk(problem);

  REQUIRE(sol.values.size() == 6);
  CHECK(sol.report.kkt_residual <= 1e-6);

  // values decay across types and hit zero at the top
  for (int i = 0; i + 1 < 6; ++i) CHECK(sol.values[i] >= sol.values[i + 1] - 1e-9);
  CHECK(sol.values.minCoeff() <= 1e-6);
  CHECK(sol.values.maxCoeff() <= 10.0 + 1e-9);

  // slopes feasible and convex in type (nondecreasing)
  for (int i = 0; i < 6; ++i) {
    CHECK(sol.slopes[i] <= 1e-12);
    CHECK(sol.slopes[i] >= -5.9 - 1e-9);
  }
  for (int i = 0; i + 1 < 6; ++i)
    CHECK(sol.slopes[i] <= sol.slopes[i + 1] + 1e-9);

  // strikes inherit monotonicity from the slopes through the inverse
  // variance map, and a bunched block shares one strike
  for (int i = 0; i + 1 < 6; ++i)
    CHECK(sol.strikes[i] <= sol.strikes[i + 1] + 1e-9);
  for (int i = 0; i < 6; ++i) {
    CHECK(sol.strikes[i] >= -1e-12);
    CHECK(sol.strikes[i] <= 8.0 + 1e-12);
  }
  int widest_block = 1;
  for (int lo = 0; lo < 6; ++lo) {
    int hi = lo;
    while (hi + 1 < 6 && sol.strikes[hi + 1] - sol.strikes[lo] <= 1e-3) ++hi;
    widest_block = std::max(widest_block, hi - lo + 1);
  }
  WARN(widest_block >= 3);

  CHECK(sol.risk_after < sol.risk_before);

  // reference-table proximity is informative, not gating
  WARN(std::abs(sol.strikes.minCoeff() - 0.713309) <= 0.072);
  WARN(std::abs(sol.values[0] - 4.196344) <= 0.42);
}

TEST_CASE("inputs are validated") {
  Eigen::VectorXd w(2), p(2), bad_p(2), one(1);
  w << -1.0, 2.0;
  p << 0.5, 0.5;
  bad_p << 0.7, 0.4;
  one << 1.0;

  CHECK_THROWS_AS(FiniteMarket(w, bad_p), std::invalid_argument);
  bad_p << -0.1, 1.1;
  CHECK_THROWS_AS(FiniteMarket(w, bad_p), std::invalid_argument);
  CHECK_THROWS_AS(FiniteMarket(one, one), std::invalid_argument);
  CHECK_THROWS_AS(FiniteMarket(w, p, 0.0), std::invalid_argument);

  Eigen::VectorXd types(2), reversed(2), outside(2);
  types << 0.3, 0.9;
  reversed << 0.9, 0.3;
  outside << 0.3, 1.2;
  FiniteMarket market = six_state_market();
  const double var0 = call_payoff_stats(market, 0.0).variance;

  CHECK_NOTHROW(RiskProblem(market, types, 1.0, 1.0));
  CHECK_THROWS_AS(RiskProblem(market, reversed, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RiskProblem(market, outside, 1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RiskProblem(market, types, -1.0, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(RiskProblem(market, types, 1.0, var0 + 0.1),
                  std::invalid_argument);

  RiskProblem example = example_risk_problem();
  CHECK(example.types.size() == 6);
  CHECK(example.types[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(example.types[5] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(example.market.wealth[2] == doctest::Approx(5.6).epsilon(1e-15));
  CHECK(example.market.probabilities.sum() ==
        doctest::Approx(1.0).epsilon(1e-14));
}
