#include "cvx/risk.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "cvx/constraints.hpp"
#include "cvx/errors.hpp"

namespace cvx {

FiniteMarket::FiniteMarket(Eigen::VectorXd wealth_in,
                           Eigen::VectorXd probabilities_in, double beta_in)
    : wealth(std::move(wealth_in)),
      probabilities(std::move(probabilities_in)),
      beta(beta_in) {
  if (wealth.size() < 2)
    throw std::invalid_argument("market needs at least two states");
  if (probabilities.size() != wealth.size())
    throw std::invalid_argument("probability count must match state count");
  if ((probabilities.array() < 0.0).any())
    throw std::invalid_argument("probabilities must be nonnegative");
  if (std::abs(probabilities.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("probabilities must sum to 1");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

PayoffStats call_payoff_stats(const FiniteMarket& market, double strike) {
  if (!(strike >= 0.0) || !(strike <= market.max_abs_wealth()))
    throw EvaluationError("strike outside [0, max|W|]");
  double mean = 0.0;
  double second = 0.0;
  for (std::int64_t j = 0; j < market.states(); ++j) {
    const double payoff = std::max(0.0, std::abs(market.wealth[j]) - strike);
    mean += market.probabilities[j] * payoff;
    second += market.probabilities[j] * payoff * payoff;
  }
  return {mean, std::max(0.0, second - mean * mean)};
}

double invert_variance(const FiniteMarket& market, double target_variance) {
  if (!(target_variance >= 0.0) ||
      !(target_variance <= call_payoff_stats(market, 0.0).variance))
    throw EvaluationError("target variance outside [0, Var|W|]");
  // The call variance is continuous and nonincreasing in the strike, so the
  // smallest root is inf{K : Var(K) <= target}.  Bisection on the predicate
  // Var > target converges onto the left edge of any plateau.  Running it to
  // double resolution keeps the strike map smooth enough for difference
  // quotients taken against this function.
  double lo = 0.0;
  double hi = market.max_abs_wealth();
  if (!(call_payoff_stats(market, lo).variance > target_variance)) return lo;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (call_payoff_stats(market, mid).variance > target_variance)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

double entropic_risk(const FiniteMarket& market,
                     const Eigen::VectorXd& position) {
  if (position.size() != market.states())
    throw std::invalid_argument("position length must match state count");
  const Eigen::ArrayXd exponent = -market.beta * position.array();
  const double shift = exponent.maxCoeff();
  const double total =
      (market.probabilities.array() * (exponent - shift).exp()).sum();
  return shift + std::log(total);
}

RiskProblem::RiskProblem(FiniteMarket market_in, Eigen::VectorXd types_in,
                         double value_cap_in, double slope_cap_in)
    : market(std::move(market_in)),
      types(std::move(types_in)),
      value_cap(value_cap_in),
      slope_cap(slope_cap_in) {
  if (types.size() < 1)
    throw std::invalid_argument("at least one agent type is required");
  for (std::int64_t i = 0; i < types.size(); ++i) {
    if (!(types[i] > 0.0) || !(types[i] <= 1.0))
      throw std::invalid_argument("types must lie in (0, 1]");
    if (i > 0 && !(types[i] > types[i - 1]))
      throw std::invalid_argument("types must be strictly increasing");
  }
  if (!(value_cap > 0.0) || !(slope_cap > 0.0))
    throw std::invalid_argument("caps must be positive");
  if (!(slope_cap < call_payoff_stats(market, 0.0).variance))
    throw std::invalid_argument(
        "slope cap must stay below the call variance at strike zero");
}

RiskProblem example_risk_problem(double beta) {
  Eigen::VectorXd w(6), p(6), types(6);
  w << -8.0, -6.8, 5.6, -2.8, -2.0, 0.0;
  p << 0.10, 0.15, 0.25, 0.25, 0.15, 0.10;
  for (int i = 0; i < 6; ++i) types[i] = (i + 1) / 6.0;
  return RiskProblem(FiniteMarket(std::move(w), std::move(p), beta),
                     std::move(types), 10.0, 5.9);
}

Eigen::VectorXd strikes_for_slopes(const RiskProblem& problem,
                                   const Eigen::VectorXd& slopes) {
  if (slopes.size() != problem.types.size())
    throw std::invalid_argument("slope count must match type count");
  Eigen::VectorXd strikes(slopes.size());
  for (std::int64_t i = 0; i < slopes.size(); ++i)
    strikes[i] = invert_variance(problem.market, -slopes[i]);
  return strikes;
}

namespace {

void check_menu_arguments(const RiskProblem& problem,
                          const Eigen::VectorXd& values,
                          const Eigen::VectorXd& slopes) {
  if (values.size() != problem.types.size() ||
      slopes.size() != problem.types.size())
    throw std::invalid_argument("values and slopes must match type count");
  for (std::int64_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0.0) || !(values[i] <= problem.value_cap))
      throw EvaluationError("value outside [0, value_cap]");
    if (!(slopes[i] >= -problem.slope_cap) || !(slopes[i] <= 0.0))
      throw EvaluationError("slope outside [-slope_cap, 0]");
  }
}

struct MenuEvaluation {
  Eigen::VectorXd strikes;
  Eigen::VectorXd position;
  double risk = 0.0;
  double objective = 0.0;
};

// position_j = W_j + (1/T) sum_i [(|W_j| - K_i)^+ - mean_i],
// objective   = entropic_risk(position) - (1/T) sum_i (theta_i s_i - v_i)
MenuEvaluation evaluate_menu(const RiskProblem& problem,
                             const Eigen::VectorXd& values,
                             const Eigen::VectorXd& slopes) {
  const std::int64_t count = problem.types.size();
  MenuEvaluation eval;
  eval.strikes = strikes_for_slopes(problem, slopes);
  eval.position = problem.market.wealth;
  double income = 0.0;
  for (std::int64_t i = 0; i < count; ++i) {
    const PayoffStats stats =
        call_payoff_stats(problem.market, eval.strikes[i]);
    for (std::int64_t j = 0; j < problem.market.states(); ++j) {
      const double payoff =
          std::max(0.0, std::abs(problem.market.wealth[j]) - eval.strikes[i]);
      eval.position[j] += (payoff - stats.mean) / static_cast<double>(count);
    }
    income += (problem.types[i] * slopes[i] - values[i]) /
              static_cast<double>(count);
  }
  eval.risk = entropic_risk(problem.market, eval.position);
  eval.objective = eval.risk - income;
  return eval;
}

// softmax weights of the exponentially tilted position measure
Eigen::ArrayXd tilted_weights(const FiniteMarket& market,
                              const Eigen::VectorXd& position) {
  Eigen::ArrayXd exponent = -market.beta * position.array();
  exponent -= exponent.maxCoeff();
  Eigen::ArrayXd weights = market.probabilities.array() * exponent.exp();
  return weights / weights.sum();
}

}  // namespace

double risk_objective(const RiskProblem& problem,
                      const Eigen::VectorXd& values,
                      const Eigen::VectorXd& slopes) {
  check_menu_arguments(problem, values, slopes);
  return evaluate_menu(problem, values, slopes).objective;
}

Eigen::VectorXd risk_objective_gradient(const RiskProblem& problem,
                                        const Eigen::VectorXd& values,
                                        const Eigen::VectorXd& slopes) {
  check_menu_arguments(problem, values, slopes);
  const std::int64_t count = problem.types.size();
  const std::int64_t states = problem.market.states();
  const double scale = 1.0 / static_cast<double>(count);
  const MenuEvaluation eval = evaluate_menu(problem, values, slopes);
  const Eigen::ArrayXd weights =
      tilted_weights(problem.market, eval.position);

  Eigen::VectorXd grad(2 * count);
  for (std::int64_t i = 0; i < count; ++i) {
    // the income refunds each promised value one-for-one
    grad[i] = scale;

    const PayoffStats stats =
        call_payoff_stats(problem.market, eval.strikes[i]);
    double tilted_above = 0.0;
    double plain_above = 0.0;
    for (std::int64_t j = 0; j < states; ++j) {
      if (std::abs(problem.market.wealth[j]) > eval.strikes[i]) {
        tilted_above += weights[j];
        plain_above += problem.market.probabilities[j];
      }
    }
    // d risk / d strike: tilted vs plain exercise probability
    const double risk_per_strike =
        problem.market.beta * scale * (tilted_above - plain_above);
    // Var'(K) = -2 mean(K) P(|W| <= K), so dK/ds = -1 / Var'(K)
    const double variance_slope = -2.0 * stats.mean * (1.0 - plain_above);
    const double strike_per_slope = -1.0 / variance_slope;
    grad[count + i] =
        risk_per_strike * strike_per_slope - problem.types[i] * scale;
  }
  return grad;
}

namespace {

// Interior-point adapter over x = (values, slopes).  The Hessian combines
// the Gauss-Newton curvature of risk(position(slopes)) with the diagonal
// second-order term of the strike map; the latter can turn the matrix
// indefinite (the objective is not convex in the slopes), which the
// engine's diagonal-lifting factorization absorbs.  The income term is
// linear and contributes nothing.
class RiskObjective final : public ObjectiveModel {
 public:
  explicit RiskObjective(const RiskProblem& problem) : problem_(problem) {}

  std::int64_t dimension() const override {
    return 2 * problem_.types.size();
  }

  double value(const Eigen::VectorXd& x) const override {
    const std::int64_t count = problem_.types.size();
    return risk_objective(problem_, x.head(count), x.tail(count));
  }

  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const override {
    const std::int64_t count = problem_.types.size();
    g = risk_objective_gradient(problem_, x.head(count), x.tail(count));
  }

  void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const override {
    const std::int64_t count = problem_.types.size();
    const std::int64_t states = problem_.market.states();
    const double scale = 1.0 / static_cast<double>(count);
    const Eigen::VectorXd values = x.head(count);
    const Eigen::VectorXd slopes = x.tail(count);
    const MenuEvaluation eval = evaluate_menu(problem_, values, slopes);
    const Eigen::ArrayXd weights =
        tilted_weights(problem_.market, eval.position);

    const double beta = problem_.market.beta;
    Eigen::MatrixXd sensitivity(states, count);  // d position / d slope
    Eigen::VectorXd curvature(count);            // strike-map second order
    for (std::int64_t i = 0; i < count; ++i) {
      const PayoffStats stats =
          call_payoff_stats(problem_.market, eval.strikes[i]);
      double tilted_above = 0.0;
      double plain_above = 0.0;
      for (std::int64_t j = 0; j < states; ++j)
        if (std::abs(problem_.market.wealth[j]) > eval.strikes[i]) {
          tilted_above += weights[j];
          plain_above += problem_.market.probabilities[j];
        }
      const double variance_slope = -2.0 * stats.mean * (1.0 - plain_above);
      const double strike_per_slope = -1.0 / variance_slope;
      for (std::int64_t j = 0; j < states; ++j) {
        const double above =
            std::abs(problem_.market.wealth[j]) > eval.strikes[i] ? 1.0 : 0.0;
        sensitivity(j, i) =
            scale * (plain_above - above) * strike_per_slope;
      }
      // d2K/ds2 = -Var'' / Var'^3 with Var'' = 2 P> P<= between atoms
      const double variance_curve =
          2.0 * plain_above * (1.0 - plain_above);
      const double strike_curve =
          -variance_curve /
          (variance_slope * variance_slope * variance_slope);
      curvature[i] = beta * scale * (tilted_above - plain_above) *
                     strike_curve;
    }

    const Eigen::VectorXd mean_sensitivity =
        sensitivity.transpose() * weights.matrix();
    h.setZero(2 * count, 2 * count);
    h.bottomRightCorner(count, count) =
        beta * beta *
        (sensitivity.transpose() * weights.matrix().asDiagonal() *
             sensitivity -
         mean_sensitivity * mean_sensitivity.transpose());
    h.bottomRightCorner(count, count).diagonal() += curvature;
  }

 private:
  const RiskProblem& problem_;
};

}  // namespace

RiskSolution solve_risk(const RiskProblem& problem,
                        const SolverSettings& settings) {
  const std::int64_t count = problem.types.size();
  const std::int32_t slope_base = static_cast<std::int32_t>(count);
  ConstraintSystem system(2 * count);
  system.reserve(4 * count + count * (count - 1),
                 4 * count + 3 * count * (count - 1));

  for (std::int32_t i = 0; i < count; ++i) {
    const std::int32_t value_col[] = {i};
    const std::int32_t slope_col[] = {
        static_cast<std::int32_t>(slope_base + i)};
    const double minus_one[] = {-1.0};
    const double plus_one[] = {1.0};
    system.append_row(value_col, minus_one, 0.0, {RowKind::nonneg, i, -1});
    system.append_row(value_col, plus_one, problem.value_cap,
                      {RowKind::bound, i, -1});
    system.append_row(slope_col, minus_one, problem.slope_cap,
                      {RowKind::feas_lower, i, 0});
    system.append_row(slope_col, plus_one, 0.0, {RowKind::feas_upper, i, 0});
  }
  for (std::int32_t i = 0; i < count; ++i)
    for (std::int32_t j = 0; j < count; ++j) {
      if (i == j) continue;
      const std::int32_t cols[] = {i, j,
                                   static_cast<std::int32_t>(slope_base + i)};
      const double coeffs[] = {1.0, -1.0, problem.types[j] - problem.types[i]};
      system.append_row(cols, coeffs, 0.0, {RowKind::convexity, i, j});
    }

  // Strictly feasible start sampled from a convex parabola whose vertex sits
  // right of the type range; every convexity row then has slack
  // curvature * (theta_i - theta_j)^2 and the box rows stay interior.
  const double center = 1.25;
  const double curvature =
      std::min(problem.value_cap, problem.slope_cap) / 10.0;
  const double lift = 1e-2 * std::min(1.0, problem.value_cap);
  Eigen::VectorXd start(2 * count);
  for (std::int64_t i = 0; i < count; ++i) {
    const double offset = problem.types[i] - center;
    start[i] = curvature * offset * offset + lift;
    start[count + i] = 2.0 * curvature * offset;
  }

  RiskObjective objective(problem);
  RiskSolution solution;
  solution.report = solve(objective, system, start, settings);
  solution.values = solution.report.x.head(count);
  solution.slopes = solution.report.x.tail(count);
  solution.strikes = strikes_for_slopes(problem, solution.slopes);
  solution.risk_before = entropic_risk(problem.market, problem.market.wealth);
  solution.risk_after =
      evaluate_menu(problem, solution.values, solution.slopes).risk;
  return solution;
}

}  // namespace cvx
