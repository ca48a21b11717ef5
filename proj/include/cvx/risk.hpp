#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "cvx/solver.hpp"

namespace cvx {

// Finite-state market: state-wise principal income W_j (signed), state
// probabilities, and the entropic risk-aversion parameter.
struct FiniteMarket {
  Eigen::VectorXd wealth;
  Eigen::VectorXd probabilities;
  double beta = 1.0;

  // Validates: at least two states, matching lengths, probabilities
  // nonnegative and summing to 1 within 1e-12, beta > 0.
  FiniteMarket(Eigen::VectorXd wealth_in, Eigen::VectorXd probabilities_in,
               double beta_in = 1.0);

  std::int64_t states() const { return wealth.size(); }
  double max_abs_wealth() const {
    return wealth.lpNorm<Eigen::Infinity>();
  }
};

struct PayoffStats {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of the call payoff (|W_j| - strike)^+ under the state
// probabilities.  The strike must lie in [0, max|W|].
PayoffStats call_payoff_stats(const FiniteMarket& market, double strike);

// Smallest strike whose call-payoff variance equals the target, located by
// bisection to 1e-10 strike accuracy.  The variance is continuous and
// nonincreasing in the strike; on plateaus the left edge is returned.
// Requires 0 <= target <= variance at strike 0.
double invert_variance(const FiniteMarket& market, double target_variance);

// log E[exp(-beta * position)], evaluated with a max shift so that large
// negative positions cannot overflow.
double entropic_risk(const FiniteMarket& market,
                     const Eigen::VectorXd& position);

// Screening instance over a finite type list.  The seller prices call-style
// contracts; each type's contract size is measured by the payoff variance
// tied to its value slope, so slopes live in [-slope_cap, 0] and slope_cap
// must stay below the variance at strike zero for the strike map to invert.
struct RiskProblem {
  FiniteMarket market;
  Eigen::VectorXd types;
  double value_cap;
  double slope_cap;

  // Validates: types strictly increasing in (0, 1], caps positive,
  // slope_cap < variance of |W| at strike 0.
  RiskProblem(FiniteMarket market_in, Eigen::VectorXd types_in,
              double value_cap_in, double slope_cap_in);
};

// Six-state reference instance used by the docs, the example config, and the
// regression tests.
RiskProblem example_risk_problem(double beta = 1.0);

// Strikes implied by the slopes, K_i = invert_variance(-slope_i).
Eigen::VectorXd strikes_for_slopes(const RiskProblem& problem,
                                   const Eigen::VectorXd& slopes);

// Principal's objective: entropic risk of the hedged position
//   W_j + (1/T) sum_i [(|W_j| - K_i)^+ - E(|W| - K_i)^+]
// minus the screening income (1/T) sum_i (theta_i * slope_i - v_i).  The
// income is nonpositive (the principal pays for coverage), so the optimum
// balances the risk reduction of the centered claims against their cost.
// Values must lie in [0, value_cap] and slopes in [-slope_cap, 0].
double risk_objective(const RiskProblem& problem,
                      const Eigen::VectorXd& values,
                      const Eigen::VectorXd& slopes);

// Analytic gradient of risk_objective with respect to (values, slopes),
// packed as (dv_0..dv_{T-1}, ds_0..ds_{T-1}).  Defined wherever no strike
// sits exactly on a wealth atom (the strike map is piecewise smooth).
Eigen::VectorXd risk_objective_gradient(const RiskProblem& problem,
                                        const Eigen::VectorXd& values,
                                        const Eigen::VectorXd& slopes);

struct RiskSolution {
  Eigen::VectorXd values;
  Eigen::VectorXd slopes;
  Eigen::VectorXd strikes;
  double risk_before = 0.0;
  double risk_after = 0.0;
  SolveReport report;
};

// Minimizes risk_objective over value nonnegativity, the value cap, the
// slope box, and all ordered-pair convexity rows, through the interior-point
// engine.  The objective is not convex in the slopes, so the result is a
// KKT point; risk_before / risk_after report the entropic risk of the bare
// wealth and of the aggregate position at the solution.
RiskSolution solve_risk(const RiskProblem& problem,
                        const SolverSettings& settings = {});

}  // namespace cvx
