#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvx/constraints.hpp"
#include "cvx/decision.hpp"
#include "cvx/lattice.hpp"
#include "cvx/problem.hpp"

namespace cvx {

// Smooth objective seen by the interior-point loop.  gradient() and
// hessian() overwrite their outputs; the barrier terms are accumulated on
// top by the solver.
class ObjectiveModel {
 public:
  virtual ~ObjectiveModel() = default;
  virtual std::int64_t dimension() const = 0;
  virtual double value(const Eigen::VectorXd& x) const = 0;
  virtual void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const = 0;
  virtual void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const = 0;
};

// Node-wise quadrature of the variational integrand: sum over nodes of
// cell_volume * f(theta_i) * (v_i - theta_i . D_i + C(D_i)).
class DiscreteObjective final : public ObjectiveModel {
 public:
  DiscreteObjective(const Lattice& lattice, const ProblemSpec& spec);

  std::int64_t dimension() const override { return layout_.size(); }
  double value(const Eigen::VectorXd& x) const override;
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const override;
  void hessian(const Eigen::VectorXd& x, Eigen::MatrixXd& h) const override;

  const Eigen::VectorXd& weights() const { return weights_; }

 private:
  DecisionLayout layout_;
  CostModel cost_;
  Eigen::MatrixXd thetas_;   // m x n node coordinates
  Eigen::VectorXd weights_;  // cell_volume * density per node
};

struct SolverSettings {
  double barrier_initial = 1.0;
  double barrier_shrink = 0.2;
  // stop shrinking once rows * mu <= gap_tol * (1 + |objective|)
  double gap_tol = 1e-6;
  // final-stage stationarity: ||grad J + A^T lambda||_inf
  double kkt_tol = 1e-8;
  int max_newton_iters = 50;
  int max_stages = 80;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-14;
  bool record_trace = true;
  bool verbose = false;
};

struct TraceRecord {
  int stage;
  int iteration;
  double mu;
  double objective;
  double barrier_objective;
  double grad_inf_norm;
  double step;
  double min_slack;
};

struct SolveReport {
  Eigen::VectorXd x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  // max_r lambda_r * s_r, the worst complementarity product
  double comp_slack_residual = 0.0;
  double duality_gap_estimate = 0.0;
  Eigen::VectorXd dual;  // lambda = mu / s at the final iterate
  int barrier_stages = 0;
  int newton_iterations = 0;
  double wall_time_seconds = 0.0;
  bool converged = false;
  std::string message;
  std::vector<TraceRecord> trace;
};

// Minimize objective over {x : A x <= b} with a primal log-barrier Newton
// method.  x0 must be strictly feasible (every slack positive) or the call
// throws std::invalid_argument.  Line-search or budget failures return
// converged == false with an explanatory message instead of throwing.
SolveReport solve(const ObjectiveModel& objective,
                  const ConstraintSystem& system, const Eigen::VectorXd& x0,
                  const SolverSettings& settings = {});

struct ProblemSolution {
  Lattice lattice;
  DecisionState state;
  SolveReport report;
  // objective in the sense the problem was posed (negated for surplus
  // maximization, identical otherwise)
  double objective_native = 0.0;
};

ProblemSolution solve_problem(const ProblemSpec& spec, int cells_per_axis,
                              const SolverSettings& settings = {});

struct ConvergenceRow {
  int cells_per_axis = 0;
  double objective = 0.0;         // lattice functional at the optimum
  double functional = 0.0;        // quadrature of the rebuilt envelope
  double functional_change = 0.0; // vs the previous row, 0 for the first
  double objective_gap = 0.0;     // |objective - functional|
  double wall_seconds = 0.0;
};

// Solve the same problem on successively finer lattices and evaluate each
// envelope with `subdivisions` quadrature cells per lattice cell per axis.
std::vector<ConvergenceRow> convergence_study(
    const ProblemSpec& spec, std::span<const int> cells_per_axis,
    int subdivisions, const SolverSettings& settings = {});

}  // namespace cvx
