#pragma once

// Reference optimizers used only by tests.  Deliberately independent of the
// library's interior-point solver: projection onto the row polyhedron via
// Dykstra's alternating method plus a plain projected-gradient loop.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "cvx/constraints.hpp"

namespace oracle {

// Euclidean projection of z onto {x : A x <= b}.
inline Eigen::VectorXd project_polyhedron(const cvx::ConstraintSystem& sys,
                                          const Eigen::VectorXd& z,
                                          int max_cycles = 5000,
                                          double tol = 1e-13) {
  const auto row_ptr = sys.row_ptr();
  const auto cols = sys.col_idx();
  const auto vals = sys.values();
  const auto rhs = sys.rhs();
  const std::int64_t rows = sys.rows();

  std::vector<double> row_norm2(rows, 0.0);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
      row_norm2[r] += vals[idx] * vals[idx];

  Eigen::VectorXd x = z;
  std::vector<double> increment(rows, 0.0);  // Dykstra corrections, along a_r
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    double moved = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
      if (row_norm2[r] == 0.0) continue;
      // y = x + previous correction, then project onto the halfspace
      double ay = increment[r] * row_norm2[r];
      for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
        ay += vals[idx] * x[cols[idx]];
      double coeff = std::max(0.0, (ay - rhs[r]) / row_norm2[r]);
      double delta = increment[r] - coeff;  // shift applied to x along a_r
      if (delta != 0.0) {
        for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
          x[cols[idx]] += delta * vals[idx];
        moved = std::max(moved, std::abs(delta) * std::sqrt(row_norm2[r]));
      }
      increment[r] = coeff;
    }
    if (moved <= tol) break;
  }
  return x;
}

struct PgResult {
  Eigen::VectorXd x;
  double objective;
  int iterations = 0;
};

// Projected gradient with fixed step 1/lipschitz, run to stagnation.
inline PgResult projected_gradient(
    const std::function<double(const Eigen::VectorXd&)>& value,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& grad,
    double lipschitz, const cvx::ConstraintSystem& sys,
    const Eigen::VectorXd& x0, int max_iters = 50000, double tol = 1e-12) {
  PgResult out;
  Eigen::VectorXd x = project_polyhedron(sys, x0);
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd x_next =
        project_polyhedron(sys, x - grad(x) / lipschitz);
    out.iterations = it + 1;
    double move = (x_next - x).lpNorm<Eigen::Infinity>();
    x = x_next;
    if (move <= tol * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
  }
  out.x = x;
  out.objective = value(x);
  return out;
}

}  // namespace oracle
