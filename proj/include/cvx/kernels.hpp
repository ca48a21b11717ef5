#pragma once

#include <Eigen/Dense>

#include "cvx/constraints.hpp"

namespace cvx::kernels {

// Slack vector s = b - A x for every row. Returns the smallest slack so
// callers can reject non-interior points without a second pass.
double compute_slacks(const ConstraintSystem& system, const Eigen::VectorXd& x,
                      Eigen::VectorXd& slacks);
double compute_slacks_serial(const ConstraintSystem& system,
                             const Eigen::VectorXd& x,
                             Eigen::VectorXd& slacks);

// -mu * sum_r log(s_r). Requires every slack strictly positive; returns
// +infinity otherwise so line searches treat the point as out of bounds.
double barrier_value(const Eigen::VectorXd& slacks, double mu);

// grad += mu * A^T s^{-1}
void barrier_gradient(const ConstraintSystem& system,
                      const Eigen::VectorXd& slacks, double mu,
                      Eigen::VectorXd& grad);
void barrier_gradient_serial(const ConstraintSystem& system,
                             const Eigen::VectorXd& slacks, double mu,
                             Eigen::VectorXd& grad);

// hess += mu * A^T diag(s)^{-2} A, dense lower triangle filled symmetrically.
void barrier_hessian(const ConstraintSystem& system,
                     const Eigen::VectorXd& slacks, double mu,
                     Eigen::MatrixXd& hess);
void barrier_hessian_serial(const ConstraintSystem& system,
                            const Eigen::VectorXd& slacks, double mu,
                            Eigen::MatrixXd& hess);

// out_r = (A dx)_r, the per-row directional derivative used for step caps.
void row_dots(const ConstraintSystem& system, const Eigen::VectorXd& dx,
              Eigen::VectorXd& out);
void row_dots_serial(const ConstraintSystem& system, const Eigen::VectorXd& dx,
                     Eigen::VectorXd& out);

}  // namespace cvx::kernels
