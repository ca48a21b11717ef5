#pragma once

#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "cvx/decision.hpp"
#include "cvx/lattice.hpp"
#include "cvx/problem.hpp"

namespace cvx {

// Pointwise maximum of the affine functions theta -> v_i + D_i.(theta -
// theta_i), one per lattice node.  This is the smallest convex function that
// the node data admits, and evaluating it anywhere in the domain is how a
// discrete solution is read off the lattice.
class PiecewiseAffineFunction {
 public:
  PiecewiseAffineFunction(const Lattice& source, const DecisionState& state);

  double evaluate(const Eigen::VectorXd& theta) const;

  // Index of the plane attaining the maximum; ties resolve to the smallest
  // index so the choice is deterministic.
  std::int64_t active_plane(const Eigen::VectorXd& theta) const;

  // Slope of the active plane.  The envelope is differentiable almost
  // everywhere and this is its gradient wherever that holds.
  Eigen::VectorXd gradient_ae(const Eigen::VectorXd& theta) const;

  // Midpoint-rule integral of the problem integrand evaluated through the
  // envelope, on a grid with `subdivisions` cells per source cell per axis.
  double functional_value(const ProblemSpec& spec, int subdivisions,
                          bool parallel = true) const;

  std::int64_t plane_count() const { return intercepts_.size(); }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }
  const Eigen::MatrixXd& slopes() const { return slopes_; }
  const Lattice& source() const { return source_; }

  // value and gradient on a midpoint grid with `refinement` points per source
  // cell per axis: columns theta..., value, grad...
  void write_grid_csv(std::ostream& os, int refinement) const;

 private:
  Lattice source_;
  Eigen::VectorXd intercepts_;  // v_i - D_i . theta_i
  Eigen::MatrixXd slopes_;      // row i is D_i
};

struct ReconstructOptions {
  // slack allowed on the pairwise convexity inequalities
  double convexity_tol = 1e-7;
  // how closely the envelope must reproduce the node values
  double interpolation_tol = 1e-9;
};

// Validate node data and wrap it in its envelope.  Throws EvaluationError if
// a convexity inequality fails beyond tolerance or the envelope does not
// interpolate the node values.
PiecewiseAffineFunction reconstruct(const Lattice& lattice,
                                    const DecisionState& state,
                                    const ReconstructOptions& options = {});
PiecewiseAffineFunction reconstruct(const Lattice& lattice,
                                    const Eigen::VectorXd& x_flat,
                                    const ReconstructOptions& options = {});

}  // namespace cvx
