#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cvx/lattice.hpp"

namespace cvx {

// Axis-aligned box of admissible gradients.
struct GradientBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  GradientBox(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static GradientBox cube(double lower, double upper, int dim);

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::VectorXd& p, double tol = 0.0) const;
  double min_width() const;
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
};

enum class CostKind { quadratic_half_norm, sqrt_negative_slope, custom };

// Production cost C(p).  Strictly convex and differentiable on the region
// where it is defined; evaluation outside that region throws.
class CostModel {
 public:
  using ValueFn = std::function<double(const Eigen::VectorXd&)>;
  using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  // C(p) = scale/2 * |p|^2
  static CostModel quadratic(double scale = 1.0);
  // C(p) = -scale * sqrt(-p), defined for scalar p < 0
  static CostModel sqrt_negative_slope(double scale = 1.0);
  static CostModel custom(ValueFn value, GradientFn gradient, HessianFn hessian);

  CostKind kind() const { return kind_; }
  double scale() const { return scale_; }

  double value(const Eigen::VectorXd& p) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& p) const;

 private:
  CostModel() = default;

  CostKind kind_ = CostKind::custom;
  double scale_ = 1.0;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

enum class DensityKind { uniform, gaussian, custom_table };

// Type density f over the domain.  Not required to integrate to one.
class Density {
 public:
  // f == 1 everywhere
  static Density uniform();
  // multivariate normal pdf (no renormalization over the domain)
  static Density gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  // piecewise constant per lattice cell, one value per node in node order
  static Density custom_table(const Domain& domain, int cells_per_axis,
                              std::vector<double> values);

  DensityKind kind() const { return kind_; }
  double value(std::span<const double> theta) const;
  double value(const Eigen::VectorXd& theta) const;

 private:
  Density() = default;

  DensityKind kind_ = DensityKind::uniform;
  // gaussian data
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_inverse_;
  double normalization_ = 1.0;
  // table data
  double table_lower_ = 0.0;
  double table_spacing_ = 1.0;
  int table_cells_ = 0;
  int table_dim_ = 0;
  std::vector<double> table_;
};

enum class Sense { minimize_integral, maximize_surplus };

// Optional pins applied to every boundary node, encoded as paired
// inequality rows with half-width `tolerance` around the pinned value.
struct DirichletConditions {
  std::optional<Eigen::VectorXd> gradient;
  std::optional<double> value;
  double tolerance = 1e-7;
};

struct ProblemSpec {
  Domain domain;
  GradientBox gradient_set;
  CostModel cost;
  Density density;
  Sense sense = Sense::minimize_integral;
  std::optional<DirichletConditions> dirichlet;
  std::optional<double> upper_bound_v;

  ProblemSpec(Domain domain, GradientBox gradient_set, CostModel cost,
              Density density, Sense sense);
};

// Integrand of the minimized functional at one point:
//   (z - theta.p + C(p)) * f(theta).
// For maximize_surplus problems this is exactly the negated surplus
// (theta.p - C(p) - z) * f(theta), so the solver can always minimize.
// Throws std::domain_error when p leaves the gradient set by more than tol.
double evaluate_integrand(const ProblemSpec& spec, const Eigen::VectorXd& theta,
                          double z, const Eigen::VectorXd& p,
                          double tol = 1e-9);

// Partial derivatives of evaluate_integrand with respect to (z, p).
std::pair<double, Eigen::VectorXd> integrand_gradient(
    const ProblemSpec& spec, const Eigen::VectorXd& theta, double z,
    const Eigen::VectorXd& p, double tol = 1e-9);

struct BuiltinProblem {
  std::string name;
  ProblemSpec spec;
  int recommended_k;
};

// Named example problems; throws std::invalid_argument for unknown names.
BuiltinProblem builtin_problem(const std::string& name);
const std::vector<std::string>& builtin_problem_names();

}  // namespace cvx
