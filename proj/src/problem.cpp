#include "cvx/problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cvx/errors.hpp"

namespace cvx {

GradientBox::GradientBox(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0 || lower.size() > 4)
    throw std::invalid_argument("GradientBox: bad bound dimensions");
  for (int d = 0; d < lower.size(); ++d)
    if (!(lower[d] <= upper[d]))
      throw std::invalid_argument("GradientBox: lower bound exceeds upper");
}

GradientBox GradientBox::cube(double lo, double hi, int dim) {
  return GradientBox(Eigen::VectorXd::Constant(dim, lo),
                     Eigen::VectorXd::Constant(dim, hi));
}

bool GradientBox::contains(const Eigen::VectorXd& p, double tol) const {
  if (p.size() != lower.size()) return false;
  for (int d = 0; d < p.size(); ++d)
    if (p[d] < lower[d] - tol || p[d] > upper[d] + tol) return false;
  return true;
}

double GradientBox::min_width() const {
  return (upper - lower).minCoeff();
}

CostModel CostModel::quadratic(double scale) {
  if (!(scale > 0))
    throw std::invalid_argument("quadratic cost: scale must be positive");
  CostModel c;
  c.kind_ = CostKind::quadratic_half_norm;
  c.scale_ = scale;
  return c;
}

CostModel CostModel::sqrt_negative_slope(double scale) {
  if (!(scale > 0))
    throw std::invalid_argument("sqrt cost: scale must be positive");
  CostModel c;
  c.kind_ = CostKind::sqrt_negative_slope;
  c.scale_ = scale;
  return c;
}

CostModel CostModel::custom(ValueFn value, GradientFn gradient,
                            HessianFn hessian) {
  if (!value || !gradient || !hessian)
    throw std::invalid_argument("custom cost: all three callbacks required");
  CostModel c;
  c.kind_ = CostKind::custom;
  c.value_ = std::move(value);
  c.gradient_ = std::move(gradient);
  c.hessian_ = std::move(hessian);
  return c;
}

namespace {

// sqrt cost is one dimensional and needs p strictly negative
double checked_negative_slope(const Eigen::VectorXd& p) {
  if (p.size() != 1)
    throw EvaluationError("sqrt cost: gradient must be one dimensional");
  if (!(p[0] < 0))
    throw EvaluationError("sqrt cost: slope must be strictly negative");
  return p[0];
}

}  // namespace

double CostModel::value(const Eigen::VectorXd& p) const {
  switch (kind_) {
    case CostKind::quadratic_half_norm:
      return 0.5 * scale_ * p.squaredNorm();
    case CostKind::sqrt_negative_slope:
      return -scale_ * std::sqrt(-checked_negative_slope(p));
    case CostKind::custom:
      return value_(p);
  }
  throw std::logic_error("CostModel: unreachable");
}

Eigen::VectorXd CostModel::gradient(const Eigen::VectorXd& p) const {
  switch (kind_) {
    case CostKind::quadratic_half_norm:
      return scale_ * p;
    case CostKind::sqrt_negative_slope: {
      double slope = checked_negative_slope(p);
      Eigen::VectorXd g(1);
      g[0] = 0.5 * scale_ / std::sqrt(-slope);
      return g;
    }
    case CostKind::custom:
      return gradient_(p);
  }
  throw std::logic_error("CostModel: unreachable");
}

Eigen::MatrixXd CostModel::hessian(const Eigen::VectorXd& p) const {
  switch (kind_) {
    case CostKind::quadratic_half_norm:
      return scale_ *
             Eigen::MatrixXd::Identity(p.size(), p.size());
    case CostKind::sqrt_negative_slope: {
      double slope = checked_negative_slope(p);
      Eigen::MatrixXd h(1, 1);
      h(0, 0) = 0.25 * scale_ * std::pow(-slope, -1.5);
      return h;
    }
    case CostKind::custom:
      return hessian_(p);
  }
  throw std::logic_error("CostModel: unreachable");
}

Density Density::uniform() {
  Density d;
  d.kind_ = DensityKind::uniform;
  return d;
}

Density Density::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  if (covariance.rows() != mean.size() || covariance.cols() != mean.size())
    throw std::invalid_argument("gaussian density: covariance shape mismatch");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw std::invalid_argument("gaussian density: covariance not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(
        "gaussian density: covariance not positive definite");

  Density d;
  d.kind_ = DensityKind::gaussian;
  d.mean_ = std::move(mean);
  d.cov_inverse_ =
      llt.solve(Eigen::MatrixXd::Identity(covariance.rows(), covariance.rows()));
  double det = covariance.determinant();
  int n = static_cast<int>(d.mean_.size());
  d.normalization_ =
      1.0 / (std::pow(2.0 * std::numbers::pi, 0.5 * n) * std::sqrt(det));
  return d;
}

Density Density::custom_table(const Domain& domain, int cells_per_axis,
                              std::vector<double> values) {
  std::int64_t expected = 1;
  for (int d = 0; d < domain.dim; ++d) expected *= cells_per_axis;
  if (static_cast<std::int64_t>(values.size()) != expected)
    throw std::invalid_argument(
        "custom_table density: need one value per lattice node");
  for (double v : values)
    if (!(v >= 0) || !std::isfinite(v))
      throw std::invalid_argument(
          "custom_table density: values must be finite and nonnegative");

  Density d;
  d.kind_ = DensityKind::custom_table;
  d.table_lower_ = domain.lower;
  d.table_spacing_ = domain.width() / cells_per_axis;
  d.table_cells_ = cells_per_axis;
  d.table_dim_ = domain.dim;
  d.table_ = std::move(values);
  return d;
}

double Density::value(std::span<const double> theta) const {
  switch (kind_) {
    case DensityKind::uniform:
      return 1.0;
    case DensityKind::gaussian: {
      Eigen::Map<const Eigen::VectorXd> t(theta.data(), theta.size());
      Eigen::VectorXd diff = t - mean_;
      double quad = diff.dot(cov_inverse_ * diff);
      return normalization_ * std::exp(-0.5 * quad);
    }
    case DensityKind::custom_table: {
      if (static_cast<int>(theta.size()) != table_dim_)
        throw std::invalid_argument("density: wrong point dimension");
      std::int64_t flat = 0;
      for (int d = 0; d < table_dim_; ++d) {
        auto cell = static_cast<std::int64_t>(
            std::floor((theta[d] - table_lower_) / table_spacing_));
        cell = std::max<std::int64_t>(
            0, std::min<std::int64_t>(cell, table_cells_ - 1));
        flat = flat * table_cells_ + cell;
      }
      return table_[flat];
    }
  }
  throw std::logic_error("Density: unreachable");
}

double Density::value(const Eigen::VectorXd& theta) const {
  return value(std::span<const double>(theta.data(),
                                       static_cast<size_t>(theta.size())));
}

ProblemSpec::ProblemSpec(Domain dom, GradientBox q, CostModel c, Density f,
                         Sense s)
    : domain(dom),
      gradient_set(std::move(q)),
      cost(std::move(c)),
      density(std::move(f)),
      sense(s) {
  if (gradient_set.dim() != domain.dim)
    throw std::invalid_argument(
        "ProblemSpec: gradient set dimension must match the domain");
}

double evaluate_integrand(const ProblemSpec& spec, const Eigen::VectorXd& theta,
                          double z, const Eigen::VectorXd& p, double tol) {
  if (theta.size() != spec.domain.dim || p.size() != spec.domain.dim)
    throw std::invalid_argument("evaluate_integrand: dimension mismatch");
  if (!spec.gradient_set.contains(p, tol))
    throw std::domain_error(
        "evaluate_integrand: gradient outside the admissible set");
  double base = z - theta.dot(p) + spec.cost.value(p);
  return base * spec.density.value(theta);
}

std::pair<double, Eigen::VectorXd> integrand_gradient(
    const ProblemSpec& spec, const Eigen::VectorXd& theta, double z,
    const Eigen::VectorXd& p, double tol) {
  (void)z;
  if (theta.size() != spec.domain.dim || p.size() != spec.domain.dim)
    throw std::invalid_argument("integrand_gradient: dimension mismatch");
  if (!spec.gradient_set.contains(p, tol))
    throw std::domain_error(
        "integrand_gradient: gradient outside the admissible set");
  double f = spec.density.value(theta);
  Eigen::VectorXd dp = (spec.cost.gradient(p) - theta) * f;
  return {f, dp};
}

namespace {

BuiltinProblem make_builtin(const std::string& name) {
  if (name == "mussa_rosen_1d") {
    ProblemSpec spec(Domain(1.0, 2.0, 1), GradientBox::cube(0.0, 3.0, 1),
                     CostModel::quadratic(), Density::uniform(),
                     Sense::maximize_surplus);
    return {name, std::move(spec), 50};
  }
  if (name == "rochet_chone_uniform") {
    ProblemSpec spec(Domain(1.0, 2.0, 2), GradientBox::cube(0.0, 3.0, 2),
                     CostModel::quadratic(), Density::uniform(),
                     Sense::maximize_surplus);
    return {name, std::move(spec), 17};
  }
  if (name == "rochet_chone_gaussian") {
    Eigen::VectorXd mean(2);
    mean << 1.9, 1.0;
    Eigen::MatrixXd cov(2, 2);
    cov << 0.3, 0.2, 0.2, 0.3;
    ProblemSpec spec(Domain(1.0, 2.0, 2), GradientBox::cube(0.0, 3.0, 2),
                     CostModel::quadratic(),
                     Density::gaussian(std::move(mean), std::move(cov)),
                     Sense::maximize_surplus);
    return {name, std::move(spec), 17};
  }
  if (name == "cet_sqrt") {
    // gradient upper bound sits a hair below zero so the sqrt cost stays
    // defined on the whole admissible box
    ProblemSpec spec(Domain(0.0, 1.0, 1), GradientBox::cube(-4.0, -1e-8, 1),
                     CostModel::sqrt_negative_slope(), Density::uniform(),
                     Sense::maximize_surplus);
    return {name, std::move(spec), 25};
  }
  throw std::invalid_argument("unknown builtin problem: " + name);
}

}  // namespace

BuiltinProblem builtin_problem(const std::string& name) {
  return make_builtin(name);
}

const std::vector<std::string>& builtin_problem_names() {
  static const std::vector<std::string> names = {
      "mussa_rosen_1d", "rochet_chone_uniform", "rochet_chone_gaussian",
      "cet_sqrt"};
  return names;
}

}  // namespace cvx
