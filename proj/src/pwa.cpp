#include "cvx/pwa.hpp"

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cvx/errors.hpp"
#include "cvx/parallel.hpp"

namespace cvx {

PiecewiseAffineFunction::PiecewiseAffineFunction(const Lattice& source,
                                                 const DecisionState& state)
    : source_(source),
      intercepts_(source.node_count()),
      slopes_(state.gradients) {
  const std::int64_t m = source.node_count();
  if (state.values.size() != m || state.gradients.rows() != m ||
      state.gradients.cols() != source.dim())
    throw EvaluationError("envelope: decision data does not match lattice");
  for (std::int64_t i = 0; i < m; ++i) {
    double dot = 0.0;
    for (int d = 0; d < source.dim(); ++d)
      dot += slopes_(i, d) * source.center(i, d);
    intercepts_[i] = state.values[i] - dot;
  }
}

double PiecewiseAffineFunction::evaluate(const Eigen::VectorXd& theta) const {
  return (intercepts_ + slopes_ * theta).maxCoeff();
}

std::int64_t PiecewiseAffineFunction::active_plane(
    const Eigen::VectorXd& theta) const {
  Eigen::VectorXd vals = intercepts_ + slopes_ * theta;
  std::int64_t best = 0;
  for (std::int64_t i = 1; i < vals.size(); ++i)
    if (vals[i] > vals[best]) best = i;  // strict: ties keep the first plane
  return best;
}

Eigen::VectorXd PiecewiseAffineFunction::gradient_ae(
    const Eigen::VectorXd& theta) const {
  return slopes_.row(active_plane(theta)).transpose();
}

namespace {

// decode a flat grid index into coordinates, last axis fastest
void grid_point(std::int64_t flat, int dim, std::int64_t per_axis, double lo,
                double h, Eigen::VectorXd& theta) {
  for (int d = dim - 1; d >= 0; --d) {
    std::int64_t c = flat % per_axis;
    flat /= per_axis;
    theta[d] = lo + (static_cast<double>(c) + 0.5) * h;
  }
}

}  // namespace

double PiecewiseAffineFunction::functional_value(const ProblemSpec& spec,
                                                 int subdivisions,
                                                 bool parallel) const {
  if (subdivisions < 1)
    throw EvaluationError("functional_value: subdivisions must be positive");
  const int dim = source_.dim();
  const std::int64_t per_axis =
      static_cast<std::int64_t>(source_.cells_per_axis()) * subdivisions;
  std::int64_t points = 1;
  for (int d = 0; d < dim; ++d) points *= per_axis;
  const double lo = source_.domain().lower;
  const double h = source_.domain().width() / static_cast<double>(per_axis);
  const double cell = std::pow(h, dim);
  const double box_tol = 1e-6;

  if (!parallel) {
    Eigen::VectorXd theta(dim), vals(plane_count());
    double sum = 0.0;
    for (std::int64_t p = 0; p < points; ++p) {
      grid_point(p, dim, per_axis, lo, h, theta);
      vals.noalias() = slopes_ * theta;
      vals += intercepts_;
      std::int64_t best = 0;
      for (std::int64_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best]) best = i;
      sum += evaluate_integrand(spec, theta, vals[best],
                                slopes_.row(best).transpose(), box_tol);
    }
    return cell * sum;
  }

#ifdef _OPENMP
  parallel::apply_thread_cap();
  const int threads = parallel::max_threads();
  std::vector<double> partial(threads, 0.0);
#pragma omp parallel num_threads(threads)
  {
    Eigen::VectorXd theta(dim), vals(plane_count());
    double local = 0.0;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < points; ++p) {
      grid_point(p, dim, per_axis, lo, h, theta);
      vals.noalias() = slopes_ * theta;
      vals += intercepts_;
      std::int64_t best = 0;
      for (std::int64_t i = 1; i < vals.size(); ++i)
        if (vals[i] > vals[best]) best = i;
      local += evaluate_integrand(spec, theta, vals[best],
                                  slopes_.row(best).transpose(), box_tol);
    }
    partial[omp_get_thread_num()] = local;
  }
  double sum = 0.0;
  for (int t = 0; t < threads; ++t) sum += partial[t];
  return cell * sum;
#else
  return functional_value(spec, subdivisions, false);
#endif
}

void PiecewiseAffineFunction::write_grid_csv(std::ostream& os,
                                             int refinement) const {
  if (refinement < 1)
    throw EvaluationError("write_grid_csv: refinement must be positive");
  const int dim = source_.dim();
  const std::int64_t per_axis =
      static_cast<std::int64_t>(source_.cells_per_axis()) * refinement;
  std::int64_t points = 1;
  for (int d = 0; d < dim; ++d) points *= per_axis;
  const double lo = source_.domain().lower;
  const double h = source_.domain().width() / static_cast<double>(per_axis);

  for (int d = 0; d < dim; ++d) os << "theta_" << d << ",";
  os << "value";
  for (int d = 0; d < dim; ++d) os << ",grad_" << d;
  os << "\n";
  os.precision(17);

  Eigen::VectorXd theta(dim), vals(plane_count());
  for (std::int64_t p = 0; p < points; ++p) {
    grid_point(p, dim, per_axis, lo, h, theta);
    vals.noalias() = slopes_ * theta;
    vals += intercepts_;
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < vals.size(); ++i)
      if (vals[i] > vals[best]) best = i;
    for (int d = 0; d < dim; ++d) os << theta[d] << ",";
    os << vals[best];
    for (int d = 0; d < dim; ++d) os << "," << slopes_(best, d);
    os << "\n";
  }
}

PiecewiseAffineFunction reconstruct(const Lattice& lattice,
                                    const DecisionState& state,
                                    const ReconstructOptions& options) {
  const std::int64_t m = lattice.node_count();
  const int dim = lattice.dim();
  if (state.values.size() != m || state.gradients.rows() != m)
    throw EvaluationError("reconstruct: decision data does not match lattice");

  // pairwise inequalities v_i - v_j + D_i.(theta_j - theta_i) <= tol
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < m; ++j) {
      if (i == j) continue;
      double lhs = state.values[i] - state.values[j];
      for (int d = 0; d < dim; ++d)
        lhs += state.gradients(i, d) *
               (lattice.center(j, d) - lattice.center(i, d));
      if (lhs > options.convexity_tol)
        throw EvaluationError(
            "reconstruct: convexity inequality violated by " +
            std::to_string(lhs) + " at pair (" + std::to_string(i) + "," +
            std::to_string(j) + ")");
    }

  PiecewiseAffineFunction envelope(lattice, state);
  Eigen::VectorXd theta(dim);
  const double tol = options.interpolation_tol + options.convexity_tol;
  for (std::int64_t i = 0; i < m; ++i) {
    for (int d = 0; d < dim; ++d) theta[d] = lattice.center(i, d);
    double e = envelope.evaluate(theta);
    if (std::abs(e - state.values[i]) > tol)
      throw EvaluationError("reconstruct: envelope misses node " +
                            std::to_string(i) + " by " +
                            std::to_string(e - state.values[i]));
  }
  return envelope;
}

PiecewiseAffineFunction reconstruct(const Lattice& lattice,
                                    const Eigen::VectorXd& x_flat,
                                    const ReconstructOptions& options) {
  const DecisionLayout layout{lattice.node_count(), lattice.dim()};
  if (x_flat.size() != layout.size())
    throw EvaluationError("reconstruct: flat vector has wrong length");
  return reconstruct(lattice, DecisionState::from_flat(layout, x_flat),
                     options);
}

}  // namespace cvx
