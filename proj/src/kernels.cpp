#include "cvx/kernels.hpp"

#include <cmath>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cvx/parallel.hpp"

namespace cvx::kernels {

namespace {

// Compensated row slack b - a.x.  Near an optimum the slack is many orders
// below the terms forming it, and the plain dot's rounding noise becomes the
// accuracy floor of the barrier gradient; exact FMA products plus Neumaier
// summation keep the slack correct to about one ulp of its own size.
inline double row_slack(std::span<const std::int32_t> cols,
                        std::span<const double> vals, const double* x,
                        std::int64_t begin, std::int64_t end, double rhs) {
  double sum = rhs;
  double comp = 0.0;
  for (std::int64_t idx = begin; idx < end; ++idx) {
    const double p = -vals[idx] * x[cols[idx]];
    comp += std::fma(-vals[idx], x[cols[idx]], -p);  // exact product residue
    const double t = sum + p;
    comp += (std::abs(sum) >= std::abs(p)) ? (sum - t) + p : (p - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

double compute_slacks_serial(const ConstraintSystem& system,
                             const Eigen::VectorXd& x,
                             Eigen::VectorXd& slacks) {
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const auto rhs = system.rhs();
  const std::int64_t rows = system.rows();
  slacks.resize(rows);
  double min_slack = std::numeric_limits<double>::infinity();
  for (std::int64_t r = 0; r < rows; ++r) {
    slacks[r] = row_slack(cols, vals, x.data(), row_ptr[r], row_ptr[r + 1],
                          rhs[r]);
    min_slack = std::min(min_slack, slacks[r]);
  }
  return min_slack;
}

double compute_slacks(const ConstraintSystem& system, const Eigen::VectorXd& x,
                      Eigen::VectorXd& slacks) {
#ifndef _OPENMP
  return compute_slacks_serial(system, x, slacks);
#else
  parallel::apply_thread_cap();
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const auto rhs = system.rhs();
  const std::int64_t rows = system.rows();
  slacks.resize(rows);
  double min_slack = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : min_slack)
  for (std::int64_t r = 0; r < rows; ++r) {
    slacks[r] = row_slack(cols, vals, x.data(), row_ptr[r], row_ptr[r + 1],
                          rhs[r]);
    min_slack = std::min(min_slack, slacks[r]);
  }
  return min_slack;
#endif
}

double barrier_value(const Eigen::VectorXd& slacks, double mu) {
  double sum = 0.0;
  for (std::int64_t r = 0; r < slacks.size(); ++r) {
    if (slacks[r] <= 0.0) return std::numeric_limits<double>::infinity();
    sum += std::log(slacks[r]);
  }
  return -mu * sum;
}

void barrier_gradient_serial(const ConstraintSystem& system,
                             const Eigen::VectorXd& slacks, double mu,
                             Eigen::VectorXd& grad) {
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double w = mu / slacks[r];
    for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
      grad[cols[idx]] += w * vals[idx];
  }
}

void barrier_gradient(const ConstraintSystem& system,
                      const Eigen::VectorXd& slacks, double mu,
                      Eigen::VectorXd& grad) {
#ifndef _OPENMP
  barrier_gradient_serial(system, slacks, mu, grad);
#else
  parallel::apply_thread_cap();
  const int threads = parallel::max_threads();
  if (threads <= 1) {
    barrier_gradient_serial(system, slacks, mu, grad);
    return;
  }
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  // per-thread partials merged in thread order keep the result reproducible
  // for a fixed thread count
  std::vector<Eigen::VectorXd> partial(
      threads, Eigen::VectorXd::Zero(grad.size()));
#pragma omp parallel num_threads(threads)
  {
    Eigen::VectorXd& local = partial[omp_get_thread_num()];
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
      const double w = mu / slacks[r];
      for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
        local[cols[idx]] += w * vals[idx];
    }
  }
  for (int t = 0; t < threads; ++t) grad += partial[t];
#endif
}

void barrier_hessian_serial(const ConstraintSystem& system,
                            const Eigen::VectorXd& slacks, double mu,
                            Eigen::MatrixXd& hess) {
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  for (std::int64_t r = 0; r < rows; ++r) {
    const double w = mu / (slacks[r] * slacks[r]);
    for (std::int64_t a = row_ptr[r]; a < row_ptr[r + 1]; ++a) {
      const double wa = w * vals[a];
      for (std::int64_t b = row_ptr[r]; b < row_ptr[r + 1]; ++b)
        hess(cols[a], cols[b]) += wa * vals[b];
    }
  }
}

void barrier_hessian(const ConstraintSystem& system,
                     const Eigen::VectorXd& slacks, double mu,
                     Eigen::MatrixXd& hess) {
#ifndef _OPENMP
  barrier_hessian_serial(system, slacks, mu, hess);
#else
  parallel::apply_thread_cap();
  const int threads = parallel::max_threads();
  if (threads <= 1) {
    barrier_hessian_serial(system, slacks, mu, hess);
    return;
  }
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  std::vector<Eigen::MatrixXd> partial(
      threads, Eigen::MatrixXd::Zero(hess.rows(), hess.cols()));
#pragma omp parallel num_threads(threads)
  {
    Eigen::MatrixXd& local = partial[omp_get_thread_num()];
#pragma omp for schedule(static)
    for (std::int64_t r = 0; r < rows; ++r) {
      const double w = mu / (slacks[r] * slacks[r]);
      for (std::int64_t a = row_ptr[r]; a < row_ptr[r + 1]; ++a) {
        const double wa = w * vals[a];
        for (std::int64_t b = row_ptr[r]; b < row_ptr[r + 1]; ++b)
          local(cols[a], cols[b]) += wa * vals[b];
      }
    }
  }
  for (int t = 0; t < threads; ++t) hess += partial[t];
#endif
}

void row_dots_serial(const ConstraintSystem& system, const Eigen::VectorXd& dx,
                     Eigen::VectorXd& out) {
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  out.resize(rows);
  for (std::int64_t r = 0; r < rows; ++r) {
    double ax = 0.0;
    for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
      ax += vals[idx] * dx[cols[idx]];
    out[r] = ax;
  }
}

void row_dots(const ConstraintSystem& system, const Eigen::VectorXd& dx,
              Eigen::VectorXd& out) {
#ifndef _OPENMP
  row_dots_serial(system, dx, out);
#else
  parallel::apply_thread_cap();
  const auto row_ptr = system.row_ptr();
  const auto cols = system.col_idx();
  const auto vals = system.values();
  const std::int64_t rows = system.rows();
  out.resize(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    double ax = 0.0;
    for (std::int64_t idx = row_ptr[r]; idx < row_ptr[r + 1]; ++idx)
      ax += vals[idx] * dx[cols[idx]];
    out[r] = ax;
  }
#endif
}

}  // namespace cvx::kernels
