#include "cvx/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cvx/errors.hpp"

namespace cvx {

DecisionState DecisionState::from_flat(const DecisionLayout& layout,
                                       const Eigen::VectorXd& x) {
  if (x.size() != layout.size())
    throw std::invalid_argument("DecisionState: flat vector length mismatch");
  DecisionState state;
  state.values = x.head(layout.node_count);
  state.gradients.resize(layout.node_count, layout.dim);
  for (std::int64_t i = 0; i < layout.node_count; ++i)
    for (int d = 0; d < layout.dim; ++d)
      state.gradients(i, d) = x[layout.d_index(i, d)];
  return state;
}

Eigen::VectorXd DecisionState::to_flat(const DecisionLayout& layout) const {
  if (values.size() != layout.node_count ||
      gradients.rows() != layout.node_count || gradients.cols() != layout.dim)
    throw std::invalid_argument("DecisionState: shape mismatch");
  Eigen::VectorXd x(layout.size());
  x.head(layout.node_count) = values;
  for (std::int64_t i = 0; i < layout.node_count; ++i)
    for (int d = 0; d < layout.dim; ++d)
      x[layout.d_index(i, d)] = gradients(i, d);
  return x;
}

const char* row_kind_name(RowKind kind) {
  switch (kind) {
    case RowKind::nonneg: return "nonneg";
    case RowKind::feas_lower: return "feas_lower";
    case RowKind::feas_upper: return "feas_upper";
    case RowKind::convexity: return "convexity";
    case RowKind::dirichlet: return "dirichlet";
    case RowKind::bound: return "bound";
  }
  return "unknown";
}

void ConstraintSystem::reserve(std::int64_t rows, std::int64_t nonzeros) {
  row_ptr_.reserve(rows + 1);
  col_idx_.reserve(nonzeros);
  values_.reserve(nonzeros);
  rhs_.reserve(rows);
  tags_.reserve(rows);
}

std::int64_t ConstraintSystem::append_row(std::span<const std::int32_t> cols,
                                          std::span<const double> values,
                                          double rhs, RowTag tag) {
  if (cols.size() != values.size())
    throw std::invalid_argument("append_row: column/value length mismatch");
  for (std::int32_t c : cols)
    if (c < 0 || c >= cols_)
      throw std::out_of_range("append_row: column out of range");
  col_idx_.insert(col_idx_.end(), cols.begin(), cols.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(static_cast<std::int64_t>(col_idx_.size()));
  rhs_.push_back(rhs);
  tags_.push_back(tag);
  return rows() - 1;
}

std::int64_t ConstraintSystem::append_uniform_rows(std::int64_t count,
                                                   int nnz_per_row) {
  std::int64_t first = rows();
  std::int64_t base = static_cast<std::int64_t>(col_idx_.size());
  col_idx_.resize(base + count * nnz_per_row, 0);
  values_.resize(base + count * nnz_per_row, 0.0);
  rhs_.resize(first + count, 0.0);
  tags_.resize(first + count);
  for (std::int64_t r = 0; r < count; ++r)
    row_ptr_.push_back(base + (r + 1) * nnz_per_row);
  return first;
}

double ConstraintSystem::slack(std::int64_t row, const Eigen::VectorXd& x) const {
  double dot = 0.0;
  for (std::int64_t e = row_ptr_[row]; e < row_ptr_[row + 1]; ++e)
    dot += values_[e] * x[col_idx_[e]];
  return rhs_[row] - dot;
}

ConstraintSystem assemble(const Lattice& lattice, const ProblemSpec& spec,
                          const AssembleOptions& options) {
  if (spec.domain.dim != lattice.dim())
    throw std::invalid_argument("assemble: spec/lattice dimension mismatch");

  const std::int64_t m = lattice.node_count();
  const int n = lattice.dim();
  const DecisionLayout layout{m, n};

  std::int64_t boundary = 0;
  if (spec.dirichlet) boundary = static_cast<std::int64_t>(
      lattice.boundary_nodes().size());

  std::int64_t row_count = m + 2 * m * n + m * (m - 1);
  if (spec.dirichlet) {
    if (spec.dirichlet->gradient) row_count += 2 * boundary * n;
    if (spec.dirichlet->value) row_count += 2 * boundary;
  }
  if (spec.upper_bound_v) row_count += m;
  if (row_count > options.row_budget)
    throw CapacityError("assemble: " + std::to_string(row_count) +
                        " rows exceeds the budget of " +
                        std::to_string(options.row_budget));

  ConstraintSystem system(layout.size());
  system.reserve(row_count, m + 2 * m * n + m * (m - 1) * (2 + n) +
                                (spec.dirichlet ? 2 * boundary * (n + 1) : 0) +
                                (spec.upper_bound_v ? m : 0));

  std::int32_t cols[6];
  double vals[6];

  // -v_i <= 0
  for (std::int64_t i = 0; i < m; ++i) {
    cols[0] = static_cast<std::int32_t>(layout.v_index(i));
    vals[0] = -1.0;
    system.append_row({cols, 1}, {vals, 1}, 0.0,
                      {RowKind::nonneg, static_cast<std::int32_t>(i), -1});
  }

  // gradient box, lower then upper
  for (std::int64_t i = 0; i < m; ++i)
    for (int d = 0; d < n; ++d) {
      cols[0] = static_cast<std::int32_t>(layout.d_index(i, d));
      vals[0] = -1.0;
      system.append_row({cols, 1}, {vals, 1}, -spec.gradient_set.lower[d],
                        {RowKind::feas_lower, static_cast<std::int32_t>(i),
                         static_cast<std::int32_t>(d)});
    }
  for (std::int64_t i = 0; i < m; ++i)
    for (int d = 0; d < n; ++d) {
      cols[0] = static_cast<std::int32_t>(layout.d_index(i, d));
      vals[0] = 1.0;
      system.append_row({cols, 1}, {vals, 1}, spec.gradient_set.upper[d],
                        {RowKind::feas_upper, static_cast<std::int32_t>(i),
                         static_cast<std::int32_t>(d)});
    }

  // convexity rows for every ordered pair (i, j), i != j:
  //   v_i - v_j + D_i.(theta_j - theta_i) <= 0
  // Each row stores exactly 2 + n coefficients.  Rows are grouped by i, so
  // the fill is parallel over disjoint output ranges.
  const std::int64_t conv_first = system.append_uniform_rows(m * (m - 1), 2 + n);
  {
    auto col_span = system.col_idx_mutable();
    auto val_span = system.values_mutable();
    auto tag_span = system.tags_mutable();
    auto row_ptr = system.row_ptr();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
      auto theta_i = lattice.center(i);
      for (std::int64_t j = 0; j < m; ++j) {
        if (j == i) continue;
        std::int64_t row = conv_first + i * (m - 1) + (j < i ? j : j - 1);
        std::int64_t e = row_ptr[row];
        col_span[e] = static_cast<std::int32_t>(layout.v_index(i));
        val_span[e] = 1.0;
        col_span[e + 1] = static_cast<std::int32_t>(layout.v_index(j));
        val_span[e + 1] = -1.0;
        for (int d = 0; d < n; ++d) {
          col_span[e + 2 + d] = static_cast<std::int32_t>(layout.d_index(i, d));
          val_span[e + 2 + d] = lattice.center(j, d) - theta_i[d];
        }
        tag_span[row] = {RowKind::convexity, static_cast<std::int32_t>(i),
                         static_cast<std::int32_t>(j)};
      }
    }
  }

  if (spec.dirichlet) {
    const auto& pins = *spec.dirichlet;
    if (pins.tolerance <= 0)
      throw std::invalid_argument("assemble: Dirichlet tolerance must be > 0");
    for (std::int64_t b : lattice.boundary_nodes()) {
      auto node = static_cast<std::int32_t>(b);
      if (pins.gradient) {
        if (pins.gradient->size() != n)
          throw std::invalid_argument("assemble: Dirichlet gradient dimension");
        for (int d = 0; d < n; ++d) {
          double pin = (*pins.gradient)[d];
          cols[0] = static_cast<std::int32_t>(layout.d_index(b, d));
          vals[0] = 1.0;
          system.append_row({cols, 1}, {vals, 1}, pin + pins.tolerance,
                            {RowKind::dirichlet, node,
                             static_cast<std::int32_t>(d)});
          vals[0] = -1.0;
          system.append_row({cols, 1}, {vals, 1}, -(pin - pins.tolerance),
                            {RowKind::dirichlet, node,
                             static_cast<std::int32_t>(d)});
        }
      }
      if (pins.value) {
        double pin = *pins.value;
        cols[0] = static_cast<std::int32_t>(layout.v_index(b));
        vals[0] = 1.0;
        system.append_row({cols, 1}, {vals, 1}, pin + pins.tolerance,
                          {RowKind::dirichlet, node, -1});
        vals[0] = -1.0;
        system.append_row({cols, 1}, {vals, 1}, -(pin - pins.tolerance),
                          {RowKind::dirichlet, node, -1});
      }
    }
  }

  if (spec.upper_bound_v) {
    for (std::int64_t i = 0; i < m; ++i) {
      cols[0] = static_cast<std::int32_t>(layout.v_index(i));
      vals[0] = 1.0;
      system.append_row({cols, 1}, {vals, 1}, *spec.upper_bound_v,
                        {RowKind::bound, static_cast<std::int32_t>(i), -1});
    }
  }

  return system;
}

std::vector<Violation> check_feasible(const ConstraintSystem& system,
                                      const Eigen::VectorXd& x, double tol) {
  if (x.size() != system.cols())
    throw std::invalid_argument("check_feasible: vector length mismatch");
  std::vector<Violation> out;
  for (std::int64_t r = 0; r < system.rows(); ++r) {
    double s = system.slack(r, x);
    if (-s > tol) out.push_back({r, system.tags()[r], -s});
  }
  return out;
}

Eigen::VectorXd sample_convex_quadratic(const Lattice& lattice,
                                        double curvature,
                                        const Eigen::VectorXd& center,
                                        double offset) {
  if (center.size() != lattice.dim())
    throw std::invalid_argument("sample_convex_quadratic: center dimension");
  const std::int64_t m = lattice.node_count();
  const int n = lattice.dim();
  const DecisionLayout layout{m, n};
  Eigen::VectorXd x(layout.size());
  for (std::int64_t i = 0; i < m; ++i) {
    double dist2 = 0.0;
    for (int d = 0; d < n; ++d) {
      double diff = lattice.center(i, d) - center[d];
      dist2 += diff * diff;
      x[layout.d_index(i, d)] = 2.0 * curvature * diff;
    }
    x[layout.v_index(i)] = curvature * dist2 + offset;
  }
  return x;
}

Eigen::VectorXd strictly_feasible_start(const Lattice& lattice,
                                        const ProblemSpec& spec) {
  const GradientBox& q = spec.gradient_set;
  if (q.min_width() <= 1e-12)
    throw std::runtime_error(
        "strictly_feasible_start: gradient set has empty interior");

  const std::int64_t m = lattice.node_count();
  const double width = lattice.domain().width();
  const double mid = 0.5 * (lattice.domain().lower + lattice.domain().upper);

  double offset = 0.01;
  if (spec.upper_bound_v) {
    if (*spec.upper_bound_v <= 0)
      throw std::runtime_error(
          "strictly_feasible_start: value cap leaves no interior");
    offset = std::min(offset, 0.1 * *spec.upper_bound_v);
  }

  // Gradients are aimed at the admissible point closest to zero, pushed a
  // margin into the interior; shrinking the margin flattens the start, which
  // is how a tight value cap is accommodated.
  auto build = [&](double margin_fraction) {
    Eigen::VectorXd target(lattice.dim());
    for (int d = 0; d < lattice.dim(); ++d) {
      double w = q.upper[d] - q.lower[d];
      double nearest_zero = std::clamp(0.0, q.lower[d], q.upper[d]);
      target[d] =
          std::clamp(nearest_zero, q.lower[d] + margin_fraction * w,
                     q.upper[d] - margin_fraction * w);
    }
    double c = 0.5 * margin_fraction * q.min_width() / width;
    Eigen::VectorXd anchor =
        Eigen::VectorXd::Constant(lattice.dim(), mid) - target / (2.0 * c);
    Eigen::VectorXd x = sample_convex_quadratic(lattice, c, anchor, 0.0);
    // shift so the smallest node value is exactly `offset`
    x.head(m).array() += offset - x.head(m).minCoeff();
    return x;
  };

  double margin = 0.25;
  Eigen::VectorXd x = build(margin);
  if (spec.upper_bound_v) {
    int shrink = 0;
    while (x.head(m).maxCoeff() >= 0.9 * *spec.upper_bound_v) {
      margin *= 0.5;
      x = build(margin);
      if (++shrink > 60)
        throw std::runtime_error(
            "strictly_feasible_start: cannot fit under the value cap");
    }
  }

  if (spec.dirichlet) {
    // honor pins exactly; the strict-interior check below decides whether
    // the pinned state still clears every other row
    const DecisionLayout layout{lattice.node_count(), lattice.dim()};
    for (std::int64_t b : lattice.boundary_nodes()) {
      if (spec.dirichlet->gradient)
        for (int d = 0; d < lattice.dim(); ++d)
          x[layout.d_index(b, d)] = (*spec.dirichlet->gradient)[d];
      if (spec.dirichlet->value) x[layout.v_index(b)] = *spec.dirichlet->value;
    }
  }

  ConstraintSystem system = assemble(lattice, spec);
  for (std::int64_t r = 0; r < system.rows(); ++r)
    if (system.slack(r, x) <= 0)
      throw std::runtime_error(
          "strictly_feasible_start: no strictly interior point found (row " +
          std::to_string(r) + ", " +
          row_kind_name(system.tags()[r].kind) + ")");
  return x;
}

void dump_system(const ConstraintSystem& system, std::ostream& out) {
  out << "# rows " << system.rows() << " cols " << system.cols() << "\n";
  auto row_ptr = system.row_ptr();
  auto cols = system.col_idx();
  auto vals = system.values();
  for (std::int64_t r = 0; r < system.rows(); ++r)
    for (std::int64_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e)
      out << "A " << r << " " << cols[e] << " " << vals[e] << "\n";
  for (std::int64_t r = 0; r < system.rows(); ++r)
    out << "b " << r << " " << system.rhs()[r] << "\n";
}

}  // namespace cvx
