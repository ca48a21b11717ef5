#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "cvx/decision.hpp"
#include "cvx/lattice.hpp"
#include "cvx/problem.hpp"

namespace cvx {

enum class RowKind : std::uint8_t {
  nonneg,      // -v_i <= 0
  feas_lower,  // -D_{i,d} <= -lower_d
  feas_upper,  //  D_{i,d} <=  upper_d
  convexity,   //  v_i - v_j + D_i.(theta_j - theta_i) <= 0
  dirichlet,   //  paired pin rows on boundary nodes
  bound,       //  v_i <= upper_bound_v
};

const char* row_kind_name(RowKind kind);

struct RowTag {
  RowKind kind;
  std::int32_t i = -1;  // node index (first of the pair for convexity rows)
  std::int32_t j = -1;  // second node, or axis for per-axis rows
};

// Rows of A x <= b stored in CSR form.
class ConstraintSystem {
 public:
  explicit ConstraintSystem(std::int64_t cols) : cols_(cols) {
    row_ptr_.push_back(0);
  }

  std::int64_t rows() const { return static_cast<std::int64_t>(rhs_.size()); }
  std::int64_t cols() const { return cols_; }
  std::int64_t nonzeros() const {
    return static_cast<std::int64_t>(values_.size());
  }

  void reserve(std::int64_t rows, std::int64_t nonzeros);

  std::int64_t append_row(std::span<const std::int32_t> cols,
                          std::span<const double> values, double rhs,
                          RowTag tag);

  // Appends `count` rows whose entries are filled later through raw spans;
  // every row gets `nnz_per_row` coefficient slots.  Returns the first new
  // row index.  Used for bulk (possibly parallel) assembly.
  std::int64_t append_uniform_rows(std::int64_t count, int nnz_per_row);

  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> rhs() const { return rhs_; }
  std::span<const RowTag> tags() const { return tags_; }

  std::span<std::int32_t> col_idx_mutable() { return col_idx_; }
  std::span<double> values_mutable() { return values_; }
  std::span<double> rhs_mutable() { return rhs_; }
  std::span<RowTag> tags_mutable() { return tags_; }

  // rhs - A x for one row
  double slack(std::int64_t row, const Eigen::VectorXd& x) const;

 private:
  std::int64_t cols_;
  std::vector<std::int64_t> row_ptr_;
  std::vector<std::int32_t> col_idx_;
  std::vector<double> values_;
  std::vector<double> rhs_;
  std::vector<RowTag> tags_;
};

struct AssembleOptions {
  std::int64_t row_budget = 10'000'000;
};

// Builds the full inequality system for a lattice program: nonnegativity,
// gradient box, all ordered-pair convexity rows, then any Dirichlet pins and
// the optional value cap from the spec.
ConstraintSystem assemble(const Lattice& lattice, const ProblemSpec& spec,
                          const AssembleOptions& options = {});

struct Violation {
  std::int64_t row;
  RowTag tag;
  double amount;  // A x - rhs, positive
};

std::vector<Violation> check_feasible(const ConstraintSystem& system,
                                      const Eigen::VectorXd& x, double tol);

// State sampled from the quadratic v(theta) = curvature*|theta-center|^2 +
// offset with its exact gradients.  Convexity rows hold with strict slack
// curvature*|theta_i-theta_j|^2.
Eigen::VectorXd sample_convex_quadratic(const Lattice& lattice,
                                        double curvature,
                                        const Eigen::VectorXd& center,
                                        double offset);

// Strictly feasible interior point for the assembled system: a convex
// quadratic whose gradients sit well inside the gradient box.  Throws
// std::runtime_error when no strictly interior point can be constructed
// (degenerate gradient set, incompatible pins).
Eigen::VectorXd strictly_feasible_start(const Lattice& lattice,
                                        const ProblemSpec& spec);

// Text dump, one "A row col value" line per coefficient followed by one
// "b row rhs" line per row.
void dump_system(const ConstraintSystem& system, std::ostream& out);

}  // namespace cvx
