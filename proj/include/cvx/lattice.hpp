#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cvx {

// Axis-aligned cube [lower, upper]^dim of agent types.
struct Domain {
  double lower;
  double upper;
  int dim;

  Domain(double lower, double upper, int dim);

  double width() const { return upper - lower; }
  double volume() const;
  bool contains(std::span<const double> point, double tol = 0.0) const;
};

// Uniform grid of cell centers over a Domain: cells_per_axis cells along each
// axis, so cells_per_axis^dim nodes total.  Node order is row-major over the
// multi-index with the LAST axis varying fastest.
class Lattice {
 public:
  static constexpr std::int64_t kDefaultNodeBudget = 100000;

  Lattice(const Domain& domain, int cells_per_axis,
          std::int64_t node_budget = kDefaultNodeBudget);

  const Domain& domain() const { return domain_; }
  int cells_per_axis() const { return cells_; }
  int dim() const { return domain_.dim; }
  std::int64_t node_count() const { return node_count_; }

  // Grid spacing (upper-lower)/cells_per_axis, identical on every axis.
  double spacing() const { return spacing_; }
  // Volume of one cell, spacing^dim.
  double cell_volume() const { return cell_volume_; }

  std::span<const double> center(std::int64_t node) const {
    return {centers_.data() + node * dim(), static_cast<size_t>(dim())};
  }
  double center(std::int64_t node, int axis) const {
    return centers_[node * dim() + axis];
  }

  std::int64_t flat_index(std::span<const int> multi) const;
  void multi_index(std::int64_t node, std::span<int> out) const;

  // Nodes whose multi-index touches 0 or cells_per_axis-1 on some axis.
  std::vector<std::int64_t> boundary_nodes() const;

 private:
  Domain domain_;
  int cells_;
  std::int64_t node_count_;
  double spacing_;
  double cell_volume_;
  std::vector<double> centers_;  // node-major, dim doubles per node
};

}  // namespace cvx
