#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace cvx {

// Index map for the flat unknown vector x = (v_1..v_m, D_1..D_m): node
// values first, then per-node gradients in node-major order.
struct DecisionLayout {
  std::int64_t node_count = 0;
  int dim = 0;

  std::int64_t size() const { return node_count * (1 + dim); }
  std::int64_t v_index(std::int64_t node) const { return node; }
  std::int64_t d_index(std::int64_t node, int axis) const {
    return node_count + node * dim + axis;
  }
};

// Unpacked view of a decision vector: one value and one gradient per node.
struct DecisionState {
  Eigen::VectorXd values;     // m
  Eigen::MatrixXd gradients;  // m x n, row i is D_i

  static DecisionState from_flat(const DecisionLayout& layout,
                                 const Eigen::VectorXd& x);
  Eigen::VectorXd to_flat(const DecisionLayout& layout) const;
};

}  // namespace cvx
