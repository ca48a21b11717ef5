#include "cvx/lattice.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cvx/errors.hpp"

namespace cvx {

Domain::Domain(double lower, double upper, int dim)
    : lower(lower), upper(upper), dim(dim) {
  if (!(lower < upper))
    throw std::invalid_argument("Domain: lower bound must be < upper bound");
  if (dim < 1 || dim > 4)
    throw std::invalid_argument("Domain: dimension must be between 1 and 4");
}

double Domain::volume() const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= width();
  return v;
}

bool Domain::contains(std::span<const double> point, double tol) const {
  if (static_cast<int>(point.size()) != dim) return false;
  for (double c : point)
    if (c < lower - tol || c > upper + tol) return false;
  return true;
}

Lattice::Lattice(const Domain& domain, int cells_per_axis,
                 std::int64_t node_budget)
    : domain_(domain), cells_(cells_per_axis) {
  if (cells_ < 1)
    throw std::invalid_argument("Lattice: cells_per_axis must be positive");

  node_count_ = 1;
  for (int d = 0; d < domain_.dim; ++d) {
    node_count_ *= cells_;
    if (node_count_ > node_budget)
      throw CapacityError("Lattice: " + std::to_string(cells_) + "^" +
                          std::to_string(domain_.dim) +
                          " nodes exceeds the budget of " +
                          std::to_string(node_budget));
  }

  spacing_ = domain_.width() / cells_;
  cell_volume_ = 1.0;
  for (int d = 0; d < domain_.dim; ++d) cell_volume_ *= spacing_;

  centers_.resize(node_count_ * domain_.dim);
  std::vector<int> multi(domain_.dim, 0);
  for (std::int64_t node = 0; node < node_count_; ++node) {
    for (int d = 0; d < domain_.dim; ++d)
      centers_[node * domain_.dim + d] =
          domain_.lower + (multi[d] + 0.5) * spacing_;
    // advance the multi-index, last axis fastest
    for (int d = domain_.dim - 1; d >= 0; --d) {
      if (++multi[d] < cells_) break;
      multi[d] = 0;
    }
  }
}

std::int64_t Lattice::flat_index(std::span<const int> multi) const {
  if (static_cast<int>(multi.size()) != dim())
    throw std::invalid_argument("flat_index: wrong multi-index length");
  std::int64_t flat = 0;
  for (int d = 0; d < dim(); ++d) {
    if (multi[d] < 0 || multi[d] >= cells_)
      throw std::out_of_range("flat_index: multi-index out of range");
    flat = flat * cells_ + multi[d];
  }
  return flat;
}

void Lattice::multi_index(std::int64_t node, std::span<int> out) const {
  if (node < 0 || node >= node_count_)
    throw std::out_of_range("multi_index: node out of range");
  if (static_cast<int>(out.size()) != dim())
    throw std::invalid_argument("multi_index: wrong output length");
  for (int d = dim() - 1; d >= 0; --d) {
    out[d] = static_cast<int>(node % cells_);
    node /= cells_;
  }
}

std::vector<std::int64_t> Lattice::boundary_nodes() const {
  std::vector<std::int64_t> result;
  std::vector<int> multi(dim());
  for (std::int64_t node = 0; node < node_count_; ++node) {
    multi_index(node, multi);
    for (int d = 0; d < dim(); ++d) {
      if (multi[d] == 0 || multi[d] == cells_ - 1) {
        result.push_back(node);
        break;
      }
    }
  }
  return result;
}

}  // namespace cvx
