#include "cvx/lattice.hpp"

#include <cmath>
#include <random>
#include <set>

#include "cvx/errors.hpp"
#include "doctest.h"

using cvx::Domain;
using cvx::Lattice;

TEST_CASE("unit square with two cells per axis") {
  Lattice lat(Domain(1.0, 2.0, 2), 2);
  REQUIRE(lat.node_count() == 4);
  CHECK(lat.cell_volume() == 0.25);
  CHECK(lat.spacing() == 0.5);

  // row-major, last axis fastest
  CHECK(lat.center(0, 0) == 1.25);
  CHECK(lat.center(0, 1) == 1.25);
  CHECK(lat.center(1, 0) == 1.25);
  CHECK(lat.center(1, 1) == 1.75);
  CHECK(lat.center(2, 0) == 1.75);
  CHECK(lat.center(2, 1) == 1.25);
  CHECK(lat.center(3, 0) == 1.75);
  CHECK(lat.center(3, 1) == 1.75);
}

TEST_CASE("one dimensional centers") {
  Lattice lat(Domain(0.0, 1.0, 1), 4);
  REQUIRE(lat.node_count() == 4);
  CHECK(lat.center(0, 0) == 0.125);
  CHECK(lat.center(1, 0) == 0.375);
  CHECK(lat.center(2, 0) == 0.625);
  CHECK(lat.center(3, 0) == 0.875);
}

TEST_CASE("17 cells per axis on the unit square") {
  Lattice lat(Domain(1.0, 2.0, 2), 17);
  CHECK(lat.node_count() == 289);
  CHECK(lat.cell_volume() == doctest::Approx(1.0 / 289.0).epsilon(1e-15));
  // centers stay strictly inside the domain
  for (std::int64_t i = 0; i < lat.node_count(); ++i) {
    CHECK(lat.center(i, 0) > 1.0);
    CHECK(lat.center(i, 1) < 2.0);
  }
}

TEST_CASE("flat and multi index round-trip") {
  std::mt19937_64 rng(7);
  for (int dim = 1; dim <= 4; ++dim) {
    for (int k : {1, 2, 3, 5}) {
      Lattice lat(Domain(-1.0, 3.0, dim), k);
      std::vector<int> multi(dim);
      for (std::int64_t node = 0; node < lat.node_count(); ++node) {
        lat.multi_index(node, multi);
        CHECK(lat.flat_index(multi) == node);
      }
    }
  }
}

TEST_CASE("cell volumes sum to the domain volume") {
  for (int dim : {1, 2, 3}) {
    for (int k : {3, 7, 10}) {
      Domain dom(0.5, 2.5, dim);
      Lattice lat(dom, k);
      double total = lat.cell_volume() * static_cast<double>(lat.node_count());
      CHECK(std::abs(total - dom.volume()) <= 1e-12 * dom.volume());
    }
  }
}

TEST_CASE("refined cells nest inside coarse cells") {
  for (int dim : {1, 2}) {
    for (int k : {2, 5}) {
      Domain dom(1.0, 2.0, dim);
      Lattice coarse(dom, k);
      Lattice fine(dom, 2 * k);
      std::vector<int> multi(dim), coarse_multi(dim);
      for (std::int64_t node = 0; node < fine.node_count(); ++node) {
        fine.multi_index(node, multi);
        for (int d = 0; d < dim; ++d) coarse_multi[d] = multi[d] / 2;
        std::int64_t owner = coarse.flat_index(coarse_multi);
        for (int d = 0; d < dim; ++d) {
          double gap = std::abs(fine.center(node, d) - coarse.center(owner, d));
          CHECK(gap <= coarse.spacing() / 2 + 1e-15);
        }
      }
    }
  }
}

TEST_CASE("boundary nodes") {
  SUBCASE("2x2: every node touches the boundary") {
    Lattice lat(Domain(0.0, 1.0, 2), 2);
    CHECK(lat.boundary_nodes().size() == 4);
  }
  SUBCASE("3x3: all but the middle node") {
    Lattice lat(Domain(0.0, 1.0, 2), 3);
    auto b = lat.boundary_nodes();
    CHECK(b.size() == 8);
    std::set<std::int64_t> bs(b.begin(), b.end());
    CHECK(!bs.count(4));  // center of the 3x3 grid
  }
  SUBCASE("1-D: the two end nodes") {
    Lattice lat(Domain(0.0, 1.0, 1), 4);
    auto b = lat.boundary_nodes();
    REQUIRE(b.size() == 2);
    CHECK(b[0] == 0);
    CHECK(b[1] == 3);
  }
}

TEST_CASE("node budget is enforced") {
  CHECK_THROWS_AS(Lattice(Domain(0.0, 1.0, 4), 18), cvx::CapacityError);
  CHECK_THROWS_AS(Lattice(Domain(0.0, 1.0, 2), 4, 10), cvx::CapacityError);
  // right at the default budget boundary: 10^5 nodes in 1-D is fine
  CHECK_NOTHROW(Lattice(Domain(0.0, 1.0, 1), 100000));
}

TEST_CASE("invalid domains are rejected") {
  CHECK_THROWS_AS(Domain(1.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Domain(2.0, 1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Domain(0.0, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Domain(0.0, 1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(Lattice(Domain(0.0, 1.0, 1), 0), std::invalid_argument);
}
