#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cvx/constraints.hpp"
#include "cvx/errors.hpp"
#include "cvx/pwa.hpp"

using namespace cvx;

namespace {

Eigen::VectorXd point1(double a) {
  Eigen::VectorXd p(1);
  p << a;
  return p;
}

Eigen::VectorXd point2(double a, double b) {
  Eigen::VectorXd p(2);
  p << a, b;
  return p;
}

// exact samples of quadratic_scale/2 * |theta - center|^2 with its gradients
DecisionState quadratic_samples(const Lattice& lat,
                                const Eigen::VectorXd& center, double c) {
  DecisionState s;
  s.values.resize(lat.node_count());
  s.gradients.resize(lat.node_count(), lat.dim());
  for (std::int64_t i = 0; i < lat.node_count(); ++i) {
    double dist2 = 0.0;
    for (int d = 0; d < lat.dim(); ++d) {
      double diff = lat.center(i, d) - center[d];
      dist2 += diff * diff;
      s.gradients(i, d) = 2.0 * c * diff;
    }
    s.values[i] = c * dist2;
  }
  return s;
}

ProblemSpec segment_spec() {
  return ProblemSpec(Domain(1.0, 2.0, 1), GradientBox::cube(0.0, 3.0, 1),
                     CostModel::quadratic(), Density::uniform(),
                     Sense::maximize_surplus);
}

}  // namespace

TEST_CASE("two-plane envelope evaluates like the hand computation") {
  Lattice lat(Domain(0.0, 1.0, 1), 2);  // nodes at 0.25 and 0.75
  DecisionState s;
  s.values = point2(0.0, 0.25);
  s.gradients.resize(2, 1);
  s.gradients << 0.0, 1.0;
  PiecewiseAffineFunction f(lat, s);

  // planes are 0 and theta - 0.5, envelope is their maximum
  CHECK(f.plane_count() == 2);
  CHECK(f.intercepts()[0] == doctest::Approx(0.0));
  CHECK(f.intercepts()[1] == doctest::Approx(-0.5));
  CHECK(f.evaluate(point1(0.2)) == doctest::Approx(0.0));
  CHECK(f.evaluate(point1(0.9)) == doctest::Approx(0.4));
  CHECK(f.evaluate(point1(0.25)) == doctest::Approx(0.0));
  CHECK(f.evaluate(point1(0.75)) == doctest::Approx(0.25));
  CHECK(f.active_plane(point1(0.9)) == 1);
  CHECK(f.gradient_ae(point1(0.9))[0] == doctest::Approx(1.0));
  CHECK(f.gradient_ae(point1(0.2))[0] == doctest::Approx(0.0));
}

TEST_CASE("ties resolve to the smallest plane index") {
  Lattice lat(Domain(0.0, 1.0, 1), 2);
  DecisionState s;
  s.values = point2(0.0, 0.25);
  s.gradients.resize(2, 1);
  s.gradients << 0.0, 1.0;
  PiecewiseAffineFunction f(lat, s);
  // both planes equal zero at theta = 0.5
  CHECK(f.active_plane(point1(0.5)) == 0);

  // two copies of the same plane: the first one wins everywhere
  DecisionState dup;
  dup.values = point2(0.25, 0.75);
  dup.gradients.resize(2, 1);
  dup.gradients << 1.0, 1.0;
  PiecewiseAffineFunction g(lat, dup);
  CHECK(g.active_plane(point1(0.1)) == 0);
  CHECK(g.active_plane(point1(0.9)) == 0);
}

TEST_CASE("envelope dominates every plane and interpolates the nodes") {
  Lattice lat(Domain(1.0, 2.0, 2), 5);
  Eigen::VectorXd x =
      sample_convex_quadratic(lat, 0.7, point2(1.2, 1.6), 0.05);
  DecisionLayout layout{lat.node_count(), lat.dim()};
  DecisionState s = DecisionState::from_flat(layout, x);
  PiecewiseAffineFunction f = reconstruct(lat, s);

  Eigen::VectorXd theta(2);
  for (std::int64_t i = 0; i < lat.node_count(); ++i) {
    theta << lat.center(i, 0), lat.center(i, 1);
    CHECK(f.evaluate(theta) == doctest::Approx(s.values[i]).epsilon(1e-9));
  }

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(1.0, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    theta << u(rng), u(rng);
    double env = f.evaluate(theta);
    for (std::int64_t i = 0; i < lat.node_count(); ++i) {
      double plane = f.intercepts()[i] + f.slopes().row(i).dot(theta);
      CHECK(env >= plane - 1e-12);
    }
  }
}

TEST_CASE("reconstruct rejects broken convexity data") {
  Lattice lat(Domain(1.0, 2.0, 1), 4);
  Eigen::VectorXd x = sample_convex_quadratic(lat, 1.0, point1(1.0), 0.0);
  DecisionLayout layout{lat.node_count(), lat.dim()};

  SUBCASE("a lifted value breaks a pairwise inequality") {
    Eigen::VectorXd bad = x;
    bad[layout.v_index(1)] += 1.0;
    CHECK_THROWS_AS(reconstruct(lat, bad), EvaluationError);
  }
  SUBCASE("tiny violations inside the tolerance are accepted") {
    Eigen::VectorXd nearly = x;
    nearly[layout.v_index(1)] += 1e-9;
    CHECK_NOTHROW(reconstruct(lat, nearly));
  }
  SUBCASE("mismatched sizes are rejected") {
    CHECK_THROWS_AS(reconstruct(lat, Eigen::VectorXd::Zero(3)),
                    EvaluationError);
  }
}

TEST_CASE("gradient error shrinks about linearly with the grid") {
  Eigen::VectorXd center = point2(1.3, 1.1);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(1.05, 1.95);
  std::vector<Eigen::VectorXd> probes;
  for (int i = 0; i < 40; ++i) probes.push_back(point2(u(rng), u(rng)));

  auto sup_error = [&](int k) {
    Lattice lat(Domain(1.0, 2.0, 2), k);
    PiecewiseAffineFunction f(lat, quadratic_samples(lat, center, 0.5));
    double worst = 0.0;
    for (const auto& p : probes) {
      Eigen::VectorXd exact = 1.0 * (p - center);  // gradient of 0.5|.|^2
      worst = std::max(worst,
                       (f.gradient_ae(p) - exact).lpNorm<Eigen::Infinity>());
    }
    return worst;
  };

  double e8 = sup_error(8);
  double e16 = sup_error(16);
  double e32 = sup_error(32);
  CHECK(e16 <= 0.75 * e8);
  CHECK(e32 <= 0.75 * e16);
}

TEST_CASE("functional value approaches the closed form on exact samples") {
  // On [1,2] with unit density, quadratic transport cost and profile
  // u(theta) = (theta-1)^2 the integral of u - theta u' + u'^2/2 is -2/3.
  ProblemSpec spec = segment_spec();
  Lattice lat(spec.domain, 40);
  PiecewiseAffineFunction f(lat, quadratic_samples(lat, point1(1.0), 1.0));

  double coarse = f.functional_value(spec, 1);
  double mid = f.functional_value(spec, 8);
  double fine = f.functional_value(spec, 32);
  CHECK(fine == doctest::Approx(-2.0 / 3.0).epsilon(5e-3));
  // quadrature self-convergence toward the most refined grid
  CHECK(std::abs(mid - fine) <= std::abs(coarse - fine) + 1e-12);
  CHECK(std::abs(mid - fine) <= 1e-3);
}

TEST_CASE("parallel and serial quadrature agree") {
  ProblemSpec spec = segment_spec();
  Lattice lat(spec.domain, 13);
  PiecewiseAffineFunction f(lat, quadratic_samples(lat, point1(1.0), 1.0));
  double par = f.functional_value(spec, 4, true);
  double ser = f.functional_value(spec, 4, false);
  CHECK(par == doctest::Approx(ser).epsilon(1e-13));
}

TEST_CASE("grid export has the advertised shape") {
  Lattice lat(Domain(0.0, 1.0, 2), 3);
  PiecewiseAffineFunction f(lat, quadratic_samples(lat, point2(0.5, 0.5), 1.0));
  std::ostringstream os;
  f.write_grid_csv(os, 2);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "theta_0,theta_1,value,grad_0,grad_1");
  std::int64_t rows = 0;
  std::string first;
  while (std::getline(is, line)) {
    if (rows == 0) first = line;
    ++rows;
  }
  CHECK(rows == 36);  // (3 cells * 2 refinements)^2
  // first point is the midpoint of the first fine cell
  double t0 = 0.0, t1 = 0.0;
  std::sscanf(first.c_str(), "%lf,%lf", &t0, &t1);
  CHECK(t0 == doctest::Approx(1.0 / 12.0));
  CHECK(t1 == doctest::Approx(1.0 / 12.0));
}
