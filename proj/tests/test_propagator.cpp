#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace starspec;
using Catch::Approx;

namespace {

Mat2 rotation(Complex angle) {
  Mat2 m;
  m << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return m;
}

}  // namespace

TEST_CASE("propagate: identity at x = 0 and free rotation at x = 1") {
  const auto e = testutil::free_edge();
  CHECK((propagate(e, 0.0, Complex(0.7, 0.3)).Y - Mat2::Identity()).norm() < 1e-12);
  for (Complex z : {Complex(1.0), Complex(0.5, 0.8), Complex(-2.0, -0.3)}) {
    const Mat2 y = propagate(e, 1.0, z).Y;
    CHECK((y - rotation(z)).norm() < 1e-9);
  }
}

TEST_CASE("propagate: constant potential p=1 at z=0 gives the hyperbolic rotation") {
  const auto e = testutil::constant_edge(1.0, 0.0);
  const Mat2 y = propagate(e, 1.0, 0.0).Y;
  Mat2 expected;
  expected << std::cosh(1.0), -std::sinh(1.0), -std::sinh(1.0), std::cosh(1.0);
  CHECK((y - expected).norm() < 1e-9);
}

TEST_CASE("propagate: matches the closed-form constant-coefficient exponential") {
  const auto e = testutil::constant_edge(0.4, -0.7, 1.3, 0.3);
  for (Complex z : {Complex(2.0, 0.0), Complex(-1.0, 0.5), Complex(0.3, -1.1)}) {
    const Mat2 y = propagate(e, 1.3, z).Y;
    const Mat2 expected = testutil::constant_edge_propagator(0.4, -0.7, 1.3, z);
    CHECK((y - expected).norm() < 1e-9 * expected.norm());
  }
}

TEST_CASE("propagate_with_derivative: initial condition and free closed form") {
  const auto e = testutil::free_edge();
  const auto r0 = propagate_with_derivative(e, 0.0, Complex(1.0, 2.0));
  CHECK(r0.Ydot->norm() < 1e-12);

  const Complex z(0.8, -0.4);
  const double x = 0.77;
  const auto r = propagate_with_derivative(e, x, z);
  Mat2 expected;
  const Complex a = x * z;
  expected << -std::sin(a), -std::cos(a), std::cos(a), -std::sin(a);
  expected *= x;
  CHECK((*r.Ydot - expected).norm() < 1e-9);
}

TEST_CASE("propagate_with_derivative: central finite-difference oracle") {
  std::mt19937 rng(101);
  const auto e = testutil::random_edge(rng);
  const Complex z(0.9, 0.6);
  const double x = e.length;
  const double h = 1e-5;
  const Mat2 yp = propagate(e, x, z + h, {1e-12, 1e-14}).Y;
  const Mat2 ym = propagate(e, x, z - h, {1e-12, 1e-14}).Y;
  const Mat2 fd = (yp - ym) / (2 * h);
  const Mat2 yd = *propagate_with_derivative(e, x, z, {1e-12, 1e-14}).Ydot;
  CHECK((yd - fd).norm() < 1e-7 * std::max(1.0, fd.norm()));
}

TEST_CASE("free_propagator closed form and cross-check with the integrator") {
  const auto e = testutil::free_edge(1.2, 0.4);
  CHECK((free_propagator(e, 0.0, Complex(3, 1)) - Mat2::Identity()).norm() == 0.0);
  CHECK((free_propagator(e, 0.9, 0.0) - Mat2::Identity()).norm() == 0.0);
  for (Complex z : {Complex(1.5, 0.0), Complex(0.2, 0.9)}) {
    const Mat2 a = free_propagator(e, 1.2, z);
    const Mat2 b = propagate(e, 1.2, z).Y;
    CHECK((a - b).norm() < 1e-9 * a.norm());
  }
}

TEST_CASE("symplectic, Lagrange, conjugation, and determinant identities") {
  std::mt19937 rng(2024);
  const Mat2 J = symplectic_unit();
  for (int trial = 0; trial < 12; ++trial) {
    const auto e = testutil::random_edge(rng);
    const Complex z = testutil::random_z(rng);
    const Complex zeta = testutil::random_z(rng);
    std::uniform_real_distribution<double> xr(0.1, e.length);
    const double x = xr(rng);
    const OdeOptions tight{1e-12, 1e-14};

    const Mat2 Yz = propagate(e, x, z, tight).Y;
    const Mat2 Yzbar = propagate(e, x, std::conj(z), tight).Y;

    // conjugation symmetry Y(x, conj z) = conj Y(x, z)
    CHECK((Yzbar - Yz.conjugate()).norm() < 1e-9 * Yz.norm());

    // det Y = 1
    CHECK(std::abs(Yz.determinant() - Complex(1.0)) < 1e-9 * Yz.squaredNorm());

    // symplectic identity Y(x, conj z)^* J Y(x, z) = J
    CHECK((Yzbar.adjoint() * J * Yz - J).norm() < 1e-8 * Yz.squaredNorm());

    // Lagrange identity against Simpson quadrature of int Y(.,zeta)^* Y(.,z)
    const int npts = 801;
    std::vector<double> xs(npts);
    for (int i = 0; i < npts; ++i) xs[i] = x * double(i) / (npts - 1);
    const auto yz = propagate_grid(e, xs, z, false, tight);
    const auto yzeta = propagate_grid(e, xs, zeta, false, tight);
    std::vector<Mat2> prods(npts);
    for (int i = 0; i < npts; ++i) prods[i] = yzeta[i].Y.adjoint() * yz[i].Y;
    const Mat2 integral = simpson(prods, xs[1] - xs[0]);
    const Mat2 lhs = J - propagate(e, x, zeta, tight).Y.adjoint() * J * Yz;
    const Mat2 rhs = (z - std::conj(zeta)) * integral;
    CHECK((lhs - rhs).norm() < 1e-8 * std::max(1.0, rhs.norm()));
  }
}

TEST_CASE("propagate: error on x outside the edge and unsorted grids") {
  const auto e = testutil::free_edge();
  CHECK_THROWS_AS(propagate(e, 1.5, Complex(0.0)), ValidationError);
  std::vector<double> bad{0.5, 0.2};
  CHECK_THROWS_AS(propagate_grid(e, bad, Complex(0.0)), ValidationError);
}

TEST_CASE("diagonalized_residual: free, constant, and conjugation invariance") {
  const auto free_e = testutil::free_edge();
  CHECK(diagonalized_residual(free_e, 1.0, Complex(1.2, 0.4)) < 1e-10);

  const auto const_e = testutil::constant_edge(1.0, 0.0);
  CHECK(diagonalized_residual(const_e, 1.0, Complex(0.7, 0.2)) < 1e-9);

  std::mt19937 rng(5);
  const auto e = testutil::random_edge(rng);
  const Complex z(0.6, 0.8);
  const double r1 = diagonalized_residual(e, e.length, z);
  const double r2 = diagonalized_residual(e, e.length, std::conj(z));
  CHECK(r1 == Approx(r2).margin(1e-10));
}
