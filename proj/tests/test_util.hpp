#ifndef STARSPEC_TEST_UTIL_HPP
#define STARSPEC_TEST_UTIL_HPP

#include <random>

#include "starspec/starspec.hpp"

namespace testutil {

using namespace starspec;

inline EdgeSpec free_edge(double length = 1.0, double alpha = pi / 2) {
  EdgeSpec e;
  e.length = length;
  e.alpha = alpha;
  return e;
}

/// Constant potential edge realized by two samples (piecewise linear, flat).
inline EdgeSpec constant_edge(double p, double q, double length = 1.0, double alpha = 0.0) {
  EdgeSpec e;
  e.length = length;
  e.alpha = alpha;
  e.potential = {{0.0, p, q}, {length, p, q}};
  return e;
}

/// Random mild piecewise-linear edge; amplitudes bounded by `amp`.
inline EdgeSpec random_edge(std::mt19937& rng, double amp = 0.8) {
  std::uniform_real_distribution<double> len(0.5, 1.3);
  std::uniform_real_distribution<double> ang(0.1, pi - 0.1);
  std::uniform_int_distribution<int> nknots(2, 5);
  std::uniform_real_distribution<double> val(-amp, amp);
  EdgeSpec e;
  e.length = len(rng);
  e.alpha = ang(rng);
  const int k = nknots(rng);
  for (int i = 0; i < k; ++i) {
    const double x = e.length * double(i) / double(k - 1);
    e.potential.push_back({x, val(rng), val(rng)});
  }
  return e;
}

inline StarGraph random_graph(std::mt19937& rng, int max_edges = 4, double amp = 0.8) {
  std::uniform_int_distribution<int> ne(1, max_edges);
  StarGraph g;
  const int n = ne(rng);
  for (int j = 0; j < n; ++j) g.edges.push_back(random_edge(rng, amp));
  return g;
}

inline Complex random_z(std::mt19937& rng, double re_max = 3.0, double im_max = 1.0,
                        double im_min = 0.05) {
  std::uniform_real_distribution<double> re(-re_max, re_max);
  std::uniform_real_distribution<double> im(im_min, im_max);
  std::bernoulli_distribution flip;
  const double y = im(rng) * (flip(rng) ? 1.0 : -1.0);
  return {re(rng), y};
}

/// Fundamental matrix of the constant-potential edge in closed form:
/// exp(x J(zI - V)) via the traceless 2x2 exponential.
inline Mat2 constant_edge_propagator(double p, double q, double x, Complex z) {
  Mat2 A;
  A << q, -(z + p), z - p, -q;
  const Complex det = -q * q + (z + p) * (z - p);  // det A = z^2 - p^2 - q^2
  const Complex nu = std::sqrt(det);
  Complex c, s;
  if (std::abs(nu) < 1e-8) {
    c = 1.0 - det * x * x / 2.0;
    s = x * (1.0 - det * x * x / 6.0);
  } else {
    c = std::cos(nu * x);
    s = std::sin(nu * x) / nu;
  }
  return c * Mat2::Identity() + s * A;
}

}  // namespace testutil

#endif
