#ifndef STARSPEC_PROPAGATOR_HPP
#define STARSPEC_PROPAGATOR_HPP

#include <optional>

#include "starspec/graph.hpp"
#include "starspec/rk45.hpp"

namespace starspec {

/// Fundamental matrix Y_j(x,z) of -J Y' + V Y = z Y with Y(0,z) = I, and
/// optionally its z-derivative Ydot, which solves the inhomogeneous system
/// -J Yd' + V Yd - z Yd = Y with Yd(0,z) = 0.
struct PropagatorResult {
  Mat2 Y;
  std::optional<Mat2> Ydot;
  double x = 0.0;
  Complex z = 0.0;
};

namespace detail {

// Coefficient matrix of Y' = A(x,z) Y, i.e. A = J (zI - V).
inline void coeff_entries(const EdgeSpec& edge, double x, Complex z, Complex& a11,
                          Complex& a12, Complex& a21, Complex& a22) {
  const auto [p, q] = sample_potential(edge, x);
  a11 = q;
  a12 = -(z + p);
  a21 = z - p;
  a22 = -q;
}

struct RhsY {
  const EdgeSpec& edge;
  Complex z;
  void operator()(double x, const std::array<Complex, 4>& y, std::array<Complex, 4>& dy) const {
    Complex a11, a12, a21, a22;
    coeff_entries(edge, x, z, a11, a12, a21, a22);
    dy[0] = a11 * y[0] + a12 * y[2];
    dy[1] = a11 * y[1] + a12 * y[3];
    dy[2] = a21 * y[0] + a22 * y[2];
    dy[3] = a21 * y[1] + a22 * y[3];
  }
};

struct RhsYAndDeriv {
  const EdgeSpec& edge;
  Complex z;
  void operator()(double x, const std::array<Complex, 8>& y, std::array<Complex, 8>& dy) const {
    Complex a11, a12, a21, a22;
    coeff_entries(edge, x, z, a11, a12, a21, a22);
    dy[0] = a11 * y[0] + a12 * y[2];
    dy[1] = a11 * y[1] + a12 * y[3];
    dy[2] = a21 * y[0] + a22 * y[2];
    dy[3] = a21 * y[1] + a22 * y[3];
    // Yd' = A Yd + J Y
    dy[4] = a11 * y[4] + a12 * y[6] - y[2];
    dy[5] = a11 * y[5] + a12 * y[7] - y[3];
    dy[6] = a21 * y[4] + a22 * y[6] + y[0];
    dy[7] = a21 * y[5] + a22 * y[7] + y[1];
  }
};

inline Mat2 unpack2(const std::array<Complex, 8>& s, int offset) {
  Mat2 m;
  m << s[offset], s[offset + 1], s[offset + 2], s[offset + 3];
  return m;
}
inline Mat2 unpack2(const std::array<Complex, 4>& s) {
  Mat2 m;
  m << s[0], s[1], s[2], s[3];
  return m;
}

}  // namespace detail

/// Evaluate Y (and optionally Ydot) at every abscissa of the sorted grid `xs`
/// in one integration pass. xs must lie in [0, length].
inline std::vector<PropagatorResult> propagate_grid(const EdgeSpec& edge,
                                                    std::span<const double> xs, Complex z,
                                                    bool with_derivative = false,
                                                    const OdeOptions& opt = {}) {
  edge.validate();
  if (xs.empty()) return {};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0.0 || xs[i] > edge.length)
      throw ValidationError("propagate: x outside [0, length]");
    if (i > 0 && xs[i] < xs[i - 1]) throw ValidationError("propagate: grid must be sorted");
  }
  const double xmax = xs.back();
  const auto knots = edge.interior_knots();
  const auto stops = detail::merge_stops(0.0, xmax, knots, xs);

  std::vector<PropagatorResult> out;
  out.reserve(xs.size());
  std::size_t next = 0;
  const double match_tol = 1e-13 * std::max(1.0, edge.length);

  auto collect = [&](double x, const Mat2& Y, const Mat2* Yd) {
    while (next < xs.size() && xs[next] <= x + match_tol) {
      PropagatorResult r;
      r.Y = Y;
      if (Yd) r.Ydot = *Yd;
      r.x = xs[next];
      r.z = z;
      out.push_back(r);
      ++next;
    }
  };

  if (with_derivative) {
    std::array<Complex, 8> s{1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    detail::dopri5<8>(detail::RhsYAndDeriv{edge, z}, 0.0, xmax, s, stops, opt,
                      [&](double x, const std::array<Complex, 8>& st) {
                        const Mat2 Y = detail::unpack2(st, 0);
                        const Mat2 Yd = detail::unpack2(st, 4);
                        collect(x, Y, &Yd);
                      });
  } else {
    std::array<Complex, 4> s{1.0, 0.0, 0.0, 1.0};
    detail::dopri5<4>(detail::RhsY{edge, z}, 0.0, xmax, s, stops, opt,
                      [&](double x, const std::array<Complex, 4>& st) {
                        const Mat2 Y = detail::unpack2(st);
                        collect(x, Y, nullptr);
                      });
  }
  if (next != xs.size()) throw NumericError("propagate: failed to reach all grid points");
  return out;
}

inline PropagatorResult propagate(const EdgeSpec& edge, double x, Complex z,
                                  const OdeOptions& opt = {}) {
  const double xs[1] = {x};
  return propagate_grid(edge, xs, z, false, opt).front();
}

inline PropagatorResult propagate_with_derivative(const EdgeSpec& edge, double x, Complex z,
                                                  const OdeOptions& opt = {}) {
  const double xs[1] = {x};
  return propagate_grid(edge, xs, z, true, opt).front();
}

/// Closed-form fundamental matrix of the free edge: rotation by angle x z.
inline Mat2 free_propagator(const EdgeSpec& edge, double x, Complex z) {
  if (x < 0.0 || x > edge.length)
    throw ValidationError("free_propagator: x outside [0, length]");
  const Complex c = std::cos(x * z), s = std::sin(x * z);
  Mat2 y;
  y << c, -s, s, c;
  return y;
}

/// Residual of the W-diagonalized system: with H = W* Y W and r = p + i q,
/// H must satisfy i diag(1,-1) H' - [[0,r],[conj r,0]] H - lambda H = 0 with
/// lambda = -z. The check integrates the right-hand side with Simpson over
/// consecutive grid pairs and compares against the increment of i diag(1,-1) H.
inline double diagonalized_residual(const EdgeSpec& edge, double x, Complex z,
                                    int grid_points = 801, const OdeOptions& opt = {}) {
  if (x < 0.0 || x > edge.length)
    throw ValidationError("diagonalized_residual: x outside [0, length]");
  if (x == 0.0) return 0.0;
  int n = std::max(5, grid_points);
  if (n % 2 == 0) ++n;  // even interval count for pairwise Simpson
  std::vector<double> xs(static_cast<std::size_t>(n));
  const double h = x / double(n - 1);
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = double(i) * h;
  const auto ys = propagate_grid(edge, xs, z, false, opt);

  Mat2 W, Wstar, sigma3;
  W << 1.0, 1.0, Complex(0, -1), Complex(0, 1);
  W *= 1.0 / std::sqrt(2.0);
  Wstar = W.adjoint();
  sigma3 << 1.0, 0.0, 0.0, -1.0;
  const Complex lambda = -z;

  auto rhs_at = [&](int i) -> Mat2 {
    const auto [p, q] = sample_potential(edge, xs[static_cast<std::size_t>(i)]);
    Mat2 vw;
    vw << 0.0, Complex(p, q), Complex(p, -q), 0.0;
    const Mat2 H = Wstar * ys[static_cast<std::size_t>(i)].Y * W;
    return (vw + lambda * Mat2::Identity()) * H;
  };

  double worst = 0.0;
  double hmax = 1.0;
  Mat2 f0 = rhs_at(0);
  for (int i = 0; i + 2 < n; i += 2) {
    const Mat2 f1 = rhs_at(i + 1);
    const Mat2 f2 = rhs_at(i + 2);
    const Mat2 H0 = Wstar * ys[static_cast<std::size_t>(i)].Y * W;
    const Mat2 H2 = Wstar * ys[static_cast<std::size_t>(i + 2)].Y * W;
    const Mat2 res = Complex(0, 1) * sigma3 * (H2 - H0) - (h / 3.0) * (f0 + 4.0 * f1 + f2);
    worst = std::max(worst, res.norm());
    hmax = std::max(hmax, std::max(H0.norm(), H2.norm()));
    f0 = f2;
  }
  return worst / (2.0 * h * hmax);
}

}  // namespace starspec

#endif  // STARSPEC_PROPAGATOR_HPP
