#ifndef STARSPEC_CORE_HPP
#define STARSPEC_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace starspec {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

inline constexpr double pi = 3.14159265358979323846;

/// Symplectic unit J = [[0,-1],[1,0]] of the Dirac-Krein expression -J d/dx + V.
inline Mat2 symplectic_unit() {
  Mat2 j;
  j << 0.0, -1.0, 1.0, 0.0;
  return j;
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input or invariant violation (bad config, invalid matrices, out-of-range x).
struct ValidationError : Error {
  using Error::Error;
};

/// Numerical failure (step underflow, non-stabilization, clustered roots).
struct NumericError : Error {
  using Error::Error;
};

/// Evaluation requested at (or too close to) a pole / spectral point.
struct PoleError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Robin parameter tau in R u {infinity}
// ---------------------------------------------------------------------------

/// Extended-real Robin parameter. +inf and -inf denote the same condition and
/// both normalize to the single infinite value.
struct Tau {
  double value = 0.0;
  bool infinite = false;

  static Tau finite(double v) { return Tau{v, false}; }
  static Tau inf() { return Tau{0.0, true}; }

  bool is_zero() const { return !infinite && value == 0.0; }
  /// 1/tau with the convention 1/inf = 0.
  double reciprocal() const { return infinite ? 0.0 : 1.0 / value; }

  bool operator==(const Tau& o) const {
    return infinite == o.infinite && (infinite || value == o.value);
  }
  std::string str() const { return infinite ? "inf" : std::to_string(value); }
};

// ---------------------------------------------------------------------------
// Small numerics shared by several modules
// ---------------------------------------------------------------------------

/// Composite Simpson rule on a uniform grid. Requires an odd number of nodes.
template <typename T>
T simpson(const std::vector<T>& f, double h) {
  const std::size_t n = f.size();
  if (n < 3 || n % 2 == 0)
    throw ValidationError("simpson: need an odd number of nodes >= 3");
  T acc = f.front() + f.back();
  for (std::size_t i = 1; i + 1 < n; ++i) acc += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

/// Brent-style root refinement on a bracketing interval [a,b], f(a)*f(b) <= 0.
inline double refine_root(const std::function<double(double)>& f, double a, double b,
                          double fa, double fb, double xtol, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) throw NumericError("refine_root: interval does not bracket");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      // inverse quadratic / secant step
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

/// FNV-1a over raw bytes; used to fingerprint graphs in Spectrum descriptors.
inline std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t seed = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t hash_doubles(const std::vector<double>& v, std::uint64_t seed = 1469598103934665603ull) {
  return v.empty() ? seed : fnv1a(v.data(), v.size() * sizeof(double), seed);
}

}  // namespace starspec

#endif  // STARSPEC_CORE_HPP
