#ifndef STARSPEC_RK45_HPP
#define STARSPEC_RK45_HPP

#include <array>
#include <span>

#include "starspec/core.hpp"

namespace starspec {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
};

namespace detail {

/// Dormand-Prince 5(4) on a flat complex state of compile-time size N.
/// Integrates y' = f(x, y) from a to b; `stops` are abscissae the stepper must
/// hit exactly (potential knots, output points). on_stop is called at a, at
/// every stop, and at b with the current (x, y).
template <std::size_t N, typename Rhs, typename OnStop>
void dopri5(Rhs&& rhs, double a, double b, std::array<Complex, N>& y,
            std::span<const double> stops, const OdeOptions& opt, OnStop&& on_stop) {
  using State = std::array<Complex, N>;

  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  auto axpy = [](State& out, const State& base, double h,
                 std::initializer_list<std::pair<double, const State*>> terms) {
    for (std::size_t i = 0; i < N; ++i) {
      Complex acc = base[i];
      for (const auto& [coef, k] : terms) acc += h * coef * (*k)[i];
      out[i] = acc;
    }
  };

  on_stop(a, y);
  double x = a;
  State k1;
  rhs(x, y, k1);
  bool k1_fresh = true;

  std::size_t next_stop = 0;
  while (next_stop < stops.size() && stops[next_stop] <= a) ++next_stop;

  const double span_len = b - a;
  double h = span_len / 16.0;

  while (x < b) {
    double target = b;
    bool target_is_stop = false;
    if (next_stop < stops.size() && stops[next_stop] < b) {
      target = stops[next_stop];
      target_is_stop = true;
    }
    // integrate [x, target] adaptively
    while (x < target) {
      if (!k1_fresh) {
        rhs(x, y, k1);
        k1_fresh = true;
      }
      double hs = std::min(h, target - x);
      bool step_accepted = false;
      State k2, k3, k4, k5, k6, k7, ytmp, y5;
      for (int attempt = 0; attempt < 60 && !step_accepted; ++attempt) {
        axpy(ytmp, y, hs, {{a21, &k1}});
        rhs(x + c2 * hs, ytmp, k2);
        axpy(ytmp, y, hs, {{a31, &k1}, {a32, &k2}});
        rhs(x + c3 * hs, ytmp, k3);
        axpy(ytmp, y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}});
        rhs(x + c4 * hs, ytmp, k4);
        axpy(ytmp, y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}});
        rhs(x + c5 * hs, ytmp, k5);
        axpy(ytmp, y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}});
        rhs(x + hs, ytmp, k6);
        axpy(y5, y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        rhs(x + hs, y5, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
          const Complex ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
          const double scale =
              opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
          const double r = std::abs(ei) / scale;
          err += r * r;
        }
        err = std::sqrt(err / double(N));

        if (err <= 1.0) {
          x += hs;
          y = y5;
          k1 = k7;  // FSAL
          step_accepted = true;
          const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-12), -0.2), 1.0, 5.0);
          h = hs * fac;
        } else {
          const double fac = std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
          hs *= fac;
          if (hs < 1e-14 * std::max(1.0, std::abs(x)))
            throw NumericError("dopri5: step size underflow at x = " + std::to_string(x));
          hs = std::min(hs, target - x);
        }
      }
      if (!step_accepted)
        throw NumericError("dopri5: step rejected repeatedly at x = " + std::to_string(x));
    }
    on_stop(x, y);
    if (target_is_stop) ++next_stop;
  }
}

/// Merge two sorted stop lists into one strictly increasing list inside (a,b).
inline std::vector<double> merge_stops(double a, double b, std::span<const double> s1,
                                       std::span<const double> s2) {
  std::vector<double> out;
  out.reserve(s1.size() + s2.size());
  std::merge(s1.begin(), s1.end(), s2.begin(), s2.end(), std::back_inserter(out));
  std::vector<double> filtered;
  for (double v : out) {
    if (v <= a || v >= b) continue;
    if (!filtered.empty() && v <= filtered.back()) continue;
    filtered.push_back(v);
  }
  return filtered;
}

}  // namespace detail

}  // namespace starspec

#endif  // STARSPEC_RK45_HPP
