#ifndef STARSPEC_DISLOCATION_HPP
#define STARSPEC_DISLOCATION_HPP

#include "starspec/spectrum.hpp"

namespace starspec {

namespace detail {

inline int count_in(const std::vector<double>& sorted, double a, double b) {
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), a);
  const auto hi = std::lower_bound(sorted.begin(), sorted.end(), b);
  return static_cast<int>(hi - lo);
}

inline bool near_any(const std::vector<double>& sorted, double x, double tol) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), x - tol);
  return it != sorted.end() && *it < x + tol;
}

/// One kappa-by-counting pass at fixed delta. Detects the stabilization index
/// K_delta by requiring the localization counts (one eigenvalue per
/// mu0_k +- delta box, empty gaps, exact bulk count) for `consecutive` k in a
/// row, then evaluates N_+(mu0_{k-1}+delta) - N_-(mu0_{-k}-delta).
inline int kappa_counting_pass(const EdgeSpec& edge, double delta,
                               const std::vector<double>& eigs, int k_max,
                               int consecutive = 5) {
  auto mu0 = [&](long k) { return asymptotic_reference(edge, k); };
  const double guard = 1e-9;

  auto localized_at = [&](long k) {
    const double lo = mu0(k) - delta, hi = mu0(k) + delta;
    if (near_any(eigs, lo, guard) || near_any(eigs, hi, guard)) return false;
    return count_in(eigs, lo, hi) == 1;
  };
  auto gap_empty_after = [&](long k) {
    const double lo = mu0(k) + delta, hi = mu0(k + 1) - delta;
    if (!(lo < hi)) return true;
    return count_in(eigs, lo, hi) == 0;
  };

  for (int k = 1; k + consecutive <= k_max; ++k) {
    bool ok = true;
    for (int j = k; j < k + consecutive && ok; ++j) {
      ok = localized_at(j) && localized_at(-j) && gap_empty_after(j) &&
           gap_empty_after(-j - 1);
    }
    if (!ok) continue;
    const int kk = k + consecutive - 1;
    // bulk count check: exactly 2*kk eigenvalues between the localized boxes
    if (count_in(eigs, mu0(-kk) - delta, mu0(kk - 1) + delta) != 2 * kk) continue;
    const int n_plus = count_in(eigs, 0.0, mu0(kk - 1) + delta);
    const int n_minus = count_in(eigs, mu0(-kk) - delta, 0.0);
    return n_plus - n_minus;
  }
  throw NumericError("kappa_counting: no stabilization within the scan budget");
}

}  // namespace detail

struct DislocationOptions {
  SpectrumOptions spectrum{};
  int k_max = 24;          // scan budget for the stabilization index
  double arg_tol = 5e-5;   // M-doubling stop for the argument integral
  double max_height = 70000.0;
};

/// Dislocation index kappa(T_j) by eigenvalue counting: stabilized value of
/// N_+(mu0_{k-1}+delta) - N_-(mu0_{-k}-delta), delta = pi/(4 l_j), verified
/// delta-independent by recomputation with delta/2. Always even.
inline int kappa_counting(const EdgeSpec& edge, const DislocationOptions& opt = {}) {
  edge.validate();
  const double delta = pi / (4.0 * edge.length);
  const double lo = asymptotic_reference(edge, -opt.k_max) - delta - 0.25;
  const double hi = asymptotic_reference(edge, opt.k_max - 1) + delta + 0.25;
  const auto eigs = edge_eigenvalues(edge, lo, hi, opt.spectrum);

  const int kappa = detail::kappa_counting_pass(edge, delta, eigs, opt.k_max);
  const int kappa_half = detail::kappa_counting_pass(edge, delta / 2.0, eigs, opt.k_max);
  if (kappa != kappa_half)
    throw NumericError("kappa_counting: value depends on delta (not stabilized)");
  if (kappa % 2 != 0)
    throw NumericError("kappa_counting: odd value indicates a missed eigenvalue");
  return kappa;
}

/// Central spectral gap (omega_-, omega_+) around zero of the edge operator.
inline std::pair<double, double> central_gap(const EdgeSpec& edge,
                                             const SpectrumOptions& opt = {}) {
  double w = 3.0 * (pi / edge.length + 1.0);
  for (int attempt = 0; attempt < 3; ++attempt, w *= 2.0) {
    const auto eigs = edge_eigenvalues(edge, -w, w, opt);
    double below = -std::numeric_limits<double>::infinity();
    double above = std::numeric_limits<double>::infinity();
    for (double e : eigs) {
      if (e < 0.0)
        below = std::max(below, e);
      else
        above = std::min(above, e);
    }
    if (std::isfinite(below) && std::isfinite(above)) return {below, above};
  }
  throw NumericError("central_gap: could not bracket the spectral gap around 0");
}

struct KappaIntegralResult {
  int kappa = 0;
  double residual = 0.0;   // |pre-rounding value - kappa|
  double height = 0.0;     // final M of the symmetric argument sweep
  operator int() const { return kappa; }
};

namespace detail {

/// Phase of c(omega + i s) e^{-s l} from the rescaled propagation
/// P' = (J(zI - V) - s) P, P(0) = I.
inline Complex scaled_c(const EdgeSpec& edge, double omega, double s, const OdeOptions& opt) {
  const Complex z(omega, s);
  struct Rhs {
    const EdgeSpec& edge;
    Complex z;
    double shift;
    void operator()(double x, const std::array<Complex, 4>& y,
                    std::array<Complex, 4>& dy) const {
      Complex a11, a12, a21, a22;
      coeff_entries(edge, x, z, a11, a12, a21, a22);
      a11 -= shift;
      a22 -= shift;
      dy[0] = a11 * y[0] + a12 * y[2];
      dy[1] = a11 * y[1] + a12 * y[3];
      dy[2] = a21 * y[0] + a22 * y[2];
      dy[3] = a21 * y[1] + a22 * y[3];
    }
  };
  std::array<Complex, 4> st{1.0, 0.0, 0.0, 1.0};
  const auto knots = edge.interior_knots();
  dopri5<4>(Rhs{edge, z, s}, 0.0, edge.length, st, knots, opt, [](double, const auto&) {});
  const double ca = std::cos(edge.alpha), sa = std::sin(edge.alpha);
  return ca * st[1] + sa * st[3];
}

/// c^0(omega + i s) e^{-s l} in overflow-free form.
inline Complex scaled_c0(const EdgeSpec& edge, double omega, double s) {
  const double a = edge.alpha - edge.length * omega;
  const double t = edge.length * s;
  const double ep = 0.5 * (1.0 + std::exp(-2.0 * t));  // cosh(t) e^{-t}
  const double em = 0.5 * (1.0 - std::exp(-2.0 * t));  // sinh(t) e^{-t}
  return Complex(std::sin(a) * ep, -std::cos(a) * em);
}

}  // namespace detail

/// Dislocation index by the principal-value argument formula:
/// kappa = (1/pi) lim_{M->inf} [arg c(omega - iM) - arg c(omega + iM)],
/// evaluated as -(2/pi)(Delta arg c^0 + Delta arg c/c^0) along the upper half
/// line with the free-edge argument taken in closed form. M doubles until two
/// successive estimates agree; the returned value is Richardson-extrapolated.
inline KappaIntegralResult kappa_integral(const EdgeSpec& edge, double omega,
                                          const DislocationOptions& opt = {}) {
  edge.validate();
  const auto [glo, ghi] = central_gap(edge, opt.spectrum);
  if (!(omega > glo && omega < ghi))
    throw ValidationError("kappa_integral: omega must lie inside the central spectral gap");
  const double a = edge.alpha - edge.length * omega;
  if (std::abs(std::sin(a)) < 1e-3)
    throw ValidationError(
        "kappa_integral: omega coincides with a free-edge eigenvalue; pick another omega "
        "in the gap");

  const OdeOptions& ode = opt.spectrum.ode;
  auto h_of = [&](double s) {
    return detail::scaled_c(edge, omega, s, ode) / detail::scaled_c0(edge, omega, s);
  };
  auto phase0_delta = [&](double s) {
    return std::atan(-std::cos(a) * std::tanh(edge.length * s) / std::sin(a));
  };

  // continuous tracking of arg(c/c^0) upward from s = 0
  double s_prev = 0.0;
  Complex h_prev = h_of(0.0);
  double acc = 0.0;
  auto advance_to = [&](double s_next) {
    std::vector<double> stack{s_next};
    while (!stack.empty()) {
      const double st = stack.back();
      const Complex h = h_of(st);
      const double d = std::arg(h / h_prev);
      if (std::abs(d) > pi / 2 && st - s_prev > 1e-6 * std::max(1.0, s_prev)) {
        stack.push_back(0.5 * (s_prev + st));
        continue;
      }
      acc += d;
      s_prev = st;
      h_prev = h;
      stack.pop_back();
    }
  };

  const double s0 = std::max(2.0, 2.0 / edge.length);
  double M = s0;
  advance_to(M);
  auto estimate = [&]() { return -(2.0 / pi) * (phase0_delta(s_prev) + acc); };
  double est_prev = estimate();
  double est_cur = est_prev;
  while (M < opt.max_height) {
    M *= 2.0;
    // geometric rungs keep the per-rung phase increments small
    double s = s_prev;
    while (s < M) {
      s = std::min(M, s * 1.4);
      advance_to(s);
    }
    est_prev = est_cur;
    est_cur = estimate();
    if (std::abs(est_cur - est_prev) < opt.arg_tol && M > 4 * s0) break;
  }
  const double extrapolated = 2.0 * est_cur - est_prev;
  KappaIntegralResult r;
  r.kappa = static_cast<int>(std::lround(extrapolated));
  r.residual = std::abs(extrapolated - r.kappa);
  r.height = M;
  return r;
}

// ---------------------------------------------------------------------------
// Graph-level report
// ---------------------------------------------------------------------------

struct DislocationReport {
  std::vector<int> kappa_edges;
  int kappa0 = 0;
  int n_ge = 0, n_le = 0;
  struct Sample {
    double R = 0.0;
    int d_R = 0;
    bool bound_ok = false;
  };
  std::vector<Sample> samples;
  bool all_bounds_ok = false;
};

/// kappa0 = sum_j kappa(T_j), d_R from the Robin spectrum, and the two-sided
/// deviation bound -(n_ge + 2) <= d_R - kappa0 <= n_le + 2 for each R.
inline DislocationReport dislocation_report(const StarGraph& graph, Tau tau,
                                            std::vector<double> R_list,
                                            const DislocationOptions& opt = {}) {
  graph.validate();
  if (R_list.empty()) throw ValidationError("dislocation_report: empty R list");
  std::sort(R_list.begin(), R_list.end());

  DislocationReport rep;
  for (const auto& e : graph.edges) {
    rep.kappa_edges.push_back(kappa_counting(e, opt));
    if (e.alpha >= pi / 2) ++rep.n_ge;
    if (e.alpha <= pi / 2) ++rep.n_le;
  }
  rep.kappa0 = 0;
  for (int k : rep.kappa_edges) rep.kappa0 += k;

  const double Rmax = R_list.back();
  const Spectrum spec = robin_spectrum(graph, tau, -Rmax - 1.0, Rmax + 1.0, opt.spectrum);

  rep.all_bounds_ok = true;
  for (double R : R_list) {
    DislocationReport::Sample s;
    s.R = R;
    double Reff = R;
    for (int nudge = 0; nudge < 4; ++nudge) {
      try {
        s.d_R = d_R(spec, Reff);
        break;
      } catch (const ValidationError&) {
        Reff += 1e-6 * std::max(1.0, R);  // endpoint collided with an eigenvalue
        if (nudge == 3) throw;
      }
    }
    const int dev = s.d_R - rep.kappa0;
    s.bound_ok = (-(rep.n_ge + 2) <= dev) && (dev <= rep.n_le + 2);
    rep.all_bounds_ok = rep.all_bounds_ok && s.bound_ok;
    rep.samples.push_back(s);
  }
  return rep;
}

}  // namespace starspec

#endif  // STARSPEC_DISLOCATION_HPP
