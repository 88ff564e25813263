#ifndef STARSPEC_SPECTRUM_HPP
#define STARSPEC_SPECTRUM_HPP

#include "starspec/matching.hpp"

namespace starspec {

enum class EigTag { SimpleRobin, CommonPole, EdgeEigenvalue };

inline const char* tag_name(EigTag t) {
  switch (t) {
    case EigTag::SimpleRobin: return "simple_robin";
    case EigTag::CommonPole: return "common_pole";
    case EigTag::EdgeEigenvalue: return "edge_eigenvalue";
  }
  return "?";
}

struct SpectrumEntry {
  double lambda = 0.0;
  int multiplicity = 1;
  EigTag tag = EigTag::SimpleRobin;
};

/// Sorted eigenvalues of one operator in a window, with multiplicities and
/// provenance tags, plus a descriptor of the operator they belong to.
struct Spectrum {
  std::array<double, 2> window{0.0, 0.0};
  std::vector<SpectrumEntry> entries;
  std::uint64_t graph_hash = 0;
  std::string matching;
};

struct SpectrumOptions {
  OdeOptions ode{1e-10, 1e-12};
  double root_tol = 1e-8;
};

inline OdeOptions ode_options(const SolverSettings& s) { return {s.ode_tol, s.ode_tol * 1e-2}; }
inline SpectrumOptions spectrum_options(const SolverSettings& s) {
  return {ode_options(s), s.root_tol};
}

namespace detail {

inline double edge_c_real(const EdgeSpec& e, double lambda, const OdeOptions& opt) {
  const auto r = propagate(e, e.length, lambda, opt);
  return std::real(std::cos(e.alpha) * r.Y(0, 1) + std::sin(e.alpha) * r.Y(1, 1));
}

/// Sign-change scan + refinement for a real-analytic function with simple
/// zeros and roughly known spacing. Rescans suspicious gaps at step/4.
inline std::vector<double> scan_roots(const std::function<double(double)>& f, double lo,
                                      double hi, double step, double xtol,
                                      double expected_spacing, int depth = 0) {
  std::vector<double> roots;
  const int cells = std::max(2, static_cast<int>(std::ceil((hi - lo) / step)));
  const double h = (hi - lo) / cells;
  double xa = lo, fa = f(xa);
  for (int i = 1; i <= cells; ++i) {
    const double xb = lo + i * h;
    const double fb = f(xb);
    if (fa == 0.0)
      roots.push_back(xa);
    else if ((fa > 0) != (fb > 0))
      roots.push_back(refine_root(f, xa, xb, fa, fb, xtol));
    xa = xb;
    fa = fb;
  }
  if (fa == 0.0) roots.push_back(xa);
  // dedupe
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end(),
                          [&](double a, double b) { return std::abs(a - b) < 10 * xtol; }),
              roots.end());
  if (depth >= 3 || expected_spacing <= 0) return roots;
  // gaps much wider than the free spacing hide root pairs without sign change
  std::vector<std::pair<double, double>> suspicious;
  for (std::size_t i = 0; i + 1 < roots.size(); ++i)
    if (roots[i + 1] - roots[i] > 1.6 * expected_spacing)
      suspicious.emplace_back(roots[i] + 5 * xtol, roots[i + 1] - 5 * xtol);
  for (const auto& [a, b] : suspicious) {
    auto extra = scan_roots(f, a, b, step / 4.0, xtol, expected_spacing, depth + 1);
    roots.insert(roots.end(), extra.begin(), extra.end());
  }
  if (!suspicious.empty()) {
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [&](double a, double b) { return std::abs(a - b) < 10 * xtol; }),
                roots.end());
  }
  return roots;
}

}  // namespace detail

/// Eigenvalues of the edge operator T_j in [lo, hi]: the real zeros of c_j,
/// all simple. Scan step pi/(4 l_j) with adaptive refinement.
inline std::vector<double> edge_eigenvalues(const EdgeSpec& edge, double lo, double hi,
                                            const SpectrumOptions& opt = {}) {
  edge.validate();
  if (!(lo < hi)) throw ValidationError("edge_eigenvalues: empty window");
  auto f = [&](double lam) { return detail::edge_c_real(edge, lam, opt.ode); };
  const double spacing = pi / edge.length;
  return detail::scan_roots(f, lo, hi, spacing / 4.0, opt.root_tol, spacing);
}

/// mu0_{j,k} = (alpha_j + k pi) / l_j, the free-edge eigenvalue ladder.
inline double asymptotic_reference(const EdgeSpec& edge, long k) {
  return (edge.alpha + double(k) * pi) / edge.length;
}

// ---------------------------------------------------------------------------
// Robin spectra
// ---------------------------------------------------------------------------

namespace detail {

struct PoleCluster {
  double center = 0.0;
  std::vector<int> edges;  // indices of the edges whose c_j vanish here
  int size() const { return static_cast<int>(edges.size()); }
};

struct EdgeCharReal {
  double b, c;
};

inline EdgeCharReal edge_bc_real(const EdgeSpec& e, double lambda, const OdeOptions& opt) {
  const auto r = propagate(e, e.length, lambda, opt);
  const double ca = std::cos(e.alpha), sa = std::sin(e.alpha);
  return {std::real(ca * r.Y(0, 0) + sa * r.Y(1, 0)),
          std::real(ca * r.Y(0, 1) + sa * r.Y(1, 1))};
}

/// Pole-cleared entire function D_tau = (1/tau) prod c_j + sum_j b_j prod_{k!=j} c_k.
/// Its real zeros are the simple Robin eigenvalues together with the common
/// poles (where >= 2 of the c_j vanish).
inline double robin_dtau(const StarGraph& g, Tau tau, double lambda, const OdeOptions& opt) {
  const std::size_t n = g.size();
  std::vector<EdgeCharReal> bc(n);
  for (std::size_t j = 0; j < n; ++j) bc[j] = edge_bc_real(g.edges[j], lambda, opt);
  double prod_all = 1.0;
  for (std::size_t j = 0; j < n; ++j) prod_all *= bc[j].c;
  double acc = tau.reciprocal() * prod_all;
  for (std::size_t j = 0; j < n; ++j) {
    double term = bc[j].b;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) term *= bc[k].c;
    acc += term;
  }
  return acc;
}

/// Cluster the union of per-edge roots; clusters of size >= 2 are common poles.
inline std::vector<PoleCluster> cluster_poles(const std::vector<std::vector<double>>& roots,
                                              double tol) {
  std::vector<std::pair<double, int>> all;
  for (std::size_t j = 0; j < roots.size(); ++j)
    for (double r : roots[j]) all.emplace_back(r, static_cast<int>(j));
  std::sort(all.begin(), all.end());
  std::vector<PoleCluster> clusters;
  for (const auto& [pos, j] : all) {
    if (clusters.empty() || pos - clusters.back().center > tol) {
      clusters.push_back({pos, {j}});
    } else {
      auto& c = clusters.back();
      c.center = (c.center * c.size() + pos) / (c.size() + 1);
      c.edges.push_back(j);
    }
  }
  return clusters;
}

/// Refine a common-zero location on sum_j c_j^2 by Newton on its derivative.
inline double refine_common_zero(const StarGraph& g, const std::vector<int>& edges,
                                 double z0, const OdeOptions& opt) {
  double z = z0;
  for (int it = 0; it < 3; ++it) {
    double num = 0.0, den = 0.0;
    for (int j : edges) {
      const auto w = char_entries(g.edges[static_cast<std::size_t>(j)], z, opt, j);
      num += std::real(w.c) * std::real(w.cdot);
      den += std::real(w.cdot) * std::real(w.cdot);
    }
    if (den == 0.0) break;
    z -= num / den;
  }
  return z;
}

struct RobinSpectrumDetail {
  Spectrum spectrum;
  std::vector<PoleCluster> poles;  // all pole clusters in the padded window
};

inline RobinSpectrumDetail robin_spectrum_detail(const StarGraph& graph, Tau tau, double lo,
                                                 double hi, const SpectrumOptions& opt) {
  graph.validate();
  if (!(lo < hi)) throw ValidationError("robin_spectrum: empty window");
  RobinSpectrumDetail result;
  Spectrum& spec = result.spectrum;
  spec.window = {lo, hi};
  spec.graph_hash = graph.hash();
  spec.matching = MatchingCondition::robin(tau).str();

  const double cluster_tol = 10 * opt.root_tol;

  if (tau.is_zero()) {
    std::vector<std::vector<double>> roots(graph.size());
    for (std::size_t j = 0; j < graph.size(); ++j)
      roots[j] = edge_eigenvalues(graph.edges[j], lo, hi, opt);
    for (const auto& c : cluster_poles(roots, cluster_tol))
      spec.entries.push_back({c.center, c.size(), EigTag::EdgeEigenvalue});
    return result;
  }

  // Poles of sum m_j: per-edge zeros of c_j in the padded window.
  const double pad = pi / graph.min_length() + 0.5;
  std::vector<std::vector<double>> roots(graph.size());
  for (std::size_t j = 0; j < graph.size(); ++j)
    roots[j] = edge_eigenvalues(graph.edges[j], lo - pad, hi + pad, opt);
  auto clusters = cluster_poles(roots, cluster_tol);
  for (auto& c : clusters)
    if (c.size() >= 2) c.center = refine_common_zero(graph, c.edges, c.center, opt.ode);
  result.poles = clusters;

  for (const auto& c : clusters)
    if (c.size() >= 2 && c.center >= lo && c.center < hi)
      spec.entries.push_back({c.center, c.size() - 1, EigTag::CommonPole});

  // One zero of m_tau strictly inside every gap between consecutive poles.
  auto dtau = [&](double lam) { return robin_dtau(graph, tau, lam, opt.ode); };
  std::vector<double> gap_bounds;
  gap_bounds.push_back(lo);
  for (const auto& c : clusters)
    if (c.center > lo && c.center < hi) gap_bounds.push_back(c.center);
  gap_bounds.push_back(hi);

  for (std::size_t i = 0; i + 1 < gap_bounds.size(); ++i) {
    const double u = gap_bounds[i], v = gap_bounds[i + 1];
    const bool u_is_pole = (i > 0);
    const bool v_is_pole = (i + 2 < gap_bounds.size());
    if (v - u <= 4 * cluster_tol) continue;
    double eps = std::max(1e-3 * (v - u), 4 * cluster_tol);
    double root = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < 5; ++attempt) {
      const double a = u_is_pole ? u + eps : u;
      const double b = v_is_pole ? v - eps : v;
      if (!(a < b)) break;
      const double fa = dtau(a), fb = dtau(b);
      if (fa == 0.0) {
        root = a;
        break;
      }
      if (fb == 0.0) {
        root = b;
        break;
      }
      if ((fa > 0) != (fb > 0)) {
        root = refine_root(dtau, a, b, fa, fb, opt.root_tol);
        break;
      }
      if (!u_is_pole && !v_is_pole) break;  // boundary gap without sign change: no root
      eps *= 0.2;
      if (eps < 10 * opt.root_tol) break;   // zero indistinguishable from the pole
    }
    if (std::isnan(root)) {
      if (u_is_pole && v_is_pole)
        throw NumericError("robin_spectrum: lost the zero between poles near " +
                           std::to_string(u));
      continue;  // boundary gap may legitimately hold no zero inside the window
    }
    if (root >= lo && root < hi)
      spec.entries.push_back({root, 1, EigTag::SimpleRobin});
  }

  std::sort(spec.entries.begin(), spec.entries.end(),
            [](const SpectrumEntry& a, const SpectrumEntry& b) { return a.lambda < b.lambda; });
  return result;
}

}  // namespace detail

/// Spectrum of the Robin operator T_tau in [lo, hi). tau = 0 yields the
/// decoupled Dirichlet operator (multiset union of edge spectra); otherwise
/// the simple zeros of m_tau plus common poles with multiplicity nu.
inline Spectrum robin_spectrum(const StarGraph& graph, Tau tau, double lo, double hi,
                               const SpectrumOptions& opt = {}) {
  return detail::robin_spectrum_detail(graph, tau, lo, hi, opt).spectrum;
}

// ---------------------------------------------------------------------------
// Counting functions
// ---------------------------------------------------------------------------

/// Multiplicity-weighted count of eigenvalues in [a, b).
inline int count(const Spectrum& spec, double a, double b, double endpoint_tol = 1e-8) {
  if (!(a <= b)) throw ValidationError("count: need a <= b");
  if (a < spec.window[0] - endpoint_tol || b > spec.window[1] + endpoint_tol)
    throw ValidationError("count: interval exceeds the spectrum window");
  int total = 0;
  for (const auto& e : spec.entries) {
    if (std::abs(e.lambda - a) < endpoint_tol || std::abs(e.lambda - b) < endpoint_tol)
      throw ValidationError("count: interval endpoint sits on an eigenvalue");
    if (e.lambda >= a && e.lambda < b) total += e.multiplicity;
  }
  return total;
}

/// d_R = N([0,R)) - N([-R,0)).
inline int d_R(const Spectrum& spec, double R, double endpoint_tol = 1e-8) {
  return count(spec, 0.0, R, endpoint_tol) - count(spec, -R, 0.0, endpoint_tol);
}

// ---------------------------------------------------------------------------
// Interlacing and tau-monotonicity checks
// ---------------------------------------------------------------------------

struct InterlacingReport {
  bool pass = false;
  int midpoints = 0;
  int max_spread = 0;  // max |N1 - N2| over all tested subintervals
  double violation_a = 0.0, violation_b = 0.0;
  std::string message;
};

/// Counting operationalization of interlacing: for all subintervals [a,b)
/// with endpoints at midpoints between consecutive eigenvalues of the merged
/// spectra, |N([a,b);T1) - N([a,b);T2)| <= 1.
inline InterlacingReport check_interlacing(const Spectrum& s1, const Spectrum& s2) {
  if (s1.graph_hash != s2.graph_hash)
    throw ValidationError("check_interlacing: spectra belong to different graphs");
  if (s1.window != s2.window)
    throw ValidationError("check_interlacing: spectra computed on different windows");
  std::vector<double> merged;
  for (const auto& e : s1.entries) merged.push_back(e.lambda);
  for (const auto& e : s2.entries) merged.push_back(e.lambda);
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               merged.end());

  InterlacingReport rep;
  if (merged.size() < 2) {
    rep.pass = true;
    rep.message = "fewer than two distinct eigenvalues; nothing to check";
    return rep;
  }
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < merged.size(); ++i)
    mids.push_back(0.5 * (merged[i] + merged[i + 1]));
  rep.midpoints = static_cast<int>(mids.size());

  // prefix counts below each midpoint; spread of their difference decides all pairs
  auto prefix = [](const Spectrum& s, const std::vector<double>& pts) {
    std::vector<int> p(pts.size(), 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int acc = 0;
      for (const auto& e : s.entries)
        if (e.lambda < pts[i]) acc += e.multiplicity;
      p[i] = acc;
    }
    return p;
  };
  const auto p1 = prefix(s1, mids), p2 = prefix(s2, mids);
  int qmin = p1[0] - p2[0], qmax = qmin;
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 0; i < mids.size(); ++i) {
    const int q = p1[i] - p2[i];
    if (q < qmin) {
      qmin = q;
      imin = i;
    }
    if (q > qmax) {
      qmax = q;
      imax = i;
    }
  }
  rep.max_spread = qmax - qmin;
  rep.pass = rep.max_spread <= 1;
  if (!rep.pass) {
    rep.violation_a = mids[std::min(imin, imax)];
    rep.violation_b = mids[std::max(imin, imax)];
    rep.message = "counting bound violated";
  } else {
    rep.message = "ok";
  }
  return rep;
}

struct MonotonicityReport {
  bool pass = false;
  int matched = 0;
  int unmatched = 0;   // window-boundary branches present in only one spectrum
  int common_poles = 0;
  std::string message;
};

/// For tau1 < tau2 in the same monotonicity interval ((0,inf] or [-inf,0)),
/// the simple Robin branch in each gap between consecutive poles of sum m_j
/// is strictly increasing in tau, and common-pole eigenvalues coincide.
inline MonotonicityReport monotonicity_check(const StarGraph& graph, Tau tau1, Tau tau2,
                                             double lo, double hi,
                                             const SpectrumOptions& opt = {}) {
  if (tau1.is_zero() || tau2.is_zero())
    throw ValidationError("monotonicity_check: tau must be nonzero");
  const bool ok_order =
      (tau1.infinite && !tau2.infinite && tau2.value < 0.0) ||
      (!tau1.infinite && tau2.infinite && tau1.value > 0.0) ||
      (!tau1.infinite && !tau2.infinite && tau1.value < tau2.value &&
       ((tau1.value > 0.0) == (tau2.value > 0.0)));
  if (!ok_order)
    throw ValidationError(
        "monotonicity_check: tau1 < tau2 must lie in one interval (0,inf] or [-inf,0)");

  const auto d1 = detail::robin_spectrum_detail(graph, tau1, lo, hi, opt);
  const auto d2 = detail::robin_spectrum_detail(graph, tau2, lo, hi, opt);

  MonotonicityReport rep;
  rep.pass = true;

  // common poles must agree to within refinement jitter
  std::vector<double> cp1, cp2;
  for (const auto& e : d1.spectrum.entries)
    if (e.tag == EigTag::CommonPole) cp1.push_back(e.lambda);
  for (const auto& e : d2.spectrum.entries)
    if (e.tag == EigTag::CommonPole) cp2.push_back(e.lambda);
  if (cp1.size() != cp2.size()) {
    rep.pass = false;
    rep.message = "common-pole sets differ in size";
    return rep;
  }
  for (std::size_t i = 0; i < cp1.size(); ++i)
    if (std::abs(cp1[i] - cp2[i]) > 1e-10 * std::max(1.0, std::abs(cp1[i]))) {
      rep.pass = false;
      rep.message = "common pole moved with tau";
      return rep;
    }
  rep.common_poles = static_cast<int>(cp1.size());

  // match simple branches per pole gap
  std::vector<double> bounds;
  bounds.push_back(lo);
  for (const auto& c : d1.poles)
    if (c.center > lo && c.center < hi) bounds.push_back(c.center);
  bounds.push_back(hi);
  auto simple_in = [](const Spectrum& s, double a, double b) {
    std::vector<double> out;
    for (const auto& e : s.entries)
      if (e.tag == EigTag::SimpleRobin && e.lambda > a && e.lambda < b)
        out.push_back(e.lambda);
    return out;
  };
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const auto r1 = simple_in(d1.spectrum, bounds[i], bounds[i + 1]);
    const auto r2 = simple_in(d2.spectrum, bounds[i], bounds[i + 1]);
    if (r1.size() == 1 && r2.size() == 1) {
      ++rep.matched;
      if (!(r1[0] < r2[0])) {
        rep.pass = false;
        rep.message = "branch not strictly increasing in tau near " + std::to_string(r1[0]);
        return rep;
      }
    } else if (r1.size() != r2.size()) {
      ++rep.unmatched;  // window-boundary effect; reported, not failed
    }
  }
  rep.message = rep.pass ? "ok" : rep.message;
  return rep;
}

// ---------------------------------------------------------------------------
// Eigenfunctions and the Robin Parseval check
// ---------------------------------------------------------------------------

/// Normalized eigenfunction at a simple Robin eigenvalue: components
/// u_j Y_j(.,lambda)(-1, m_j(lambda))^t with equal weights u_j, unit L2 norm.
inline GridFunction eigenfunction(const StarGraph& graph, Tau tau, double lambda,
                                  int grid_points = 801, const OdeOptions& opt = {}) {
  graph.validate();
  if (tau.is_zero()) throw ValidationError("eigenfunction: tau = 0 not supported here");
  if (grid_points % 2 == 0) ++grid_points;

  std::vector<Complex> ms(graph.size());
  Complex mt = tau.reciprocal(), mt_dot = 0.0;
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const auto w = char_entries(graph.edges[j], lambda, opt, static_cast<int>(j));
    if (w.pole)
      throw ValidationError(
          "eigenfunction: lambda is a pole of an edge Weyl function (common-pole type "
          "eigenfunctions are not constructed)");
    ms[j] = w.m;
    mt += w.m;
    mt_dot += w.mdot();
  }
  // certify lambda as a zero of m_tau
  if (std::abs(mt) > 1e-4 * (1.0 + std::abs(mt_dot)))
    throw ValidationError("eigenfunction: lambda is not a simple Robin eigenvalue");

  GridFunction f = GridFunction::zeros(graph, grid_points);
  for (std::size_t j = 0; j < graph.size(); ++j) {
    auto& comp = f.edges[j];
    std::vector<double> xs(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i)
      xs[static_cast<std::size_t>(i)] = comp.x(i);
    const auto ys = propagate_grid(graph.edges[j], xs, lambda, false, opt);
    const Vec2 dir(Complex(-1.0), ms[j]);
    for (int i = 0; i < grid_points; ++i)
      comp.values.col(i) = ys[static_cast<std::size_t>(i)].Y * dir;
  }
  const double nrm = std::sqrt(grid_norm_sq(f));
  if (nrm == 0.0) throw NumericError("eigenfunction: zero norm");
  for (auto& comp : f.edges) comp.values /= nrm;
  return f;
}

/// Parseval residual ||g||^2 - sum_{lambda in window} |(y_lambda, g)|^2 over
/// normalized simple Robin eigenfunctions. Decreases as the window grows when
/// g has no common-pole components.
inline double parseval_check(const StarGraph& graph, Tau tau, double lo, double hi,
                             const GridFunction& g, const SpectrumOptions& opt = {}) {
  if (tau.is_zero()) throw ValidationError("parseval_check: tau must be nonzero");
  g.validate();
  if (g.edges.size() != graph.size())
    throw ValidationError("parseval_check: grid function does not match the graph");
  const Spectrum spec = robin_spectrum(graph, tau, lo, hi, opt);
  int total_mult = 0;
  for (const auto& e : spec.entries) total_mult += e.multiplicity;
  if (total_mult < 20)
    throw ValidationError("parseval_check: window holds fewer than 20 eigenvalues");

  double acc = grid_norm_sq(g);
  const int pts = static_cast<int>(g.edges.front().points());
  for (const auto& e : spec.entries) {
    if (e.tag != EigTag::SimpleRobin) continue;
    const GridFunction y = eigenfunction(graph, tau, e.lambda, pts, opt.ode);
    const Complex coeff = grid_inner(g, y);
    acc -= std::norm(coeff);
  }
  return acc;
}

}  // namespace starspec

#endif  // STARSPEC_SPECTRUM_HPP
