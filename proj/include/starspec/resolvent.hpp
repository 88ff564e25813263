#ifndef STARSPEC_RESOLVENT_HPP
#define STARSPEC_RESOLVENT_HPP

#include "starspec/spectrum.hpp"

namespace starspec {

enum class GreenSide { Auto, Below, Above };

/// Green's function G_j(x,xi;z) of the edge resolvent (T_j - z)^{-1}:
/// the two-branch semi-separable kernel built from Y and m_j. At x = xi the
/// side must be selected explicitly; the jump across the diagonal is -J.
inline Mat2 green_edge(const EdgeSpec& edge, Complex z, double x, double xi,
                       GreenSide side = GreenSide::Auto, const OdeOptions& opt = {}) {
  if (x < 0 || x > edge.length || xi < 0 || xi > edge.length)
    throw ValidationError("green_edge: arguments outside the edge");
  const auto w = char_entries(edge, z, opt);
  if (w.pole) throw PoleError("green_edge: z is an eigenvalue of the edge operator");
  bool below;  // xi < x branch
  if (side == GreenSide::Auto) {
    if (x == xi)
      throw ValidationError("green_edge: select a side explicitly at x = xi");
    below = xi < x;
  } else {
    below = side == GreenSide::Below;
  }
  const Mat2 Yx = propagate(edge, x, z, opt).Y;
  const Mat2 Yxi_bar = propagate(edge, xi, std::conj(z), opt).Y;
  Mat2 mid;
  if (below)
    mid << 0.0, -1.0, 0.0, w.m;
  else
    mid << 0.0, 0.0, -1.0, w.m;
  return Yx * mid * Yxi_bar.adjoint();
}

namespace detail {

/// Per-edge resolvent data on a uniform grid: Y at the nodes and the
/// cumulative trapezoid integral Q(x) = int_0^x Y(xi,z)^t g(xi) dxi
/// (bilinear pairing; Y(xi, conj z)^* = Y(xi, z)^t).
struct EdgeResolventPass {
  std::vector<Mat2> Y;
  std::vector<Vec2> Q;
  Complex m;
  Complex b, c;

  /// int_0^l y(xi,z)^t g(xi) dxi with y = Y(-1,m)^t.
  Complex q_total() const { return -Q.back()(0) + m * Q.back()(1); }
};

inline EdgeResolventPass edge_resolvent_pass(const EdgeSpec& edge, Complex z,
                                             const GridFunction::Component& g,
                                             const OdeOptions& opt) {
  const Eigen::Index n = g.points();
  const double h = g.spacing();
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = g.x(i);
  const auto prop = propagate_grid(edge, xs, z, false, opt);

  EdgeResolventPass pass;
  pass.Y.resize(static_cast<std::size_t>(n));
  pass.Q.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    pass.Y[static_cast<std::size_t>(i)] = prop[static_cast<std::size_t>(i)].Y;

  const double ca = std::cos(edge.alpha), sa = std::sin(edge.alpha);
  const Mat2& Yl = pass.Y.back();
  pass.b = ca * Yl(0, 0) + sa * Yl(1, 0);
  pass.c = ca * Yl(0, 1) + sa * Yl(1, 1);
  if (std::abs(pass.c) < pole_detection_factor * std::max(1.0, std::abs(pass.b)))
    throw PoleError("resolvent: z is an eigenvalue of an edge operator");
  pass.m = pass.b / pass.c;

  Vec2 acc = Vec2::Zero();
  pass.Q[0] = acc;
  Vec2 prev = pass.Y[0].transpose() * g.values.col(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Vec2 cur = pass.Y[static_cast<std::size_t>(i)].transpose() * g.values.col(i);
    acc += (h / 2.0) * (prev + cur);
    pass.Q[static_cast<std::size_t>(i)] = acc;
    prev = cur;
  }
  return pass;
}

/// Assemble f = Y (E1 Q + E2 (Q_l - Q)) + correction * y on the grid, where
/// E1 = [[0,-1],[0,m]], E2 = [[0,0],[-1,m]], y = Y(-1,m)^t.
inline GridFunction::Component assemble_edge_solution(const EdgeResolventPass& pass,
                                                      const GridFunction::Component& g,
                                                      Complex correction) {
  GridFunction::Component out;
  out.length = g.length;
  const Eigen::Index n = g.points();
  out.values.resize(2, n);
  Mat2 E1, E2;
  E1 << 0.0, -1.0, 0.0, pass.m;
  E2 << 0.0, 0.0, -1.0, pass.m;
  const Vec2 dir(Complex(-1.0), pass.m);
  const Vec2& Qend = pass.Q.back();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2& Qi = pass.Q[static_cast<std::size_t>(i)];
    Vec2 v = E1 * Qi + E2 * (Qend - Qi);
    if (correction != Complex(0.0)) v += correction * dir;
    out.values.col(i) = pass.Y[static_cast<std::size_t>(i)] * v;
  }
  return out;
}

/// Max-norm residual of -J f' + V f - z f = g via central differences.
inline double ode_residual(const EdgeSpec& edge, Complex z,
                           const GridFunction::Component& f,
                           const GridFunction::Component& g) {
  const Eigen::Index n = f.points();
  const double h = f.spacing();
  const Mat2 Jm = symplectic_unit();
  double worst = 0.0, scale = 1.0;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    const Vec2 fp = (f.values.col(i + 1) - f.values.col(i - 1)) / (2.0 * h);
    const Eigen::Matrix2d V = potential_matrix(edge, f.x(i));
    const Vec2 res = -Jm * fp + V * f.values.col(i) - z * f.values.col(i) - g.values.col(i);
    worst = std::max(worst, res.norm());
    scale = std::max(scale, g.values.col(i).norm());
  }
  return worst / scale;
}

inline GridFunction::Component resample(const GridFunction::Component& g, int factor) {
  if (factor <= 1) return g;
  GridFunction::Component out;
  out.length = g.length;
  const Eigen::Index n = g.points();
  const Eigen::Index m = (n - 1) * factor + 1;
  out.values.resize(2, m);
  // Catmull-Rom through the original nodes
  auto node = [&](Eigen::Index i) {
    i = std::clamp<Eigen::Index>(i, 0, n - 1);
    return Vec2(g.values.col(i));
  };
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index cell = std::min<Eigen::Index>(k / factor, n - 2);
    const double t = double(k - cell * factor) / factor;
    const Vec2 p0 = node(cell - 1), p1 = node(cell), p2 = node(cell + 1), p3 = node(cell + 2);
    out.values.col(k) = 0.5 * ((2.0 * p1) + (-p0 + p2) * t +
                               (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * (t * t) +
                               (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * (t * t * t));
  }
  return out;
}

inline GridFunction::Component downsample(const GridFunction::Component& f, int factor) {
  if (factor <= 1) return f;
  GridFunction::Component out;
  out.length = f.length;
  const Eigen::Index m = (f.points() - 1) / factor + 1;
  out.values.resize(2, m);
  for (Eigen::Index i = 0; i < m; ++i) out.values.col(i) = f.values.col(i * factor);
  return out;
}

}  // namespace detail

/// Edge resolvent f = (T_j - z)^{-1} g by cumulative quadrature of the
/// semi-separable kernel. The grid is refined (g resampled cubically) until
/// the finite-difference ODE residual passes `residual_target`, up to 8x.
inline GridFunction::Component apply_edge_resolvent(const EdgeSpec& edge, Complex z,
                                                    const GridFunction::Component& g,
                                                    const OdeOptions& opt = {},
                                                    double residual_target = 0.0) {
  edge.validate();
  if (g.points() < 5) throw ValidationError("apply_edge_resolvent: grid too coarse");
  int factor = 1;
  GridFunction::Component best;
  for (; factor <= 8; factor *= 2) {
    const auto gf = detail::resample(g, factor);
    const auto pass = detail::edge_resolvent_pass(edge, z, gf, opt);
    const auto f = detail::assemble_edge_solution(pass, gf, Complex(0.0));
    if (residual_target <= 0.0) return detail::downsample(f, factor);
    if (detail::ode_residual(edge, z, f, gf) <= residual_target)
      return detail::downsample(f, factor);
    best = detail::downsample(f, factor);
  }
  return best;
}

/// Graph resolvent (T_{A,B} - z)^{-1} g: the decoupled Dirichlet part plus the
/// rank <= n Krein correction -Gamma_z (B M(z) - A)^{-1} B Gamma_{conj z}^* g.
/// For Robin tau != 0 the correction is rank one with scalar denominator m_tau.
inline GridFunction apply_graph_resolvent(const StarGraph& graph,
                                          const MatchingCondition& mc, Complex z,
                                          const GridFunction& g, const OdeOptions& opt = {}) {
  graph.validate();
  g.validate();
  const int n = static_cast<int>(graph.size());
  if (g.edges.size() != graph.size())
    throw ValidationError("apply_graph_resolvent: grid function does not match the graph");

  std::vector<detail::EdgeResolventPass> passes;
  passes.reserve(graph.size());
  for (std::size_t j = 0; j < graph.size(); ++j)
    passes.push_back(detail::edge_resolvent_pass(graph.edges[j], z, g.edges[j], opt));

  // w = (B M - A)^{-1} B q with q_j = int y_j(xi,z)^t g_j(xi) dxi
  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n);
  const BoundaryPair pair = boundary_pair_of(mc, n);
  const bool robin = mc.is_robin();
  if (robin && mc.tau.is_zero()) {
    // decoupled: correction vanishes
  } else if (robin) {
    Complex mt = mc.tau.reciprocal();
    for (const auto& p : passes) mt += p.m;
    if (std::abs(mt) < 1e-13)
      throw PoleError("apply_graph_resolvent: z is an eigenvalue of T_tau");
    Complex qsum = 0.0;
    for (const auto& p : passes) qsum += p.q_total();
    for (int j = 0; j < n; ++j) w(j) = qsum / mt;
  } else {
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd q(n);
    for (int j = 0; j < n; ++j) {
      M(j, j) = passes[static_cast<std::size_t>(j)].m;
      q(j) = passes[static_cast<std::size_t>(j)].q_total();
    }
    const Eigen::MatrixXcd denom = pair.B * M - pair.A;
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(denom);
    if (!lu.isInvertible())
      throw PoleError("apply_graph_resolvent: B M(z) - A singular (spectral point)");
    w = lu.solve(pair.B * q);
  }

  GridFunction out;
  out.edges.reserve(graph.size());
  for (std::size_t j = 0; j < graph.size(); ++j)
    out.edges.push_back(
        detail::assemble_edge_solution(passes[j], g.edges[j], -w(static_cast<int>(j))));
  return out;
}

// ---------------------------------------------------------------------------
// Trace formulas
// ---------------------------------------------------------------------------

/// tr((T_j - z1)^{-1} - (T_j - z2)^{-1}) = -cdot(z1)/c(z1) + cdot(z2)/c(z2).
inline Complex trace_edge_diff(const EdgeSpec& edge, Complex z1, Complex z2,
                               const OdeOptions& opt = {}) {
  const auto w1 = char_entries(edge, z1, opt);
  const auto w2 = char_entries(edge, z2, opt);
  if (w1.pole || w2.pole) throw PoleError("trace_edge_diff: spectral point");
  return -w1.cdot / w1.c + w2.cdot / w2.c;
}

/// tr((T_tau - z)^{-1} - (T_0 - z)^{-1}) = -mdot_tau(z)/m_tau(z), the
/// logarithmic derivative of the perturbation determinant m_tau.
inline Complex trace_robin_diff(const StarGraph& graph, Tau tau, Complex z,
                                const OdeOptions& opt = {}) {
  if (tau.is_zero()) throw ValidationError("trace_robin_diff: tau must be nonzero");
  Complex mt = tau.reciprocal(), mdot = 0.0;
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const auto w = char_entries(graph.edges[j], z, opt, static_cast<int>(j));
    if (w.pole) throw PoleError("trace_robin_diff: z is a pole of an edge Weyl function");
    mt += w.m;
    mdot += w.mdot();
  }
  return -mdot / mt;
}

/// Regularized trace tr((T_j - z)^{-1} - T_j (T_j^2 + 1)^{-1})
///   = -cdot(z)/c(z) + Re(cdot(i)/c(i)).
inline Complex regularized_trace(const EdgeSpec& edge, Complex z, const OdeOptions& opt = {}) {
  const auto wz = char_entries(edge, z, opt);
  if (wz.pole) throw PoleError("regularized_trace: spectral point");
  const auto wi = char_entries(edge, Complex(0.0, 1.0), opt);
  return -wz.cdot / wz.c + std::real(wi.cdot / wi.c);
}

}  // namespace starspec

#endif  // STARSPEC_RESOLVENT_HPP
