#ifndef STARSPEC_GRAPH_HPP
#define STARSPEC_GRAPH_HPP

#include <array>
#include <utility>

#include "starspec/core.hpp"

namespace starspec {

// ---------------------------------------------------------------------------
// EdgeSpec
// ---------------------------------------------------------------------------

struct PotentialSample {
  double x = 0.0;
  double p = 0.0;
  double q = 0.0;
  bool operator==(const PotentialSample&) const = default;
};

/// One edge [v, v_j] of the star graph: length l_j, outer boundary angle
/// alpha_j in [0,pi) of cos(a) f + sin(a) fhat = 0 at v_j, and a sampled
/// potential (p,q) understood as its piecewise-linear interpolant.
/// An empty sample list is the free edge p = q = 0.
struct EdgeSpec {
  double length = 1.0;
  double alpha = 0.0;
  std::vector<PotentialSample> potential;

  bool operator==(const EdgeSpec&) const = default;

  void validate() const {
    if (!(length > 0.0) || !std::isfinite(length))
      throw ValidationError("edge: length must be positive and finite");
    if (!(alpha >= 0.0 && alpha < pi))
      throw ValidationError("edge: alpha must lie in [0, pi)");
    if (potential.empty()) return;
    if (potential.front().x != 0.0)
      throw ValidationError("edge: first potential sample must sit at x = 0");
    if (potential.back().x != length)
      throw ValidationError("edge: last potential sample must sit at x = length");
    for (std::size_t i = 0; i < potential.size(); ++i) {
      const auto& s = potential[i];
      if (!std::isfinite(s.p) || !std::isfinite(s.q) || !std::isfinite(s.x))
        throw ValidationError("edge: potential samples must be finite");
      if (i > 0 && !(potential[i - 1].x < s.x))
        throw ValidationError("edge: potential sample positions must be strictly increasing");
    }
  }

  bool is_free() const {
    for (const auto& s : potential)
      if (s.p != 0.0 || s.q != 0.0) return false;
    return true;
  }

  /// Interior knot positions (sample abscissae); integrators step through them.
  std::vector<double> interior_knots() const {
    std::vector<double> ks;
    for (const auto& s : potential)
      if (s.x > 0.0 && s.x < length) ks.push_back(s.x);
    return ks;
  }
};

/// Piecewise-linear interpolation of the stored samples; exact at sample
/// points, (0,0) on a free edge.
inline std::pair<double, double> sample_potential(const EdgeSpec& edge, double x) {
  if (x < 0.0 || x > edge.length)
    throw ValidationError("sample_potential: x outside [0, length]");
  if (edge.potential.empty()) return {0.0, 0.0};
  const auto& ps = edge.potential;
  if (ps.size() == 1) return {ps[0].p, ps[0].q};
  auto it = std::upper_bound(ps.begin(), ps.end(), x,
                             [](double v, const PotentialSample& s) { return v < s.x; });
  if (it == ps.begin()) return {ps.front().p, ps.front().q};
  if (it == ps.end()) return {ps.back().p, ps.back().q};
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double t = (x - lo.x) / (hi.x - lo.x);
  return {lo.p + t * (hi.p - lo.p), lo.q + t * (hi.q - lo.q)};
}

/// Potential matrix V(x) = [[p, q], [q, -p]].
inline Eigen::Matrix2d potential_matrix(const EdgeSpec& edge, double x) {
  const auto [p, q] = sample_potential(edge, x);
  Eigen::Matrix2d v;
  v << p, q, q, -p;
  return v;
}

// ---------------------------------------------------------------------------
// StarGraph
// ---------------------------------------------------------------------------

struct StarGraph {
  std::vector<EdgeSpec> edges;

  bool operator==(const StarGraph&) const = default;

  std::size_t size() const { return edges.size(); }

  void validate() const {
    if (edges.empty()) throw ValidationError("graph: need at least one edge");
    for (const auto& e : edges) e.validate();
  }

  double min_length() const {
    double m = edges.front().length;
    for (const auto& e : edges) m = std::min(m, e.length);
    return m;
  }
  double max_length() const {
    double m = edges.front().length;
    for (const auto& e : edges) m = std::max(m, e.length);
    return m;
  }

  std::uint64_t hash() const {
    std::vector<double> data;
    for (const auto& e : edges) {
      data.push_back(e.length);
      data.push_back(e.alpha);
      for (const auto& s : e.potential) {
        data.push_back(s.x);
        data.push_back(s.p);
        data.push_back(s.q);
      }
      data.push_back(-1.0);  // edge separator
    }
    return hash_doubles(data);
  }
};

// ---------------------------------------------------------------------------
// MatchingCondition
// ---------------------------------------------------------------------------

/// Vertex condition at the central vertex: either the Robin family
/// (parameter tau, matrices of robin_matrices) or a general pair (A,B) with
/// rank(A B) = n and A B* = B A*.
struct MatchingCondition {
  enum class Kind { Robin, General };
  Kind kind = Kind::Robin;
  Tau tau;                  // Robin only
  Eigen::MatrixXcd A, B;    // General only

  static MatchingCondition robin(Tau t) {
    MatchingCondition m;
    m.kind = Kind::Robin;
    m.tau = t;
    return m;
  }
  static MatchingCondition general(Eigen::MatrixXcd a, Eigen::MatrixXcd b) {
    MatchingCondition m;
    m.kind = Kind::General;
    m.A = std::move(a);
    m.B = std::move(b);
    return m;
  }

  bool is_robin() const { return kind == Kind::Robin; }

  bool operator==(const MatchingCondition& o) const {
    if (kind != o.kind) return false;
    if (kind == Kind::Robin) return tau == o.tau;
    return A == o.A && B == o.B;
  }

  std::string str() const {
    if (kind == Kind::Robin) return "robin(" + tau.str() + ")";
    return "general(n=" + std::to_string(A.rows()) + ")";
  }
};

// ---------------------------------------------------------------------------
// GridFunction
// ---------------------------------------------------------------------------

/// Complex 2-vector function sampled on per-edge uniform grids covering
/// [0, l_j] inclusively. Column i of values holds (f, fhat) at x_i.
struct GridFunction {
  struct Component {
    double length = 1.0;
    Eigen::Matrix2Xcd values;

    Eigen::Index points() const { return values.cols(); }
    double spacing() const { return length / double(values.cols() - 1); }
    double x(Eigen::Index i) const { return double(i) * spacing(); }
  };
  std::vector<Component> edges;

  static GridFunction zeros(const StarGraph& g, Eigen::Index points_per_edge) {
    GridFunction f;
    for (const auto& e : g.edges) {
      Component c;
      c.length = e.length;
      c.values = Eigen::Matrix2Xcd::Zero(2, points_per_edge);
      f.edges.push_back(std::move(c));
    }
    return f;
  }

  void validate() const {
    for (const auto& c : edges) {
      if (c.points() < 2) throw ValidationError("grid function: need >= 2 points per edge");
      if (!c.values.allFinite()) throw ValidationError("grid function: values must be finite");
    }
  }
};

/// L2(G) inner product (f, g) = sum_j int (f_j conj(g_j) + fhat_j conj(ghat_j))
/// by composite Simpson on the stored grids.
inline Complex grid_inner(const GridFunction& f, const GridFunction& g) {
  if (f.edges.size() != g.edges.size())
    throw ValidationError("grid_inner: edge count mismatch");
  Complex total = 0.0;
  for (std::size_t j = 0; j < f.edges.size(); ++j) {
    const auto& a = f.edges[j];
    const auto& b = g.edges[j];
    if (a.points() != b.points())
      throw ValidationError("grid_inner: grid size mismatch");
    std::vector<Complex> vals(static_cast<std::size_t>(a.points()));
    for (Eigen::Index i = 0; i < a.points(); ++i)
      vals[static_cast<std::size_t>(i)] = b.values.col(i).dot(a.values.col(i));
    total += simpson(vals, a.spacing());
  }
  return total;
}

inline double grid_norm_sq(const GridFunction& f) { return std::real(grid_inner(f, f)); }

// ---------------------------------------------------------------------------
// Solver settings (config `solver` block)
// ---------------------------------------------------------------------------

struct SolverSettings {
  double ode_tol = 1e-10;    // relative ODE tolerance; absolute is ode_tol*1e-2
  double root_tol = 1e-8;    // eigenvalue refinement tolerance
  int grid_points = 1601;    // per-edge output grid (forced odd)
  std::array<double, 2> window{-10.0, 10.0};

  bool operator==(const SolverSettings&) const = default;

  void validate() const {
    if (!(ode_tol > 0) || !(root_tol > 0))
      throw ValidationError("solver: tolerances must be positive");
    if (grid_points < 3) throw ValidationError("solver: grid_points must be >= 3");
    if (!(window[0] < window[1])) throw ValidationError("solver: window must be nonempty");
  }
};

}  // namespace starspec

#endif  // STARSPEC_GRAPH_HPP
