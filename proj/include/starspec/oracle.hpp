#ifndef STARSPEC_ORACLE_HPP
#define STARSPEC_ORACLE_HPP

#include <Eigen/Sparse>

#include "starspec/matching.hpp"

namespace starspec {

/// Dense Hermitian discretization of the Dirac-Krein operator on the graph:
/// centered differences for -J d/dx with summation-by-parts boundary closure,
/// trapezoid mass, and constraint elimination of the outer boundary and
/// vertex matching rows. Desk-scale validation oracle only.
struct DiscreteOperator {
  std::vector<int> segments;       // M_j intervals per edge
  std::vector<double> spacing;     // h_j
  Eigen::MatrixXcd S;              // reduced operator (Hermitian)
  Eigen::MatrixXcd Mass;           // reduced HPD mass matrix
  Eigen::SparseMatrix<Complex> Z;  // full-variable basis of the constrained subspace
  double hermiticity_defect = 0.0; // relative, before symmetrization
  std::string matching;
  int full_dim = 0;
};

inline DiscreteOperator discretize(const StarGraph& graph, const MatchingCondition& mc,
                                   int points_per_unit) {
  graph.validate();
  if (points_per_unit < 16) throw ValidationError("discretize: need M >= 16 points per unit");
  const int n = static_cast<int>(graph.size());
  const BoundaryPair pair = boundary_pair_of(mc, n);
  if (!validate_matching(pair).pass)
    throw ValidationError("discretize: invalid matching condition");

  DiscreteOperator op;
  op.matching = mc.str();
  std::vector<int> offset(graph.size());
  int total = 0;
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const int mj = std::max(8, static_cast<int>(std::ceil(points_per_unit * graph.edges[j].length)));
    op.segments.push_back(mj);
    op.spacing.push_back(graph.edges[j].length / mj);
    offset[j] = total;
    total += 2 * (mj + 1);
  }
  op.full_dim = total;
  if (total > 9000) throw ValidationError("discretize: matrix dimension beyond desk scale");

  // W A with A = -J kron D + V, D the SBP first-derivative stencil
  std::vector<Eigen::Triplet<Complex>> wa;
  std::vector<Eigen::Triplet<Complex>> wmass;
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const auto& e = graph.edges[j];
    const int mj = op.segments[j];
    const double h = op.spacing[j];
    auto idx = [&](int node, int comp) { return offset[j] + 2 * node + comp; };
    for (int i = 0; i <= mj; ++i) {
      const double w = (i == 0 || i == mj) ? h / 2.0 : h;
      // w * (-J) * (D f)(i): -J = [[0,1],[-1,0]]
      auto add_deriv = [&](int to_node, double coef) {
        wa.emplace_back(idx(i, 0), idx(to_node, 1), Complex(w * coef));
        wa.emplace_back(idx(i, 1), idx(to_node, 0), Complex(-w * coef));
      };
      if (i == 0) {
        add_deriv(1, 1.0 / h);
        add_deriv(0, -1.0 / h);
      } else if (i == mj) {
        add_deriv(mj, 1.0 / h);
        add_deriv(mj - 1, -1.0 / h);
      } else {
        add_deriv(i + 1, 0.5 / h);
        add_deriv(i - 1, -0.5 / h);
      }
      const auto [p, q] = sample_potential(e, std::min(e.length, i * h));
      wa.emplace_back(idx(i, 0), idx(i, 0), Complex(w * p));
      wa.emplace_back(idx(i, 0), idx(i, 1), Complex(w * q));
      wa.emplace_back(idx(i, 1), idx(i, 0), Complex(w * q));
      wa.emplace_back(idx(i, 1), idx(i, 1), Complex(-w * p));
      wmass.emplace_back(idx(i, 0), idx(i, 0), Complex(w));
      wmass.emplace_back(idx(i, 1), idx(i, 1), Complex(w));
    }
  }
  Eigen::SparseMatrix<Complex> WA(total, total), W(total, total);
  WA.setFromTriplets(wa.begin(), wa.end());
  W.setFromTriplets(wmass.begin(), wmass.end());

  // Constraint elimination. Outer node of edge j: span{(sin a_j, -cos a_j)}.
  // Central nodes: kernel of [A B] P on the interleaved vector of
  // (f_j(v), fhat_j(v)).
  Eigen::MatrixXcd Ccent(n, 2 * n);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < n; ++j) {
      Ccent(r, 2 * j) = pair.A(r, j);
      Ccent(r, 2 * j + 1) = pair.B(r, j);
    }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Ccent, Eigen::ComputeFullV);
  if (svd.singularValues()(n - 1) <= 1e-12 * svd.singularValues()(0))
    throw ValidationError("discretize: matching constraints rank-deficient");
  const Eigen::MatrixXcd kernel = svd.matrixV().rightCols(n);

  const int reduced = total - 2 * n;
  std::vector<Eigen::Triplet<Complex>> zt;
  int col = 0;
  // interior variables keep identity columns
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const int mj = op.segments[j];
    for (int i = 1; i < mj; ++i)
      for (int comp = 0; comp < 2; ++comp)
        zt.emplace_back(offset[j] + 2 * i + comp, col++, Complex(1.0));
  }
  // one column per outer node
  for (std::size_t j = 0; j < graph.size(); ++j) {
    const auto& e = graph.edges[j];
    const int mj = op.segments[j];
    zt.emplace_back(offset[j] + 2 * mj + 0, col, Complex(std::sin(e.alpha)));
    zt.emplace_back(offset[j] + 2 * mj + 1, col, Complex(-std::cos(e.alpha)));
    ++col;
  }
  // n columns spanning the admissible central values
  for (int kcol = 0; kcol < n; ++kcol) {
    for (int j = 0; j < n; ++j)
      for (int comp = 0; comp < 2; ++comp) {
        const Complex v = kernel(2 * j + comp, kcol);
        if (v != Complex(0.0))
          zt.emplace_back(offset[static_cast<std::size_t>(j)] + comp, col, v);
      }
    ++col;
  }
  if (col != reduced) throw NumericError("discretize: reduction bookkeeping failed");
  op.Z.resize(total, reduced);
  op.Z.setFromTriplets(zt.begin(), zt.end());

  const Eigen::SparseMatrix<Complex> Ssp = op.Z.adjoint() * WA * op.Z;
  const Eigen::SparseMatrix<Complex> Msp = op.Z.adjoint() * W * op.Z;
  op.S = Eigen::MatrixXcd(Ssp);
  op.Mass = Eigen::MatrixXcd(Msp);
  op.hermiticity_defect = (op.S - op.S.adjoint()).norm() / std::max(1.0, op.S.norm());
  op.S = 0.5 * (op.S + op.S.adjoint()).eval();
  return op;
}

/// Full eigensolve of the constrained discretization with the
/// high-frequency (doubling) modes filtered by their oscillation ratio.
inline std::vector<double> oracle_solve(const DiscreteOperator& op,
                                        double oscillation_threshold = 1.0) {
  const bool realsym = op.S.imag().norm() < 1e-12 * std::max(1.0, op.S.norm()) &&
                       op.Mass.imag().norm() < 1e-12;
  Eigen::VectorXd lambdas;
  Eigen::MatrixXcd vectors;
  if (realsym) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(op.S.real(), op.Mass.real());
    if (es.info() != Eigen::Success) throw NumericError("oracle: eigensolver failed");
    lambdas = es.eigenvalues();
    vectors = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXcd> es(op.S, op.Mass);
    if (es.info() != Eigen::Success) throw NumericError("oracle: eigensolver failed");
    lambdas = es.eigenvalues();
    vectors = es.eigenvectors();
  }

  std::vector<double> kept;
  kept.reserve(static_cast<std::size_t>(lambdas.size()));
  for (Eigen::Index k = 0; k < lambdas.size(); ++k) {
    const Eigen::VectorXcd full = op.Z * vectors.col(k);
    // per-edge oscillation ratio sum ||x_{i+1}-x_i||^2 / sum ||x_i||^2;
    // grid-frequency doubling modes sit near 4, resolved modes near (lambda h)^2
    double num = 0.0, den = 0.0;
    int base = 0;
    for (std::size_t j = 0; j < op.segments.size(); ++j) {
      const int mj = op.segments[j];
      for (int i = 0; i < mj; ++i) {
        num += (full.segment(base + 2 * (i + 1), 2) - full.segment(base + 2 * i, 2))
                   .squaredNorm();
        den += full.segment(base + 2 * i, 2).squaredNorm();
      }
      den += full.segment(base + 2 * op.segments[j], 2).squaredNorm();
      base += 2 * (mj + 1);
    }
    if (den > 0.0 && num / den <= oscillation_threshold) kept.push_back(lambdas(k));
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Filtered discrete eigenvalues in [lo, hi].
inline std::vector<double> oracle_spectrum(const DiscreteOperator& op, double lo, double hi) {
  if (!(lo < hi)) throw ValidationError("oracle_spectrum: empty window");
  std::vector<double> out;
  for (double v : oracle_solve(op))
    if (v >= lo && v <= hi) out.push_back(v);
  return out;
}

/// Cluster sorted eigenvalues into multiplicity groups at tolerance
/// 1e-6 (1 + |lambda|) by default.
inline std::vector<std::pair<double, int>> cluster_multiplicities(
    const std::vector<double>& sorted, double tol_scale = 1e-6) {
  std::vector<std::pair<double, int>> out;
  for (double v : sorted) {
    if (!out.empty() && std::abs(v - out.back().first) <= tol_scale * (1.0 + std::abs(v))) {
      auto& [center, mult] = out.back();
      center = (center * mult + v) / (mult + 1);
      ++mult;
    } else {
      out.emplace_back(v, 1);
    }
  }
  return out;
}

}  // namespace starspec

#endif  // STARSPEC_ORACLE_HPP
