#ifndef STARSPEC_MATCHING_HPP
#define STARSPEC_MATCHING_HPP

#include "starspec/weyl.hpp"

namespace starspec {

/// Boundary matrix pair (A,B) of a self-adjoint vertex condition
/// A f1#(v) + B f2#(v) = 0, subject to rank(A B) = n and A B* = B A*.
struct BoundaryPair {
  Eigen::MatrixXcd A, B;
  int n() const { return static_cast<int>(A.rows()); }
};

/// Complementary pair (C,D) with rank(C D) = n, C D* = D C*, B C* - A D* = I.
struct ComplementPair {
  Eigen::MatrixXcd C, D;
};

struct MatchingReport {
  int n = 0;
  int numeric_rank = 0;
  double selfadjoint_defect = 0.0;
  bool rank_ok = false;
  bool selfadjoint_ok = false;
  bool pass = false;
  std::string message;
};

/// Robin boundary matrices: cyclic difference rows plus the coupling row.
/// tau = 0 is the decoupled Dirichlet condition, tau = inf the condition
/// f_1(v)=...=f_n(v), sum fhat_j(v) = 0.
inline BoundaryPair robin_matrices(int n, Tau tau) {
  if (n < 1) throw ValidationError("robin_matrices: n must be >= 1");
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    A(i, i) = 1.0;
    A(i, i + 1) = -1.0;
  }
  if (tau.infinite) {
    for (int k = 0; k < n; ++k) B(n - 1, k) = 1.0;
  } else {
    A(n - 1, 0) = -1.0;
    for (int k = 0; k < n; ++k) B(n - 1, k) = tau.value;
  }
  return {A, B};
}

/// Numerical rank of (A B) via singular values at threshold 1e-10 sigma_max,
/// plus the self-adjointness defect ||A B* - B A*||_F.
inline MatchingReport validate_matching(const BoundaryPair& pair) {
  MatchingReport rep;
  if (pair.A.rows() != pair.A.cols() || pair.B.rows() != pair.B.cols() ||
      pair.A.rows() != pair.B.rows())
    throw ValidationError("validate_matching: A, B must be square of equal size");
  const int n = pair.n();
  rep.n = n;
  Eigen::MatrixXcd AB(n, 2 * n);
  AB << pair.A, pair.B;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(AB);
  const auto& sv = svd.singularValues();
  const double thresh = 1e-10 * sv(0);
  rep.numeric_rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rep.numeric_rank;
  rep.rank_ok = (rep.numeric_rank == n) && (sv(0) > 0.0);

  const Eigen::MatrixXcd defect = pair.A * pair.B.adjoint() - pair.B * pair.A.adjoint();
  rep.selfadjoint_defect = defect.norm();
  rep.selfadjoint_ok =
      rep.selfadjoint_defect <= 1e-10 * (pair.A.norm() * pair.B.norm() + 1.0);

  rep.pass = rep.rank_ok && rep.selfadjoint_ok;
  if (!rep.rank_ok)
    rep.message = "rank(A B) = " + std::to_string(rep.numeric_rank) + " < n";
  else if (!rep.selfadjoint_ok)
    rep.message = "A B* - B A* defect " + std::to_string(rep.selfadjoint_defect);
  else
    rep.message = "ok";
  return rep;
}

/// Complementary pair C = Q^{-1} B, D = -Q^{-1} A with Q = A A* + B B*.
inline ComplementPair complement_pair(const BoundaryPair& pair) {
  const Eigen::MatrixXcd Q = pair.A * pair.A.adjoint() + pair.B * pair.B.adjoint();
  Eigen::LLT<Eigen::MatrixXcd> llt(Q);
  if (llt.info() != Eigen::Success)
    throw ValidationError("complement_pair: Q = AA* + BB* numerically singular");
  return {llt.solve(pair.B), -llt.solve(pair.A)};
}

/// Diagonal Weyl matrix M(z) = diag(m_1(z), ..., m_n(z)).
inline Eigen::MatrixXcd weyl_matrix(const StarGraph& graph, Complex z,
                                    const OdeOptions& opt = {}) {
  const int n = static_cast<int>(graph.size());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) M(j, j) = m_value(graph.edges[static_cast<std::size_t>(j)], z, opt);
  return M;
}

/// Matrix Nevanlinna function W_{A,B}(z) = (D M(z) - C)(B M(z) - A)^{-1}.
inline Eigen::MatrixXcd w_function(const BoundaryPair& pair, const ComplementPair& comp,
                                   const StarGraph& graph, Complex z,
                                   const OdeOptions& opt = {}) {
  const Eigen::MatrixXcd M = weyl_matrix(graph, z, opt);
  const Eigen::MatrixXcd denom = pair.B * M - pair.A;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(denom);
  if (!lu.isInvertible())
    throw PoleError("w_function: B M(z) - A singular (spectral point)");
  return (comp.D * M - comp.C) * lu.inverse();
}

/// Reorder (u_1, uhat_1, ..., u_n, uhat_n) to (u_1..u_n, uhat_1..uhat_n).
inline Eigen::VectorXcd permute_interleaved(const Eigen::VectorXcd& u) {
  if (u.size() % 2 != 0) throw ValidationError("permute: vector length must be even");
  const Eigen::Index n = u.size() / 2;
  Eigen::VectorXcd out(u.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = u(2 * i);
    out(n + i) = u(2 * i + 1);
  }
  return out;
}

/// Inverse of permute_interleaved (its transpose).
inline Eigen::VectorXcd permute_blocked(const Eigen::VectorXcd& u) {
  if (u.size() % 2 != 0) throw ValidationError("permute: vector length must be even");
  const Eigen::Index n = u.size() / 2;
  Eigen::VectorXcd out(u.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    out(2 * i) = u(i);
    out(2 * i + 1) = u(n + i);
  }
  return out;
}

/// Boundary matrices used by the resolvent and by the oracle discretization.
inline BoundaryPair boundary_pair_of(const MatchingCondition& mc, int n) {
  if (mc.is_robin()) return robin_matrices(n, mc.tau);
  if (mc.A.rows() != n)
    throw ValidationError("matching: matrix size does not match the edge count");
  return {mc.A, mc.B};
}

}  // namespace starspec

#endif  // STARSPEC_MATCHING_HPP
