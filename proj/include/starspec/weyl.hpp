#ifndef STARSPEC_WEYL_HPP
#define STARSPEC_WEYL_HPP

#include "starspec/propagator.hpp"

namespace starspec {

/// Boundary data of one edge at the outer endpoint: (b c) = (cos a, sin a) Y(l,z)
/// and the z-derivatives from Ydot. m = b/c away from poles of m.
struct WeylSample {
  Complex z;
  Complex b, c;
  Complex bdot, cdot;
  Complex m;        // b/c, meaningful only when !pole
  int edge_index = 0;
  bool pole = false;

  Complex mdot() const { return (bdot * c - b * cdot) / (c * c); }
};

inline constexpr double pole_detection_factor = 1e-8;

/// Characteristic entries b, c, bdot, cdot of the edge at z from one joint
/// propagation of Y and Ydot. Flags z as a pole candidate of m when
/// |c| < 1e-8 max(1,|b|); m is left unset in that case.
inline WeylSample char_entries(const EdgeSpec& edge, Complex z, const OdeOptions& opt = {},
                               int edge_index = 0) {
  const auto r = propagate_with_derivative(edge, edge.length, z, opt);
  const double ca = std::cos(edge.alpha), sa = std::sin(edge.alpha);
  WeylSample w;
  w.z = z;
  w.edge_index = edge_index;
  w.b = ca * r.Y(0, 0) + sa * r.Y(1, 0);
  w.c = ca * r.Y(0, 1) + sa * r.Y(1, 1);
  const Mat2& yd = *r.Ydot;
  w.bdot = ca * yd(0, 0) + sa * yd(1, 0);
  w.cdot = ca * yd(0, 1) + sa * yd(1, 1);
  w.pole = std::abs(w.c) < pole_detection_factor * std::max(1.0, std::abs(w.b));
  if (!w.pole) w.m = w.b / w.c;
  return w;
}

/// Weyl-Titchmarsh function m_j(z) = b_j(z)/c_j(z).
inline Complex m_value(const EdgeSpec& edge, Complex z, const OdeOptions& opt = {}) {
  const auto w = char_entries(edge, z, opt);
  if (w.pole) throw PoleError("m: z is a pole candidate of the Weyl function");
  return w.m;
}

/// Robin aggregate m_tau(z) = 1/tau + sum_j m_j(z), with 1/inf = 0.
inline Complex m_tau(const StarGraph& graph, Tau tau, Complex z, const OdeOptions& opt = {}) {
  if (tau.is_zero())
    throw ValidationError("m_tau: tau = 0 is the decoupled Dirichlet operator");
  Complex acc = tau.reciprocal();
  for (std::size_t j = 0; j < graph.size(); ++j)
    acc += m_value(graph.edges[j], z, opt);
  return acc;
}

/// Nevanlinna kernel N(z,zeta) = (m(z) - conj m(zeta)) / (z - conj zeta).
inline Complex nevanlinna_kernel(const EdgeSpec& edge, Complex z, Complex zeta,
                                 const OdeOptions& opt = {}) {
  const Complex denom = z - std::conj(zeta);
  if (std::abs(denom) < 1e-14)
    throw ValidationError("nevanlinna_kernel: degenerate pair z = conj(zeta)");
  return (m_value(edge, z, opt) - std::conj(m_value(edge, zeta, opt))) / denom;
}

/// Free-edge denominator c^0(z) = sin(alpha - l z); used for argument tracking.
inline Complex free_c(const EdgeSpec& edge, Complex z) {
  return std::sin(Complex(edge.alpha) - edge.length * z);
}

}  // namespace starspec

#endif  // STARSPEC_WEYL_HPP
