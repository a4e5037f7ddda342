#pragma once

// Fate of a photon from its conserved quotients and initial radial data.
// The decision walks the real-root structure of the scaled radial quartic:
// a photon either sits on a double root (spherical orbit), falls through the
// horizon, escapes to infinity, or was never admissible at all.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kpr/kerr.hpp"
#include "kpr/potentials.hpp"
#include "kpr/spherical_orbits.hpp"

namespace kpr {

enum class OrbitClass { TrappedSpherical, FallsIn, Escapes, Forbidden };

inline const char* to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::TrappedSpherical: return "TrappedSpherical";
    case OrbitClass::FallsIn: return "FallsIn";
    case OrbitClass::Escapes: return "Escapes";
    case OrbitClass::Forbidden: return "Forbidden";
  }
  return "?";
}

struct Classification {
  OrbitClass cls = OrbitClass::Forbidden;
  std::vector<double> turning_points;       // radii where dr/ds changes sign, in orbit order
  std::optional<double> asymptotic_radius;  // double root approached in infinite affine time
};

// Value of R(M)/E^2, the nonnegativity of which rules out trapped photons
// away from the spherical family:
//   R(M)/E^2 = M^2 ((Phi - 2a)^2 + M^2 - a^2) + (M^2 - a^2) Q.
inline double trapping_inequality(const KerrParams& k, const ConservedQuotients& cq) {
  const double M = k.mass, a = k.spin;
  return M * M * ((cq.Phi - 2.0 * a) * (cq.Phi - 2.0 * a) + M * M - a * a) +
         (M * M - a * a) * cq.Q;
}

// Roots of the zero-energy radial potential, r = M +- sqrt(M^2 - a^2 Qc / (L^2 + Qc)).
// At least one real root always lies at or inside the outer horizon, so no
// E = 0 photon is trapped.
inline std::optional<std::pair<double, double>> zero_energy_roots(const KerrParams& k,
                                                                  double L, double Qc) {
  if (L * L + Qc == 0.0)
    throw std::domain_error("zero_energy_roots: degenerate input L^2 + Qc = 0");
  const double M = k.mass, a = k.spin;
  const double disc = M * M - a * a * Qc / (L * L + Qc);
  if (disc < 0.0) return std::nullopt;
  const double s = std::sqrt(disc);
  return std::make_pair(M - s, M + s);
}

// If (Phi, Q) lies on the spherical-orbit curve within `tol` (dimensionless,
// Phi in units of M and Q in units of M^2), returns the family radius.
inline std::optional<double> is_on_trapped_curve(const KerrParams& k,
                                                 const ConservedQuotients& cq,
                                                 double tol = 1e-9) {
  const double M = k.mass;
  if (k.spin == 0.0) {
    // Schwarzschild: double root iff Phi^2 + Q = 27 M^2 (at r = 3M).
    if (std::abs(cq.Phi * cq.Phi + cq.Q - 27.0 * M * M) <= tol * 27.0 * M * M && cq.Q >= 0.0)
      return 3.0 * M;
    return std::nullopt;
  }
  const SphericalOrbitRange range = r_hat_bounds(k);
  const double phi_hi = phi_trap(k, range.inner);  // Phi_trap is strictly decreasing
  const double phi_lo = phi_trap(k, range.outer);
  const double slack = tol * M;
  if (cq.Phi > phi_hi + slack || cq.Phi < phi_lo - slack) return std::nullopt;
  double lo = range.inner, hi = range.outer;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * M; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi_trap(k, mid) > cq.Phi) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r_star = 0.5 * (lo + hi);
  if (std::abs(cq.Phi - phi_trap(k, r_star)) > tol * M) return std::nullopt;
  if (std::abs(cq.Q - q_trap(k, r_star)) > tol * M * M) return std::nullopt;
  return r_star;
}

namespace detail {

// Is the polar potential nonnegative somewhere off the axis (xi = C^2 < 1)?
inline bool polar_admissible_off_axis(const KerrParams& k, const ConservedQuotients& cq) {
  const double a = k.spin;
  if (cq.Q >= 0.0) return true;  // equator already admissible
  if (a == 0.0) return false;    // T(xi) = Q (1 - xi) - Phi^2 xi < 0 for Q < 0
  // Interior maximum of T(xi) = -a^2 xi^2 - (Q + Phi^2 - a^2) xi + Q.
  const double xi_star = (a * a - cq.Q - cq.Phi * cq.Phi) / (2.0 * a * a);
  if (xi_star <= 0.0 || xi_star >= 1.0) return false;
  const double t_star = -a * a * xi_star * xi_star -
                        (cq.Q + cq.Phi * cq.Phi - a * a) * xi_star + cq.Q;
  return t_star >= 0.0;
}

}  // namespace detail

inline Classification classify(const KerrParams& k, const ConservedQuotients& cq, double r0,
                               int sign_rdot, double tol = 1e-9) {
  const double M = k.mass;
  const double r_hor = k.horizon_radius();
  if (!(r0 > r_hor)) throw std::domain_error("classify: r0 must lie outside the horizon");
  if (sign_rdot != -1 && sign_rdot != 0 && sign_rdot != 1)
    throw std::invalid_argument("classify: sign_rdot must be -1, 0 or +1");

  Classification out;
  if (!detail::polar_admissible_off_axis(k, cq)) {
    out.cls = OrbitClass::Forbidden;
    return out;
  }

  const RadialPotential rp = scaled_radial_coeffs(k, cq);
  const double scale = radial_scale(rp, r0);
  const double r_tol = 1e-12 * scale;
  const double value0 = radial_eval(rp, r0);
  if (value0 < -r_tol) {
    out.cls = OrbitClass::Forbidden;
    return out;
  }

  // Spherical orbit: conserved quotients on the family curve with r0 at the
  // corresponding double root. The root splits like sqrt(tol) when the
  // quotients move off the curve, hence the radius tolerance.
  const std::optional<double> r_star = is_on_trapped_curve(k, cq, tol);
  if (r_star && std::abs(r0 - *r_star) <= std::sqrt(tol) * M) {
    out.cls = OrbitClass::TrappedSpherical;
    out.turning_points.push_back(*r_star);
    return out;
  }

  const RootMultiset roots = real_roots(rp, M);

  if (sign_rdot == 0) {
    // dr/ds = 0 away from a root contradicts the radial equation.
    if (std::abs(value0) > r_tol)
      throw std::invalid_argument("classify: sign_rdot = 0 off a radial root");
    // Reflection: the orbit moves toward the side where R > 0.
    sign_rdot = radial_deriv(rp, r0) >= 0.0 ? +1 : -1;
  }

  // Walk the admissible interval in the direction of motion. Simple roots
  // turn the orbit, double roots are reached only asymptotically; nearby
  // orbits reflect, and the class follows that continuation.
  double r_cur = r0;
  int dir = sign_rdot;
  for (int bounce = 0; bounce < 8; ++bounce) {
    if (dir > 0) {
      const RootMultiset::Root* next = nullptr;
      for (const auto& root : roots.roots)
        if (root.r > r_cur + 1e-12 * M && (!next || root.r < next->r)) next = &root;
      if (!next) {
        out.cls = OrbitClass::Escapes;
        return out;
      }
      out.turning_points.push_back(next->r);
      if (next->multiplicity > 1) out.asymptotic_radius = next->r;
      r_cur = next->r;
      dir = -1;
    } else {
      const RootMultiset::Root* next = nullptr;
      for (const auto& root : roots.roots)
        if (root.r < r_cur - 1e-12 * M && root.r > r_hor && (!next || root.r > next->r))
          next = &root;
      if (!next) {
        out.cls = OrbitClass::FallsIn;
        return out;
      }
      out.turning_points.push_back(next->r);
      if (next->multiplicity > 1) out.asymptotic_radius = next->r;
      r_cur = next->r;
      dir = +1;
    }
  }
  // A persistent bounded oscillation between two simple roots outside the
  // horizon would contradict the nonnegativity of R(M)/E^2; reaching this
  // point means the quotients sit numerically on top of the family curve.
  out.cls = OrbitClass::TrappedSpherical;
  return out;
}

}  // namespace kpr
