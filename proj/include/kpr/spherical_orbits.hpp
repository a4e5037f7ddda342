#pragma once

// The family of spherical photon orbits: impact parameters Phi_trap(r),
// Q_trap(r) solving R(r) = R'(r) = 0, the radial range of the family, the
// zero-angular-momentum radius, and the photon-region cross-section
// r_min(theta) <= r <= r_max(theta) with its normalized radial coordinate.

#include <cmath>
#include <optional>
#include <stdexcept>

#include "kpr/kerr.hpp"
#include "kpr/potentials.hpp"

namespace kpr {

struct SphericalOrbitRange {
  double inner = 0.0;  // corotating equatorial radius
  double outer = 0.0;  // counterrotating equatorial radius
};

struct RegionSlice {
  double theta = 0.0;
  double r_min = 0.0;
  double r_max = 0.0;
  double r_zero_l = 0.0;  // radius of the L = 0 spherical orbit (latitude independent)
};

struct TrappedFamilyPoint {
  double r = 0.0;
  double Phi = 0.0;
  double Q = 0.0;
};

inline void require_spinning(const KerrParams& k, const char* who) {
  if (k.spin == 0.0)
    throw std::domain_error(std::string(who) +
                            ": family is parametrized by radius only for a > 0 "
                            "(Schwarzschild collapses to the photon sphere r = 3M)");
}

inline double phi_trap(const KerrParams& k, double r) {
  require_spinning(k, "phi_trap");
  const double M = k.mass, a = k.spin;
  return -(r * r * r - 3.0 * M * r * r + a * a * r + a * a * M) / (a * (r - M));
}

inline double q_trap(const KerrParams& k, double r) {
  require_spinning(k, "q_trap");
  const double M = k.mass, a = k.spin;
  const double cubic = r * r * r - 6.0 * M * r * r + 9.0 * M * M * r - 4.0 * a * a * M;
  return -r * r * r * cubic / (a * a * (r - M) * (r - M));
}

inline TrappedFamilyPoint trapped_family_point(const KerrParams& k, double r) {
  return {r, phi_trap(k, r), q_trap(k, r)};
}

inline SphericalOrbitRange r_hat_bounds(const KerrParams& k) {
  const double M = k.mass, a = k.spin;
  SphericalOrbitRange out;
  out.inner = 2.0 * M * (1.0 + std::cos(2.0 / 3.0 * std::acos(-a / M)));
  out.outer = 2.0 * M * (1.0 + std::cos(2.0 / 3.0 * std::acos(a / M)));
  return out;
}

// Radius of the spherical orbit with vanishing angular momentum; the only
// member of the family whose orbit reaches the rotation axis.
inline double r_zero_angular_momentum(const KerrParams& k) {
  const double M = k.mass, a = k.spin;
  const double b = M * M - a * a / 3.0;
  const double arg = M * (M * M - a * a) / std::pow(b, 1.5);
  return M + 2.0 * std::sqrt(b) * std::cos(std::acos(std::min(1.0, arg)) / 3.0);
}

namespace detail {

// Polar potential along the family, as a function of orbit radius at fixed
// latitude: T(r; C) = Q_trap - (Q_trap + Phi_trap^2 - a^2) C^2 - a^2 C^4.
inline double family_polar(const KerrParams& k, double r, double C2) {
  const double a = k.spin;
  const double Q = q_trap(k, r), P = phi_trap(k, r);
  return Q - (Q + P * P - a * a) * C2 - a * a * C2 * C2;
}

inline double bisect_family_polar(const KerrParams& k, double lo, double hi, double C2,
                                  double tol) {
  double flo = family_polar(k, lo, C2);
  const double fhi = family_polar(k, hi, C2);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0)
    throw std::runtime_error("region_slice: polar boundary bracket failed");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = family_polar(k, mid, C2);
    if (fmid == 0.0) return mid;
    if (flo * fmid <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline RegionSlice region_slice(const KerrParams& k, double theta) {
  require_spinning(k, "region_slice");
  const double rm = r_zero_angular_momentum(k);
  RegionSlice slice;
  slice.theta = theta;
  slice.r_zero_l = rm;
  const double S = std::sin(theta);
  if (S * S < kBlAxisGuard) {  // poles: the cross-section degenerates to a point
    slice.r_min = slice.r_max = rm;
    return slice;
  }
  const double C = std::cos(theta);
  const double C2 = C * C;
  const SphericalOrbitRange range = r_hat_bounds(k);
  const double tol = 1e-12 * k.mass;
  if (C2 == 0.0) {  // equator: the cross-section is the full family range
    slice.r_min = range.inner;
    slice.r_max = range.outer;
    return slice;
  }
  slice.r_min = detail::bisect_family_polar(k, range.inner, rm, C2, tol);
  slice.r_max = detail::bisect_family_polar(k, rm, range.outer, C2, tol);
  return slice;
}

// Normalized radial coordinate across the crescent: rbar(theta, -1) = r_min,
// rbar(theta, 0) = r_zero_l, rbar(theta, 1) = r_max, strictly increasing in s.
inline double rbar(const KerrParams&, const RegionSlice& slice, double s) {
  if (!(s >= -1.0 && s <= 1.0)) throw std::domain_error("rbar: need s in [-1, 1]");
  const double rm = slice.r_zero_l;
  if (s < 0.0) return (rm - slice.r_min) * s + rm;
  const double ratio = (slice.r_max + slice.r_min - rm) / rm;
  if (!(ratio > 0.0)) throw std::runtime_error("rbar: degenerate slice geometry");
  return rm * std::pow(ratio, s * s) + (rm - slice.r_min) * s;
}

inline double rbar(const KerrParams& k, double theta, double s) {
  return rbar(k, region_slice(k, theta), s);
}

inline double rbar_inverse(const KerrParams& k, const RegionSlice& slice, double r) {
  const double pad = 1e-9 * k.mass;
  if (r < slice.r_min - pad || r > slice.r_max + pad)
    throw std::domain_error("rbar_inverse: radius outside [r_min, r_max]");
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rbar(k, slice, mid) < r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double rbar_inverse(const KerrParams& k, double theta, double r) {
  return rbar_inverse(k, region_slice(k, theta), r);
}

}  // namespace kpr
