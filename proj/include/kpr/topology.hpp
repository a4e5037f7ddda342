#pragma once

// The t = 0, E = 1 slice of the trapped set in the cotangent bundle: the
// torus-style chart H over (theta, phi, s, sigma), the pole-cap angle map
// Psi, the fiber profile pbar2(p3) with its concavity margin, and winding
// indices of the two generating loop families.
//
// The second circle factor is [-1, 1] x {-1, +1} with (+-1, +1) ~ (+-1, -1):
// s sweeps the radial width of the crescent, sigma is the sign of p_theta.
//
// Pole-map momentum components: the cap chart pairs the covariant
// (p_theta, p_phi) with the gradients of (theta, phi) in the hemisphere
// coordinates,
//   pt2 = (cos(phi) p_theta + sin(phi) p_phi) / (r C),
//   pt3 = (-sin(phi) p_theta + cos(phi) p_phi) / (r S).
// The 1/C factor is odd under the hemisphere reflection while 1/S is even;
// that parity split is exactly what makes the two poles wind with opposite
// signs. The angle convention is atan2(pt2, pt3) and loop indices are
// reported with the clockwise orientation of that angle taken positive (the
// orientation is a convention; the measurable content is |index| = 1 and the
// relative signs).

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "kpr/kerr.hpp"
#include "kpr/spherical_orbits.hpp"

namespace kpr {

// Fixed orientation of the pole-chart angle circle: clockwise positive.
inline constexpr int kPoleAngleOrientation = -1;

struct TorusCoord {
  double theta = 0.0;
  double phi = 0.0;
  double s = 0.0;
  int sigma = +1;  // sign of p_theta; glued at s = +-1
};

struct P0Point {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  std::array<double, 4> p{};  // covariant Boyer-Lindquist momenta, p[0] = -1
  std::array<double, 4> u{};  // matching contravariant components
};

struct PoleChartValue {
  double theta = 0.0;
  double phi = 0.0;
  double angle = 0.0;  // atan2 class of (pt2, pt3)
};

// atan2 with the quadrant case split made explicit; equals std::atan2(v, u).
inline double pole_atan2(double v, double u) {
  if (u > 0.0) return std::atan(v / u);
  if (u < 0.0) {
    const double s = (v >= 0.0) ? 1.0 : -1.0;  // sgn with atan2(0,-1) = +pi
    return std::atan(v / u) + s * M_PI;
  }
  if (v == 0.0) throw std::domain_error("pole_atan2: undefined at the origin");
  return (v > 0.0 ? 0.5 : -0.5) * M_PI;
}

// Chart H: (theta, phi, s, sigma) -> point of the t = 0, E = 1 slice.
inline P0Point chart_H(const KerrParams& k, const RegionSlice& slice, const TorusCoord& tc) {
  const double r = rbar(k, slice, tc.s);
  const ScalarBundle b = scalars(k, r, tc.theta);
  require_off_axis(b.S * b.S, "chart_H");
  const double Phi = phi_trap(k, r), Q = q_trap(k, r);
  const double S2 = b.S * b.S, C2 = b.C * b.C;

  double radicand;
  if (tc.s == -1.0 || tc.s == 1.0) {
    radicand = 0.0;  // crescent boundary, where the two sigma sheets glue
  } else {
    radicand = Q - (Phi * Phi / S2 - k.spin * k.spin) * C2;
    if (radicand < -1e-14)
      throw std::domain_error("chart_H: radicand negative beyond boundary slack");
    radicand = std::max(radicand, 0.0);
  }

  P0Point out;
  out.r = r;
  out.theta = tc.theta;
  out.phi = tc.phi;
  out.u[1] = 0.0;
  out.u[2] = tc.sigma * std::sqrt(radicand) / b.rho2;  // e = 1 normalization
  out.u[3] = (2.0 * k.mass * r * k.spin + (b.rho2 - 2.0 * k.mass * r) * Phi / S2) /
             (b.Delta * b.rho2);

  // u^t: the root of the null condition with E = -p_t > 0 (unique; the two
  // roots of the quadratic straddle the E = 0 locus).
  const Mat4 g = metric_bl_t<double>(k, r, b.S, b.C);
  const double qa = g[0][0];
  const double qb = 2.0 * g[0][3] * out.u[3];
  const double qc = g[2][2] * out.u[2] * out.u[2] + g[3][3] * out.u[3] * out.u[3];
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) throw std::runtime_error("chart_H: null condition has no real root");
  const double sq = std::sqrt(disc);
  const double root1 = (-qb + sq) / (2.0 * qa);
  const double root2 = (-qb - sq) / (2.0 * qa);
  auto energy_of = [&](double u0) { return -(g[0][0] * u0 + g[0][3] * out.u[3]); };
  out.u[0] = energy_of(root1) > 0.0 ? root1 : root2;

  const Covec4 p = lower(g, Vec4{{out.u[0], out.u[1], out.u[2], out.u[3]},
                                 Chart::BoyerLindquist});
  out.p = p.p;
  return out;
}

inline P0Point chart_H(const KerrParams& k, const TorusCoord& tc) {
  return chart_H(k, region_slice(k, tc.theta), tc);
}

// Covariant pole-map components of a slice point.
inline std::pair<double, double> pole_components(const P0Point& pt) {
  const double S = std::sin(pt.theta), C = std::cos(pt.theta);
  const double cp = std::cos(pt.phi), sp = std::sin(pt.phi);
  const double pt2 = (cp * pt.p[2] + sp * pt.p[3]) / (pt.r * C);
  const double pt3 = (-sp * pt.p[2] + cp * pt.p[3]) / (pt.r * S);
  return {pt2, pt3};
}

inline PoleChartValue psi(const KerrParams& k, const P0Point& pt, double cap_sin2 = 0.05) {
  const double S = std::sin(pt.theta);
  if (!(S * S < cap_sin2))
    throw std::domain_error("psi: point outside the pole cap");
  const auto [pt2, pt3] = pole_components(pt);
  if (pt2 == 0.0 && pt3 == 0.0) throw std::domain_error("psi: zero momentum pair");
  return {pt.theta, pt.phi, pole_atan2(pt2, pt3)};
}

// ---------------------------------------------------------------------------
// Fiber profile: at fixed latitude, p_theta >= 0 as a function of p_phi.

// Open interval of angular momenta reached by the fiber at latitude theta0.
inline std::pair<double, double> fiber_interval(const KerrParams& k, const RegionSlice& slice) {
  return {phi_trap(k, slice.r_min), phi_trap(k, slice.r_max)};  // decreasing: (hi, lo)
}

inline double pbar2_squared(const KerrParams& k, const RegionSlice& slice, double p3) {
  const auto [hi, lo] = fiber_interval(k, slice);
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (!(p3 <= hi + slack && p3 >= lo - slack))
    throw std::domain_error("pbar2: p3 outside the fiber interval");
  // Invert the strictly decreasing Phi_trap on [r_min, r_max].
  double a = slice.r_min, b = slice.r_max;
  for (int it = 0; it < 200 && b - a > 1e-15 * k.mass; ++it) {
    const double mid = 0.5 * (a + b);
    if (phi_trap(k, mid) > p3) {
      a = mid;
    } else {
      b = mid;
    }
  }
  const double r = 0.5 * (a + b);
  const double S = std::sin(slice.theta), C = std::cos(slice.theta);
  const double C2 = C * C, S2 = S * S;
  return q_trap(k, r) - (p3 * p3 - k.spin * k.spin) * C2 / S2 - k.spin * k.spin * C2 * C2 / S2;
}

inline double pbar2_squared(const KerrParams& k, double theta0, double p3) {
  return pbar2_squared(k, region_slice(k, theta0), p3);
}

inline double pbar2(const KerrParams& k, double theta0, double p3) {
  return std::sqrt(std::max(0.0, pbar2_squared(k, theta0, p3)));
}

// Maximum centered second difference of pbar2^2 over an interior grid,
// normalized by the grid spacing squared (an estimate of max d^2/dp3^2).
inline double concavity_margin(const KerrParams& k, double theta0, int grid = 1000) {
  const RegionSlice slice = region_slice(k, theta0);
  const auto [hi, lo] = fiber_interval(k, slice);
  const double pad = 1e-6 * (hi - lo);
  const double a = lo + pad, b = hi - pad;
  const double h = (b - a) / (grid + 1);
  double prev2 = pbar2_squared(k, slice, a);
  double prev1 = pbar2_squared(k, slice, a + h);
  double worst = -1e300;
  for (int i = 2; i <= grid + 1; ++i) {
    const double cur = pbar2_squared(k, slice, a + i * h);
    worst = std::max(worst, (cur - 2.0 * prev1 + prev2) / (h * h));
    prev2 = prev1;
    prev1 = cur;
  }
  return worst;
}

// Largest sin^2(theta0) below which the fiber profile stays concave,
// searched on a grid with one bisection refinement at the first sign change.
inline double concavity_epsilon(const KerrParams& k, int scan = 64) {
  const double lo_s2 = 1e-4, hi_s2 = 0.98;
  double last_good = 0.0;
  double first_bad = -1.0;
  for (int i = 0; i <= scan; ++i) {
    const double s2 = lo_s2 * std::pow(hi_s2 / lo_s2, static_cast<double>(i) / scan);
    const double theta0 = M_PI - std::asin(std::sqrt(s2));
    if (concavity_margin(k, theta0, 400) < 0.0) {
      last_good = s2;
    } else {
      first_bad = s2;
      break;
    }
  }
  if (first_bad < 0.0) return last_good;  // concave over the whole scanned range
  double lo = last_good, hi = first_bad;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double theta0 = M_PI - std::asin(std::sqrt(mid));
    if (concavity_margin(k, theta0, 400) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

// ---------------------------------------------------------------------------
// Generating loops and winding indices.

enum class LoopFamily { PhiLoop, FiberLoop };  // gamma_1 and gamma_2

// Latitude of the deformed loop: theta(lambda) slides from theta0 across the
// equator to pi - theta0.
inline double loop_latitude(double theta0, double lambda) {
  return theta0 - lambda * (2.0 * theta0 - M_PI);
}

// Sampled loop in the slice. PhiLoop: phi sweeps the circle at s = 0,
// sigma = -1. FiberLoop: phi = 0 and (s, sigma) walks its glued circle,
// s rising on the sigma = +1 sheet and falling back on sigma = -1.
inline std::vector<P0Point> loops(const KerrParams& k, double lambda, double theta0,
                                  LoopFamily family, int samples) {
  if (samples < 8) throw std::invalid_argument("loops: need at least 8 samples");
  const double theta = loop_latitude(theta0, lambda);
  const RegionSlice slice = region_slice(k, theta);
  std::vector<P0Point> pts;
  pts.reserve(samples + 1);
  for (int i = 0; i <= samples; ++i) {
    const double w = static_cast<double>(i) / samples;
    TorusCoord tc;
    tc.theta = theta;
    if (family == LoopFamily::PhiLoop) {
      tc.phi = -M_PI + 2.0 * M_PI * w;
      tc.s = 0.0;
      tc.sigma = -1;
    } else {
      tc.phi = 0.0;
      if (w < 0.5) {
        tc.s = -1.0 + 4.0 * w;
        tc.sigma = +1;
      } else {
        tc.s = 1.0 - 4.0 * (w - 0.5);
        tc.sigma = -1;
      }
    }
    pts.push_back(chart_H(k, slice, tc));
  }
  return pts;
}

// Degree of a sampled circle map from unwrapped angle increments. Throws if
// any consecutive jump reaches pi/2 (sampling too sparse to trust).
inline int winding_index(const std::vector<double>& angles) {
  if (angles.size() < 2) throw std::invalid_argument("winding_index: too few samples");
  double total = 0.0;
  for (std::size_t i = 1; i < angles.size(); ++i) {
    double d = angles[i] - angles[i - 1];
    while (d > M_PI) d -= 2.0 * M_PI;
    while (d < -M_PI) d += 2.0 * M_PI;
    if (!(std::abs(d) < 0.5 * M_PI))
      throw std::runtime_error("winding_index: consecutive angle jump >= pi/2");
    total += d;
  }
  const double idx = total / (2.0 * M_PI);
  return static_cast<int>(std::lround(idx));
}

// Winding of the pole-chart angle along a loop, with automatic densification
// and the fixed clockwise-positive orientation applied.
inline int loop_winding(const KerrParams& k, double lambda, double theta0, LoopFamily family,
                        int samples, double cap_sin2 = 0.05) {
  for (int n = samples; n <= 16 * samples; n *= 2) {
    const std::vector<P0Point> loop = loops(k, lambda, theta0, family, n);
    std::vector<double> angles;
    angles.reserve(loop.size());
    for (const P0Point& pt : loop) angles.push_back(psi(k, pt, cap_sin2).angle);
    try {
      return kPoleAngleOrientation * winding_index(angles);
    } catch (const std::runtime_error&) {
      if (n == 16 * samples) throw;
    }
  }
  throw std::runtime_error("loop_winding: densification failed");
}

struct FactsReport {
  int gamma1_0 = 0, gamma1_1 = 0, gamma2_0 = 0, gamma2_1 = 0;
  bool pass = false;
};

// The four winding indices of the generating loops at lambda = 0 and 1.
// Expected sign pattern under the fixed orientation: (+1, -1, +1, -1).
inline FactsReport verify_facts(const KerrParams& k, double theta0, int samples = 256,
                                double cap_sin2 = 0.05) {
  FactsReport rep;
  rep.gamma1_0 = loop_winding(k, 0.0, theta0, LoopFamily::PhiLoop, samples, cap_sin2);
  rep.gamma1_1 = loop_winding(k, 1.0, theta0, LoopFamily::PhiLoop, samples, cap_sin2);
  rep.gamma2_0 = loop_winding(k, 0.0, theta0, LoopFamily::FiberLoop, samples, cap_sin2);
  rep.gamma2_1 = loop_winding(k, 1.0, theta0, LoopFamily::FiberLoop, samples, cap_sin2);
  rep.pass = rep.gamma1_0 == 1 && rep.gamma1_1 == -1 && rep.gamma2_0 == 1 && rep.gamma2_1 == -1;
  return rep;
}

}  // namespace kpr
