#pragma once

// Membership maps for the set of spherical-orbit photons in the tangent
// bundle, and finite-difference rank verification of their differentials.
//
// f (off axis, Boyer-Lindquist) vanishes exactly on the trapped set:
//   f1 = u^r,
//   f2 = (u^theta)^2 - e^2/rho^4 (Q_trap - (Phi_trap^2/S^2 - a^2) C^2),
//   f3 = u^phi - e/(Delta rho^2) (2 M r a + (rho^2 - 2 M r) Phi_trap / S^2),
// with e the energy reconstructed from u^t alone.
//
// h (any chart) compares constants of motion against the family values:
//   h = (q, K - E^2 Q_trap(r), L - E Phi_trap(r)),
// where K = Qc + (L - a E)^2 is the radial-action form of the Carter
// constant. The radial-action form is what keeps Dh full-rank on the axis:
// with the polar-form constant the three gradients become linearly dependent
// there (h2 - r^2 h1 collapses onto a multiple of h3), which a rank sweep
// readily exposes. On the trapped set h1 = h3 = 0 while h2 carries the exact
// residual E^2 (Phi_trap - a)^2.

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kpr/kerr.hpp"
#include "kpr/spherical_orbits.hpp"

namespace kpr {

struct TangentPoint {
  BlPoint x;
  Vec4 u;  // contravariant, Boyer-Lindquist
};

struct AxisTangentPoint {
  AxisPoint x;
  Vec4 u;  // contravariant, axis chart
};

// Energy as a function of (r, theta, u^t) on the family:
// e = u^t Delta rho^2 / (A - 2 M r a Phi_trap(r)).
inline double e_of(const KerrParams& k, double r, double theta, double u0) {
  const ScalarBundle b = scalars(k, r, theta);
  const double den = b.Acal - 2.0 * k.mass * r * k.spin * phi_trap(k, r);
  if (std::abs(den) < 1e-12 * std::max(1.0, b.Acal))
    throw std::domain_error("e_of: singular energy reconstruction");
  return u0 * b.Delta * b.rho2 / den;
}

// A genuine member of the trapped set at (r, theta), normalized to E = 1.
inline TangentPoint trapped_sample(const KerrParams& k, double r, double theta, int sign_p2) {
  const ScalarBundle b = scalars(k, r, theta);
  require_off_axis(b.S * b.S, "trapped_sample");
  const double Phi = phi_trap(k, r), Q = q_trap(k, r);
  double radicand = Q - (Phi * Phi / (b.S * b.S) - k.spin * k.spin) * b.C * b.C;
  if (radicand < -1e-14)
    throw std::domain_error("trapped_sample: (r, theta) outside the photon region");
  radicand = std::max(radicand, 0.0);
  TangentPoint tp;
  tp.x = BlPoint{0.0, r, theta, 0.0};
  tp.u.chart = Chart::BoyerLindquist;
  tp.u.u[0] = (b.Acal - 2.0 * k.mass * r * k.spin * Phi) / (b.Delta * b.rho2);
  tp.u.u[1] = 0.0;
  tp.u.u[2] = sign_p2 * std::sqrt(radicand) / b.rho2;
  tp.u.u[3] = (2.0 * k.mass * r * k.spin + (b.rho2 - 2.0 * k.mass * r) * Phi / (b.S * b.S)) /
              (b.Delta * b.rho2);
  return tp;
}

inline std::array<double, 3> f_map(const KerrParams& k, const TangentPoint& tp) {
  const ScalarBundle b = scalars(k, tp.x.r, tp.x.theta);
  require_off_axis(b.S * b.S, "f_map");
  const double Phi = phi_trap(k, tp.x.r), Q = q_trap(k, tp.x.r);
  const double e = e_of(k, tp.x.r, tp.x.theta, tp.u.u[0]);
  const double S2 = b.S * b.S, C2 = b.C * b.C;
  std::array<double, 3> f{};
  f[0] = tp.u.u[1];
  f[1] = tp.u.u[2] * tp.u.u[2] -
         e * e / (b.rho2 * b.rho2) * (Q - (Phi * Phi / S2 - k.spin * k.spin) * C2);
  f[2] = tp.u.u[3] -
         e / (b.Delta * b.rho2) * (2.0 * k.mass * tp.x.r * k.spin +
                                   (b.rho2 - 2.0 * k.mass * tp.x.r) * Phi / S2);
  return f;
}

namespace detail {

inline std::array<double, 3> h_from_constants(const KerrParams& k, double r,
                                              const MotionConstants& mc) {
  const double laE = mc.L - k.spin * mc.E;
  const double radial_form = mc.Qc + laE * laE;
  return {mc.q, radial_form - mc.E * mc.E * q_trap(k, r), mc.L - mc.E * phi_trap(k, r)};
}

}  // namespace detail

inline std::array<double, 3> h_map(const KerrParams& k, const TangentPoint& tp) {
  return detail::h_from_constants(k, tp.x.r, motion_constants(k, tp.x, tp.u));
}

inline std::array<double, 3> h_map(const KerrParams& k, const AxisTangentPoint& tp) {
  return detail::h_from_constants(k, tp.x.r, motion_constants(k, tp.x, tp.u));
}

// Exact residual of h2 on the trapped set (E = 1 samples): (Phi_trap - a)^2.
inline double h2_on_family(const KerrParams& k, double r, double energy = 1.0) {
  const double d = phi_trap(k, r) - k.spin;
  return energy * energy * d * d;
}

// 2 Delta u^t (1 - Q_trap(r) Delta / (r^2 + a^2)^2): the pivot entry that
// keeps Dh full-rank where the family meets the axis.
inline double heart(const KerrParams& k, double r, double u0) {
  const double Delta = r * r - 2.0 * k.mass * r + k.spin * k.spin;
  const double r2a2 = r * r + k.spin * k.spin;
  return 2.0 * Delta * u0 * (1.0 - q_trap(k, r) * Delta / (r2a2 * r2a2));
}

// Q solving the Phi = 0 radial turning condition; equals Q_trap at the
// zero-angular-momentum radius.
inline double axis_Q_value(const KerrParams& k, double r) {
  const double a = k.spin;
  const double Delta = r * r - 2.0 * k.mass * r + a * a;
  return (r * r * r * r + a * a * r * r + 2.0 * k.mass * a * a * r) / Delta;
}

// Residual of the identity 1 - Q_trap Delta/(r^2+a^2)^2 = Delta a^2/(r^2+a^2)^2
// at the zero-angular-momentum radius.
inline double heart_identity_residual(const KerrParams& k) {
  const double r = r_zero_angular_momentum(k);
  const double Delta = r * r - 2.0 * k.mass * r + k.spin * k.spin;
  const double r2a2 = r * r + k.spin * k.spin;
  const double lhs = 1.0 - q_trap(k, r) * Delta / (r2a2 * r2a2);
  const double rhs = Delta * k.spin * k.spin / (r2a2 * r2a2);
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Finite-difference Jacobian with singular-value rank check.

struct RankReport {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jacobian;
  std::array<double, 3> row_norms{};
  Eigen::Vector3d singular_values;  // of the row-scaled Jacobian
  bool finite = true;
  bool pass = false;
};

inline RankReport jacobian_rank(const std::function<std::array<double, 3>(const std::vector<double>&)>& map,
                                const std::vector<double>& x0, double step = 1e-6,
                                double sigma_min = 1e-6) {
  const int n = static_cast<int>(x0.size());
  RankReport rep;
  rep.jacobian.resize(3, n);
  std::vector<double> x = x0;
  for (int j = 0; j < n; ++j) {
    const double hj = step * std::max(1.0, std::abs(x0[j]));
    auto col = [&](double h) {
      x[j] = x0[j] + h;
      const auto fp = map(x);
      x[j] = x0[j] - h;
      const auto fm = map(x);
      x[j] = x0[j];
      return std::array<double, 3>{(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h),
                                   (fp[2] - fm[2]) / (2.0 * h)};
    };
    const auto d1 = col(hj);
    const auto d2 = col(hj / 2.0);
    for (int i = 0; i < 3; ++i) {
      const double richardson = (4.0 * d2[i] - d1[i]) / 3.0;
      rep.jacobian(i, j) = richardson;
      if (!std::isfinite(richardson)) rep.finite = false;
    }
  }
  if (!rep.finite) {
    rep.singular_values.setZero();
    return rep;
  }
  Eigen::Matrix<double, 3, Eigen::Dynamic> scaled = rep.jacobian;
  for (int i = 0; i < 3; ++i) {
    rep.row_norms[i] = rep.jacobian.row(i).norm();
    if (rep.row_norms[i] > 0.0) scaled.row(i) /= rep.row_norms[i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
  rep.singular_values = svd.singularValues();
  rep.pass = rep.singular_values.minCoeff() > sigma_min;
  return rep;
}

// f as a map of the 8 Boyer-Lindquist tangent-bundle variables
// (t, r, theta, phi, u^0..u^3).
inline std::function<std::array<double, 3>(const std::vector<double>&)> f_map_over_bl_vars(
    const KerrParams& k) {
  return [k](const std::vector<double>& v) {
    TangentPoint tp;
    tp.x = BlPoint{v[0], v[1], v[2], v[3]};
    tp.u = Vec4{{v[4], v[5], v[6], v[7]}, Chart::BoyerLindquist};
    return f_map(k, tp);
  };
}

// h as a map of the 8 axis-chart tangent-bundle variables (t, r, x, y, u~^0..u~^3).
inline std::function<std::array<double, 3>(const std::vector<double>&)> h_map_over_axis_vars(
    const KerrParams& k) {
  return [k](const std::vector<double>& v) {
    AxisTangentPoint tp;
    tp.x = AxisPoint{v[0], v[1], v[2], v[3], +1};
    tp.u = Vec4{{v[4], v[5], v[6], v[7]}, Chart::AxisXY};
    return h_map(k, tp);
  };
}

inline std::vector<double> pack_vars(const TangentPoint& tp) {
  return {tp.x.t, tp.x.r, tp.x.theta, tp.x.phi, tp.u.u[0], tp.u.u[1], tp.u.u[2], tp.u.u[3]};
}

inline std::vector<double> pack_vars(const AxisTangentPoint& tp) {
  return {tp.x.t, tp.x.r, tp.x.x, tp.x.y, tp.u.u[0], tp.u.u[1], tp.u.u[2], tp.u.u[3]};
}

inline AxisTangentPoint to_axis_chart(const KerrParams& k, const TangentPoint& tp) {
  AxisTangentPoint out;
  out.x = to_axis_chart(k, tp.x);
  out.u = axis_transform_vec(k, tp.x, tp.u);
  return out;
}

}  // namespace kpr
