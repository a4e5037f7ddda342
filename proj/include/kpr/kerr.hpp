#pragma once

// Kerr geometry on the domain of outer communication: Boyer-Lindquist and
// axis-adapted charts, index raising/lowering, constants of motion, and the
// umbilicity diagnostic for the r = const cylinders.
//
// Conventions: geometric units, signature (-,+,+,+), spin a >= 0, subcritical
// a < M. Energy is E = -p_t throughout. The Boyer-Lindquist chart is rejected
// too close to the rotation axis (sin^2(theta) < 1e-24); axis physics is done
// in the (t, r, x, y) chart, which extends smoothly through the poles.

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kpr/dual.hpp"

namespace kpr {

inline constexpr double kBlAxisGuard = 1e-24;  // minimum sin^2(theta) in the BL chart

struct KerrParams {
  double mass = 1.0;
  double spin = 0.0;

  KerrParams() = default;
  KerrParams(double m, double a) : mass(m), spin(a) {
    if (!(m > 0.0)) throw std::invalid_argument("KerrParams: mass must be positive");
    if (!(a >= 0.0 && a < m)) throw std::invalid_argument("KerrParams: need 0 <= a < M (subcritical)");
  }

  double horizon_radius() const { return mass + std::sqrt(mass * mass - spin * spin); }
};

enum class Chart { BoyerLindquist, AxisXY };

struct BlPoint {
  double t = 0.0;
  double r = 0.0;
  double theta = 0.0;  // latitude in (0, pi) off-axis
  double phi = 0.0;
};

// Axis-adapted point: x = r sin(theta) cos(phi), y = r sin(theta) sin(phi).
// Both hemispheres use the same (x, y); the hemisphere sign (sign of
// cos(theta)) disambiguates the inverse map. The metric components are even
// in cos(theta), so geometry in this chart never needs the hemisphere.
struct AxisPoint {
  double t = 0.0;
  double r = 0.0;
  double x = 0.0;
  double y = 0.0;
  int hemisphere = +1;  // +1 north (cos(theta) > 0), -1 south
};

struct Vec4 {
  std::array<double, 4> u{};  // contravariant components in the tagged chart
  Chart chart = Chart::BoyerLindquist;
};

struct Covec4 {
  std::array<double, 4> p{};  // covariant components in the tagged chart
  Chart chart = Chart::BoyerLindquist;
};

struct ScalarBundle {
  double S = 0.0;     // sin(theta)
  double C = 0.0;     // cos(theta)
  double rho2 = 0.0;  // r^2 + a^2 C^2
  double Delta = 0.0; // r^2 - 2 M r + a^2
  double Acal = 0.0;  // (r^2 + a^2)^2 - Delta a^2 S^2
};

struct MotionConstants {
  double q = 0.0;   // g(u, u)
  double E = 0.0;   // -p_t
  double L = 0.0;   // p_phi
  double Qc = 0.0;  // Carter constant, normalized so rho^4 (dtheta/ds)^2 = Qc - (L^2/S^2 - E^2 a^2) C^2
};

struct ConservedQuotients {
  double Phi = 0.0;  // L / E
  double Q = 0.0;    // Qc / E^2
};

using Mat4 = std::array<std::array<double, 4>, 4>;

template <class T>
using Mat4T = std::array<std::array<T, 4>, 4>;

inline ScalarBundle scalars(const KerrParams& k, double r, double theta) {
  if (!(r > 0.0)) throw std::domain_error("scalars: r must be positive");
  ScalarBundle b;
  b.S = std::sin(theta);
  b.C = std::cos(theta);
  const double a = k.spin;
  b.rho2 = r * r + a * a * b.C * b.C;
  b.Delta = r * r - 2.0 * k.mass * r + a * a;
  b.Acal = (r * r + a * a) * (r * r + a * a) - b.Delta * a * a * b.S * b.S;
  return b;
}

inline void require_off_axis(double S2, const char* who) {
  if (S2 < kBlAxisGuard)
    throw std::domain_error(std::string(who) + ": Boyer-Lindquist chart is degenerate on the axis");
}

// ---------------------------------------------------------------------------
// Boyer-Lindquist metric and inverse (closed form).

template <class T>
Mat4T<T> metric_bl_t(const KerrParams& k, T r, T S, T C) {
  const double M = k.mass, a = k.spin;
  const T rho2 = r * r + (a * a) * C * C;
  const T Delta = r * r - (2.0 * M) * r + a * a;
  const T Acal = (r * r + a * a) * (r * r + a * a) - Delta * (a * a) * S * S;
  Mat4T<T> g{};
  g[0][0] = -(1.0 - (2.0 * M) * r / rho2);
  g[1][1] = rho2 / Delta;
  g[2][2] = rho2;
  g[0][3] = g[3][0] = -(2.0 * M * a) * r * S * S / rho2;
  g[3][3] = Acal / rho2 * S * S;
  return g;
}

template <class T>
Mat4T<T> inverse_metric_bl_t(const KerrParams& k, T r, T S, T C) {
  const double M = k.mass, a = k.spin;
  const T rho2 = r * r + (a * a) * C * C;
  const T Delta = r * r - (2.0 * M) * r + a * a;
  const T Acal = (r * r + a * a) * (r * r + a * a) - Delta * (a * a) * S * S;
  Mat4T<T> gi{};
  gi[0][0] = -Acal / (Delta * rho2);
  gi[0][3] = gi[3][0] = -(2.0 * M * a) * r / (Delta * rho2);
  gi[1][1] = Delta / rho2;
  gi[2][2] = 1.0 / rho2;
  gi[3][3] = (Delta - (a * a) * S * S) / (Delta * rho2 * S * S);
  return gi;
}

inline Mat4 metric(const KerrParams& k, const BlPoint& x) {
  const ScalarBundle b = scalars(k, x.r, x.theta);
  require_off_axis(b.S * b.S, "metric");
  return metric_bl_t<double>(k, x.r, b.S, b.C);
}

inline Mat4 inverse_metric(const KerrParams& k, const BlPoint& x) {
  const ScalarBundle b = scalars(k, x.r, x.theta);
  require_off_axis(b.S * b.S, "inverse_metric");
  return inverse_metric_bl_t<double>(k, x.r, b.S, b.C);
}

// ---------------------------------------------------------------------------
// Axis-adapted chart metric and inverse, closed form in (r, x, y).
//
// With w^2 = x^2 + y^2, z^2 = r^2 - w^2 and sin^2(theta) = w^2 / r^2, every
// component below is rational in (r, x, y); the apparent 0/0 at w = 0 is
// removable and handled by the explicit on-axis branch.

template <class T>
Mat4T<T> metric_axis_t(const KerrParams& k, T r, T x, T y) {
  const double M = k.mass, a = k.spin;
  const T w2 = x * x + y * y;
  const T z2 = r * r - w2;
  const T rho2 = r * r + (a * a) * z2 / (r * r);
  const T Delta = r * r - (2.0 * M) * r + a * a;
  const T S2 = w2 / (r * r);
  const T Acal = (r * r + a * a) * (r * r + a * a) - Delta * (a * a) * S2;
  Mat4T<T> g{};
  g[0][0] = -(1.0 - (2.0 * M) * r / rho2);
  g[0][2] = g[2][0] = (2.0 * M * a) * y / (r * rho2);
  g[0][3] = g[3][0] = -(2.0 * M * a) * x / (r * rho2);
  g[1][1] = rho2 / Delta + rho2 * S2 / z2;
  g[1][2] = g[2][1] = -rho2 * x / (z2 * r);
  g[1][3] = g[3][1] = -rho2 * y / (z2 * r);
  const T Ptheta = rho2 / z2;            // weight of the latitude direction
  const T Pphi = Acal / (rho2 * r * r);  // weight of the longitude direction
  if (value_of(w2) == 0.0) {
    g[2][2] = Pphi;
    g[3][3] = Pphi;
  } else {
    g[2][2] = (Ptheta * x * x + Pphi * y * y) / w2;
    g[3][3] = (Ptheta * y * y + Pphi * x * x) / w2;
    g[2][3] = g[3][2] = (Ptheta - Pphi) * x * y / w2;
  }
  return g;
}

template <class T>
Mat4T<T> inverse_metric_axis_t(const KerrParams& k, T r, T x, T y) {
  const double M = k.mass, a = k.spin;
  const T w2 = x * x + y * y;
  const T z2 = r * r - w2;
  const T rho2 = r * r + (a * a) * z2 / (r * r);
  const T Delta = r * r - (2.0 * M) * r + a * a;
  const T S2 = w2 / (r * r);
  const T Acal = (r * r + a * a) * (r * r + a * a) - Delta * (a * a) * S2;
  const T gtt = -Acal / (Delta * rho2);
  const T gtp = -(2.0 * M * a) * r / (Delta * rho2);           // BL g^{t phi}
  const T grr = Delta / rho2;
  const T ghh = 1.0 / rho2;                                    // BL g^{theta theta}
  const T gpp_S2 = (Delta - (a * a) * S2) / (Delta * rho2);    // S^2 g^{phi phi}
  Mat4T<T> gi{};
  gi[0][0] = gtt;
  gi[0][2] = gi[2][0] = -y * gtp;
  gi[0][3] = gi[3][0] = x * gtp;
  gi[1][1] = grr;
  gi[1][2] = gi[2][1] = (x / r) * grr;
  gi[1][3] = gi[3][1] = (y / r) * grr;
  // g~^{xx} = (x/r)^2 g^{rr} + (z x / w)^2 g^{hh} + y^2 g^{pp}; the 1/w^2 is
  // absorbed against S^2 g^{pp} which is regular on the axis.
  const T Qtheta = z2 * ghh;            // (z/w)^2 terms carry x^2, y^2 factors below
  const T Qphi = (r * r) * gpp_S2;      // y^2 g^{pp} = (y^2/w^2) r^2 (S^2 g^{pp})
  if (value_of(w2) == 0.0) {
    gi[2][2] = ghh * (r * r);  // on-axis limit, both angular weights agree
    gi[3][3] = ghh * (r * r);
  } else {
    gi[2][2] = (x * x / (r * r)) * grr + (Qtheta * x * x + Qphi * y * y) / w2;
    gi[3][3] = (y * y / (r * r)) * grr + (Qtheta * y * y + Qphi * x * x) / w2;
    gi[2][3] = gi[3][2] = (x * y / (r * r)) * grr + (Qtheta - Qphi) * x * y / w2;
  }
  return gi;
}

inline Mat4 metric(const KerrParams& k, const AxisPoint& x) {
  return metric_axis_t<double>(k, x.r, x.x, x.y);
}

inline Mat4 inverse_metric(const KerrParams& k, const AxisPoint& x) {
  return inverse_metric_axis_t<double>(k, x.r, x.x, x.y);
}

// ---------------------------------------------------------------------------
// Index gymnastics.

inline Covec4 lower(const Mat4& g, const Vec4& v) {
  Covec4 p;
  p.chart = v.chart;
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += g[i][j] * v.u[j];
    p.p[i] = s;
  }
  return p;
}

inline Vec4 raise(const Mat4& gi, const Covec4& p) {
  Vec4 v;
  v.chart = p.chart;
  for (int i = 0; i < 4; ++i) {
    double s = 0.0;
    for (int j = 0; j < 4; ++j) s += gi[i][j] * p.p[j];
    v.u[i] = s;
  }
  return v;
}

inline Covec4 lower(const KerrParams& k, const BlPoint& x, const Vec4& v) {
  if (v.chart != Chart::BoyerLindquist)
    throw std::invalid_argument("lower: vector chart does not match Boyer-Lindquist point");
  return lower(metric(k, x), v);
}

inline Vec4 raise(const KerrParams& k, const BlPoint& x, const Covec4& p) {
  if (p.chart != Chart::BoyerLindquist)
    throw std::invalid_argument("raise: covector chart does not match Boyer-Lindquist point");
  return raise(inverse_metric(k, x), p);
}

inline Covec4 lower(const KerrParams& k, const AxisPoint& x, const Vec4& v) {
  if (v.chart != Chart::AxisXY)
    throw std::invalid_argument("lower: vector chart does not match axis-adapted point");
  return lower(metric(k, x), v);
}

inline Vec4 raise(const KerrParams& k, const AxisPoint& x, const Covec4& p) {
  if (p.chart != Chart::AxisXY)
    throw std::invalid_argument("raise: covector chart does not match axis-adapted point");
  return raise(inverse_metric(k, x), p);
}

// ---------------------------------------------------------------------------
// Constants of motion.
//
// The Carter constant is evaluated through the radial separation identity
//   Qc = r^2 q + (W^2 - Delta^2 p_r^2) / Delta - (L - a E)^2,
//   W = (r^2 + a^2) E - a L,
// which is smooth through the axis and agrees with the polar identity
// Qc = p_theta^2 + C^2 (L^2/S^2 - a^2 E^2) (for q = 0) off the axis.

inline double carter_from_radial(const KerrParams& k, double r, double q, double E,
                                 double L, double p_r) {
  const double a = k.spin;
  const double Delta = r * r - 2.0 * k.mass * r + a * a;
  const double W = (r * r + a * a) * E - a * L;
  const double laE = L - a * E;
  return r * r * q + (W * W - Delta * Delta * p_r * p_r) / Delta - laE * laE;
}

inline MotionConstants motion_constants(const KerrParams& k, const BlPoint& x, const Vec4& v) {
  const Mat4 g = metric(k, x);
  const Covec4 p = lower(g, v);
  MotionConstants mc;
  mc.E = -p.p[0];
  mc.L = p.p[3];
  mc.q = p.p[0] * v.u[0] + p.p[1] * v.u[1] + p.p[2] * v.u[2] + p.p[3] * v.u[3];
  mc.Qc = carter_from_radial(k, x.r, mc.q, mc.E, mc.L, p.p[1]);
  return mc;
}

inline MotionConstants motion_constants(const KerrParams& k, const AxisPoint& x, const Vec4& v) {
  const Mat4 g = metric(k, x);
  const Covec4 p = lower(g, v);
  MotionConstants mc;
  mc.E = -p.p[0];
  mc.L = -x.y * p.p[2] + x.x * p.p[3];                       // p_phi
  const double p_r_bl = p.p[1] + (x.x * p.p[2] + x.y * p.p[3]) / x.r;
  mc.q = p.p[0] * v.u[0] + p.p[1] * v.u[1] + p.p[2] * v.u[2] + p.p[3] * v.u[3];
  mc.Qc = carter_from_radial(k, x.r, mc.q, mc.E, mc.L, p_r_bl);
  return mc;
}

inline ConservedQuotients conserved_quotients(const MotionConstants& mc) {
  if (mc.E == 0.0)
    throw std::domain_error("conserved_quotients: E = 0 (use the zero-energy branch)");
  return {mc.L / mc.E, mc.Qc / (mc.E * mc.E)};
}

// ---------------------------------------------------------------------------
// Chart transition maps.

inline AxisPoint to_axis_chart(const KerrParams&, const BlPoint& x) {
  const double S = std::sin(x.theta), C = std::cos(x.theta);
  if (std::abs(C) < 1e-12)
    throw std::domain_error("to_axis_chart: equator is outside the hemisphere charts");
  require_off_axis(S * S, "to_axis_chart");  // transition needs both charts valid
  AxisPoint ax;
  ax.t = x.t;
  ax.r = x.r;
  ax.x = x.r * S * std::cos(x.phi);
  ax.y = x.r * S * std::sin(x.phi);
  ax.hemisphere = (C > 0.0) ? +1 : -1;
  return ax;
}

inline BlPoint from_axis_chart(const KerrParams&, const AxisPoint& ax) {
  const double w = std::hypot(ax.x, ax.y);
  if (w >= ax.r) throw std::domain_error("from_axis_chart: point outside the hemisphere (w >= r)");
  const double z = std::sqrt(ax.r * ax.r - w * w);
  BlPoint x;
  x.t = ax.t;
  x.r = ax.r;
  x.theta = std::atan2(w, ax.hemisphere > 0 ? z : -z);
  x.phi = std::atan2(ax.y, ax.x);
  return x;
}

// Contravariant components, BL -> axis chart (chain rule).
inline Vec4 axis_transform_vec(const KerrParams&, const BlPoint& x, const Vec4& v) {
  if (v.chart != Chart::BoyerLindquist)
    throw std::invalid_argument("axis_transform_vec: expected Boyer-Lindquist components");
  const double S = std::sin(x.theta), C = std::cos(x.theta);
  if (std::abs(C) < 1e-12) throw std::domain_error("axis_transform_vec: equator excluded");
  require_off_axis(S * S, "axis_transform_vec");
  const double cp = std::cos(x.phi), sp = std::sin(x.phi), r = x.r;
  Vec4 w;
  w.chart = Chart::AxisXY;
  w.u[0] = v.u[0];
  w.u[1] = v.u[1];
  w.u[2] = S * cp * v.u[1] + r * C * cp * v.u[2] - r * S * sp * v.u[3];
  w.u[3] = S * sp * v.u[1] + r * C * sp * v.u[2] + r * S * cp * v.u[3];
  return w;
}

// Contravariant components, axis chart -> BL (inverse chain rule; signed C).
inline Vec4 axis_transform_vec_back(const KerrParams& k, const AxisPoint& ax, const Vec4& v) {
  if (v.chart != Chart::AxisXY)
    throw std::invalid_argument("axis_transform_vec_back: expected axis-chart components");
  const BlPoint x = from_axis_chart(k, ax);
  const double S = std::sin(x.theta), C = std::cos(x.theta), r = x.r;
  require_off_axis(S * S, "axis_transform_vec_back");
  Vec4 w;
  w.chart = Chart::BoyerLindquist;
  w.u[0] = v.u[0];
  w.u[1] = v.u[1];
  w.u[2] = (ax.x * v.u[2] + ax.y * v.u[3] - r * S * S * v.u[1]) / (r * r * S * C);
  w.u[3] = (-ax.y * v.u[2] + ax.x * v.u[3]) / (r * r * S * S);
  return w;
}

// Covariant components transform with the transposed inverse Jacobian.
inline Covec4 axis_transform_covec(const KerrParams&, const BlPoint& x, const Covec4& p) {
  if (p.chart != Chart::BoyerLindquist)
    throw std::invalid_argument("axis_transform_covec: expected Boyer-Lindquist components");
  const double S = std::sin(x.theta), C = std::cos(x.theta), r = x.r;
  if (std::abs(C) < 1e-12) throw std::domain_error("axis_transform_covec: equator excluded");
  require_off_axis(S * S, "axis_transform_covec");
  const double cp = std::cos(x.phi), sp = std::sin(x.phi);
  Covec4 w;
  w.chart = Chart::AxisXY;
  w.p[0] = p.p[0];
  w.p[1] = p.p[1] - (S / (r * C)) * p.p[2];
  w.p[2] = (cp / (r * C)) * p.p[2] - (sp / (r * S)) * p.p[3];
  w.p[3] = (sp / (r * C)) * p.p[2] + (cp / (r * S)) * p.p[3];
  return w;
}

inline Covec4 axis_transform_covec_back(const KerrParams& k, const AxisPoint& ax, const Covec4& p) {
  if (p.chart != Chart::AxisXY)
    throw std::invalid_argument("axis_transform_covec_back: expected axis-chart components");
  const BlPoint x = from_axis_chart(k, ax);
  const double S = std::sin(x.theta), C = std::cos(x.theta), r = x.r;
  require_off_axis(S * S, "axis_transform_covec_back");
  const double cp = std::cos(x.phi), sp = std::sin(x.phi);
  Covec4 w;
  w.chart = Chart::BoyerLindquist;
  w.p[0] = p.p[0];
  w.p[2] = r * C * (cp * p.p[2] + sp * p.p[3]);
  w.p[3] = r * S * (-sp * p.p[2] + cp * p.p[3]);
  w.p[1] = p.p[1] + (ax.x * p.p[2] + ax.y * p.p[3]) / r;
  return w;
}

// ---------------------------------------------------------------------------
// Umbilicity diagnostic for the timelike cylinders {r = const}.
//
// The second fundamental form of {r = const} with respect to the unit normal
// d_r / sqrt(g_rr) is K_ij = (d/dr h_ij) / (2 sqrt(g_rr)) in the induced
// coordinates (t, theta, phi). The defect is the Frobenius norm of the
// trace-free part of the mixed tensor h^{ik} K_kj; it vanishes exactly when
// the cylinder is umbilical.

namespace detail {

// Induced 3-metric of {r = const} at (r, theta): indices (t, theta, phi).
inline std::array<std::array<double, 3>, 3> induced_cylinder_metric(const KerrParams& k,
                                                                    double r, double theta) {
  const ScalarBundle b = scalars(k, r, theta);
  std::array<std::array<double, 3>, 3> h{};
  h[0][0] = -(1.0 - 2.0 * k.mass * r / b.rho2);
  h[1][1] = b.rho2;
  h[0][2] = h[2][0] = -2.0 * k.mass * r * k.spin * b.S * b.S / b.rho2;
  h[2][2] = b.Acal / b.rho2 * b.S * b.S;
  return h;
}

}  // namespace detail

inline double umbilicity_defect(const KerrParams& k, double r, double theta) {
  const ScalarBundle b = scalars(k, r, theta);
  require_off_axis(b.S * b.S, "umbilicity_defect");
  if (!(r > k.horizon_radius()))
    throw std::domain_error("umbilicity_defect: r must be outside the horizon");

  // Central difference of the induced metric in r, Richardson-extrapolated once.
  const double h0 = 1e-6 * std::max(1.0, r);
  auto d_metric = [&](double step) {
    const auto hp = detail::induced_cylinder_metric(k, r + step, theta);
    const auto hm = detail::induced_cylinder_metric(k, r - step, theta);
    std::array<std::array<double, 3>, 3> d{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) d[i][j] = (hp[i][j] - hm[i][j]) / (2.0 * step);
    return d;
  };
  const auto d1 = d_metric(h0);
  const auto d2 = d_metric(h0 / 2.0);
  std::array<std::array<double, 3>, 3> dh{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) dh[i][j] = (4.0 * d2[i][j] - d1[i][j]) / 3.0;

  const double g_rr = b.rho2 / b.Delta;
  const double norm = 0.5 / std::sqrt(g_rr);
  std::array<std::array<double, 3>, 3> K{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) K[i][j] = norm * dh[i][j];

  // Inverse induced metric: theta block is diagonal, (t, phi) is a 2x2 block.
  const auto hm = detail::induced_cylinder_metric(k, r, theta);
  const double det_tp = hm[0][0] * hm[2][2] - hm[0][2] * hm[0][2];
  std::array<std::array<double, 3>, 3> hinv{};
  hinv[0][0] = hm[2][2] / det_tp;
  hinv[2][2] = hm[0][0] / det_tp;
  hinv[0][2] = hinv[2][0] = -hm[0][2] / det_tp;
  hinv[1][1] = 1.0 / hm[1][1];

  std::array<std::array<double, 3>, 3> A{};  // A^i_j = h^{ik} K_kj
  double trace = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int m = 0; m < 3; ++m) s += hinv[i][m] * K[m][j];
      A[i][j] = s;
    }
    trace += A[i][i];
  }
  double frob2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double entry = A[i][j] - (i == j ? trace / 3.0 : 0.0);
      frob2 += entry * entry;
    }
  return std::sqrt(frob2);
}

}  // namespace kpr
