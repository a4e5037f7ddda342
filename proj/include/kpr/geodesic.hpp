#pragma once

// Null geodesic integration in Hamiltonian form.
//
// The stepper advances the canonical flow of the conformally rescaled
// Hamiltonian Ht = rho^2 * (1/2) g^{ab} p_a p_b. On the null shell this flow
// traces the same geodesics with d(affine)/d(lambda) = rho^2, so the affine
// parameter is carried along as a quadrature variable. The rescaled
// Hamiltonian separates in Boyer-Lindquist coordinates,
//
//   Ht = 1/2 [ Delta p_r^2 - W^2/Delta + p_theta^2 + V^2 ],
//   W  = (r^2 + a^2) E - a L,     V = L/S - a E S,
//
// so the radial sector depends on (r, p_r, E, L) only: spherical orbits stay
// spherical to machine precision instead of being destroyed by the radial
// instability amplifying roundoff. Near the poles the integrator switches to
// the axis-adapted chart, where the same rescaled Hamiltonian is evaluated in
// closed form and differentiated with dual numbers.
//
// Integrator: Dormand-Prince 5(4) with PI step control and the standard
// quartic dense output, used for event localization (horizon shell, escape
// radius, affine budget).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kpr/classifier.hpp"
#include "kpr/dual.hpp"
#include "kpr/kerr.hpp"
#include "kpr/potentials.hpp"

namespace kpr {

struct PhaseState {
  Chart chart = Chart::BoyerLindquist;
  double t = 0.0;
  double r = 0.0;
  double q2 = 0.0;  // theta (BL) or x (axis chart)
  double q3 = 0.0;  // phi (BL) or y (axis chart)
  int hemisphere = +1;
  std::array<double, 4> p{};  // covariant momenta in the active chart
  double affine = 0.0;
};

inline BlPoint bl_point_of(const KerrParams& k, const PhaseState& st) {
  if (st.chart == Chart::BoyerLindquist) return {st.t, st.r, st.q2, st.q3};
  return from_axis_chart(k, AxisPoint{st.t, st.r, st.q2, st.q3, st.hemisphere});
}

inline MotionConstants motion_constants_of(const KerrParams& k, const PhaseState& st) {
  if (st.chart == Chart::BoyerLindquist) {
    const BlPoint x{st.t, st.r, st.q2, st.q3};
    const Vec4 u = raise(k, x, Covec4{st.p, Chart::BoyerLindquist});
    return motion_constants(k, x, u);
  }
  const AxisPoint x{st.t, st.r, st.q2, st.q3, st.hemisphere};
  const Vec4 u = raise(k, x, Covec4{st.p, Chart::AxisXY});
  return motion_constants(k, x, u);
}

// Build a null phase state from conserved quotients (E = 1 normalization):
// p_t = -E, p_phi = E Phi, p_theta = sign * E sqrt(Theta_s), p_r from R.
inline PhaseState phase_state_from_quotients(const KerrParams& k, const ConservedQuotients& cq,
                                             double r0, double theta0, int sign_pr,
                                             int sign_ptheta, double energy = 1.0) {
  const double a = k.spin;
  const double S = std::sin(theta0), C = std::cos(theta0);
  require_off_axis(S * S, "phase_state_from_quotients");
  const double theta_s = cq.Q - (cq.Phi * cq.Phi / (S * S) - a * a) * C * C;
  if (theta_s < -1e-12 * std::max(1.0, std::abs(cq.Q)))
    throw std::domain_error("phase_state_from_quotients: latitude not admissible (Theta < 0)");
  const RadialPotential rp = scaled_radial_coeffs(k, cq);
  const double rval = radial_eval(rp, r0);
  if (rval < -1e-12 * radial_scale(rp, r0))
    throw std::domain_error("phase_state_from_quotients: radius not admissible (R < 0)");
  const double Delta = r0 * r0 - 2.0 * k.mass * r0 + a * a;
  PhaseState st;
  st.chart = Chart::BoyerLindquist;
  st.t = 0.0;
  st.r = r0;
  st.q2 = theta0;
  st.q3 = 0.0;
  st.p[0] = -energy;
  st.p[1] = sign_pr * energy * std::sqrt(std::max(0.0, rval)) / Delta;
  st.p[2] = sign_ptheta * energy * std::sqrt(std::max(0.0, theta_s));
  st.p[3] = energy * cq.Phi;
  st.affine = 0.0;
  return st;
}

enum class Termination {
  HitHorizonShell,
  ReachedEscapeRadius,
  AffineBudgetExhausted,
  StepSizeUnderflow,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::HitHorizonShell: return "HitHorizonShell";
    case Termination::ReachedEscapeRadius: return "ReachedEscapeRadius";
    case Termination::AffineBudgetExhausted: return "AffineBudgetExhausted";
    case Termination::StepSizeUnderflow: return "StepSizeUnderflow";
  }
  return "?";
}

struct DriftRecord {
  double E = 0.0, L = 0.0, Qc = 0.0;  // max relative drifts
  double q_max = 0.0;                 // max |g(u,u)| seen
};

struct IntegrationResult {
  Termination termination = Termination::AffineBudgetExhausted;
  PhaseState final_state;
  DriftRecord drift;
  std::size_t steps = 0;
  double r_min = 0.0, r_max = 0.0;            // over the whole orbit
  double r_min_late = 0.0, r_max_late = 0.0;  // over the final half of the affine span
  std::vector<PhaseState> samples;            // per accepted step if requested
};

struct IntegratorOptions {
  double tol = 1e-12;           // local error tolerance (abs and rel)
  double affine_span = 200.0;   // affine budget in units of M
  double escape_radius = 1e3;   // in units of M
  double horizon_shell = 1e-6;  // shell above the horizon, in units of M
  double switch_lo = 0.005;     // enter axis chart below this sin^2(theta)
  double switch_hi = 0.02;      // leave axis chart above this sin^2(theta)
  bool record_trajectory = false;
  bool track_drift = true;
  std::size_t max_steps = 2000000;
};

namespace detail {

using State9 = std::array<double, 9>;  // (t, r, q2, q3, p0, p1, p2, p3, s)

// Canonical flow of the rescaled Hamiltonian in the BL chart (Mino time).
inline State9 rhs_bl(const KerrParams& k, const State9& y) {
  const double M = k.mass, a = k.spin;
  const double r = y[1], theta = y[2];
  const double p0 = y[4], p1 = y[5], p2 = y[6], p3 = y[7];
  const double S = std::sin(theta), C = std::cos(theta);
  const double E = -p0, L = p3;
  const double Delta = r * r - 2.0 * M * r + a * a;
  const double dDelta = 2.0 * r - 2.0 * M;
  const double W = (r * r + a * a) * E - a * L;
  const double V = L / S - a * E * S;
  const double rho2 = r * r + a * a * C * C;

  State9 dy{};
  dy[0] = (r * r + a * a) * W / Delta + a * S * V;  // dt
  dy[1] = Delta * p1;                               // dr
  dy[2] = p2;                                       // dtheta
  dy[3] = a * W / Delta + V / S;                    // dphi
  dy[4] = 0.0;                                      // p_t conserved
  // d(W^2/Delta)/dr, grouped so stationarity at a double root is exact.
  const double num = 2.0 * W * (2.0 * r * E) * Delta - W * W * dDelta;
  dy[5] = -0.5 * (dDelta * p1 * p1 - num / (Delta * Delta));  // dp_r
  dy[6] = -V * (C * (-a * E - p3 / (S * S)));                 // dp_theta = -V dV/dtheta
  dy[7] = 0.0;                                                // p_phi conserved
  dy[8] = rho2;                                               // d(affine)
  return dy;
}

// Same flow in the axis-adapted chart; gradients by dual numbers.
inline State9 rhs_axis(const KerrParams& k, const State9& y) {
  using D3 = Dual<3>;
  const double a = k.spin;
  const D3 r = D3::seed(y[1], 0);
  const D3 x = D3::seed(y[2], 1);
  const D3 yy = D3::seed(y[3], 2);
  const Mat4T<D3> gi = inverse_metric_axis_t<D3>(k, r, x, yy);
  const D3 z2 = r * r - (x * x + yy * yy);
  const D3 rho2 = r * r + (a * a) * z2 / (r * r);

  const std::array<double, 4> p{y[4], y[5], y[6], y[7]};
  D3 quad(0.0);
  std::array<D3, 4> gp{};
  for (int i = 0; i < 4; ++i) {
    D3 s(0.0);
    for (int j = 0; j < 4; ++j) s = s + gi[i][j] * p[j];
    gp[i] = s;
    quad = quad + p[i] * s;
  }
  const D3 ht = 0.5 * rho2 * quad;

  State9 dy{};
  for (int i = 0; i < 4; ++i) dy[i] = value_of(rho2) * value_of(gp[i]);
  dy[4] = 0.0;  // t is cyclic in this chart too
  dy[5] = -ht.d[0];
  dy[6] = -ht.d[1];
  dy[7] = -ht.d[2];
  dy[8] = value_of(rho2);
  return dy;
}

inline State9 rhs_chart(const KerrParams& k, Chart chart, const State9& y) {
  return chart == Chart::BoyerLindquist ? rhs_bl(k, y) : rhs_axis(k, y);
}

inline double sin2_of(Chart chart, const State9& y) {
  if (chart == Chart::BoyerLindquist) {
    const double s = std::sin(y[2]);
    return s * s;
  }
  return (y[2] * y[2] + y[3] * y[3]) / (y[1] * y[1]);
}

struct Dopri5Step {
  State9 y_new{};
  State9 k_last{};   // FSAL stage, f(y_new)
  double err = 0.0;  // scaled local error estimate
  std::array<State9, 5> rcont{};  // dense output coefficients
};

inline void dopri5_step(const KerrParams& k, Chart chart, const State9& y, const State9& k1,
                        double h, double tol, Dopri5Step& out) {
  static constexpr double a21 = 1.0 / 5.0;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                          a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                          b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0,
                          d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0,
                          d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  State9 tmp{};
  auto stage = [&](auto&&... terms) {
    for (std::size_t i = 0; i < 9; ++i) {
      double acc = 0.0;
      ((acc += terms.first * terms.second[i]), ...);
      tmp[i] = y[i] + h * acc;
    }
    return rhs_chart(k, chart, tmp);
  };

  const State9 k2 = stage(std::pair<double, const State9&>{a21, k1});
  const State9 k3 = stage(std::pair<double, const State9&>{a31, k1},
                          std::pair<double, const State9&>{a32, k2});
  const State9 k4 = stage(std::pair<double, const State9&>{a41, k1},
                          std::pair<double, const State9&>{a42, k2},
                          std::pair<double, const State9&>{a43, k3});
  const State9 k5 = stage(std::pair<double, const State9&>{a51, k1},
                          std::pair<double, const State9&>{a52, k2},
                          std::pair<double, const State9&>{a53, k3},
                          std::pair<double, const State9&>{a54, k4});
  const State9 k6 = stage(std::pair<double, const State9&>{a61, k1},
                          std::pair<double, const State9&>{a62, k2},
                          std::pair<double, const State9&>{a63, k3},
                          std::pair<double, const State9&>{a64, k4},
                          std::pair<double, const State9&>{a65, k5});

  State9& y_new = out.y_new;
  for (std::size_t i = 0; i < 9; ++i)
    y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  out.k_last = rhs_chart(k, chart, y_new);
  const State9& k7 = out.k_last;

  double err2 = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                           e7 * k7[i]);
    const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double w = ei / sc;
    err2 += w * w;
  }
  out.err = std::sqrt(err2 / 9.0);

  for (std::size_t i = 0; i < 9; ++i) {
    const double ydiff = y_new[i] - y[i];
    out.rcont[0][i] = y[i];
    out.rcont[1][i] = ydiff;
    out.rcont[2][i] = h * k1[i] - ydiff;
    out.rcont[3][i] = ydiff - h * k7[i] - out.rcont[2][i];
    out.rcont[4][i] =
        h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
  }
}

inline double dense_eval(const Dopri5Step& st, int comp, double sigma) {
  const double s1 = 1.0 - sigma;
  return st.rcont[0][comp] +
         sigma * (st.rcont[1][comp] +
                  s1 * (st.rcont[2][comp] + sigma * (st.rcont[3][comp] + s1 * st.rcont[4][comp])));
}

inline State9 dense_state(const Dopri5Step& st, double sigma) {
  State9 y{};
  for (int i = 0; i < 9; ++i) y[i] = dense_eval(st, i, sigma);
  return y;
}

// Smallest sigma in (0, 1] where component `comp` reaches `target`, assuming
// a crossing inside the step; bisection on the dense interpolant.
inline double locate_crossing(const Dopri5Step& st, int comp, double target) {
  double lo = 0.0, hi = 1.0;
  const bool below = dense_eval(st, comp, 0.0) < target;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    if ((dense_eval(st, comp, mid) < target) == below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;  // err on the "past the event" side
}

inline PhaseState unpack(Chart chart, int hemisphere, const State9& y) {
  PhaseState st;
  st.chart = chart;
  st.t = y[0];
  st.r = y[1];
  st.q2 = y[2];
  st.q3 = y[3];
  st.hemisphere = hemisphere;
  st.p = {y[4], y[5], y[6], y[7]};
  st.affine = y[8];
  return st;
}

inline void switch_chart(const KerrParams& k, Chart& chart, int& hemisphere, State9& y) {
  if (chart == Chart::BoyerLindquist) {
    const BlPoint x{y[0], y[1], y[2], y[3]};
    const AxisPoint ax = to_axis_chart(k, x);
    const Covec4 p = axis_transform_covec(k, x, Covec4{{y[4], y[5], y[6], y[7]},
                                                       Chart::BoyerLindquist});
    y = {ax.t, ax.r, ax.x, ax.y, p.p[0], p.p[1], p.p[2], p.p[3], y[8]};
    hemisphere = ax.hemisphere;
    chart = Chart::AxisXY;
  } else {
    const AxisPoint ax{y[0], y[1], y[2], y[3], hemisphere};
    const BlPoint x = from_axis_chart(k, ax);
    const Covec4 p =
        axis_transform_covec_back(k, ax, Covec4{{y[4], y[5], y[6], y[7]}, Chart::AxisXY});
    y = {x.t, x.r, x.theta, x.phi, p.p[0], p.p[1], p.p[2], p.p[3], y[8]};
    chart = Chart::BoyerLindquist;
  }
}

}  // namespace detail

// Affine-parameterized phase velocity d/ds (t, r, q2, q3, p0..p3) at a state.
inline std::array<double, 8> rhs(const KerrParams& k, const PhaseState& st) {
  detail::State9 y{st.t, st.r, st.q2, st.q3, st.p[0], st.p[1], st.p[2], st.p[3], st.affine};
  const detail::State9 dy = detail::rhs_chart(k, st.chart, y);
  std::array<double, 8> out{};
  const double rho2 = dy[8];
  for (int i = 0; i < 8; ++i) out[i] = dy[i] / rho2;
  return out;
}

inline IntegrationResult integrate(const KerrParams& k, const PhaseState& initial,
                                   const IntegratorOptions& opt = {}) {
  using detail::State9;
  const double M = k.mass;
  const double r_event_in = k.horizon_radius() + opt.horizon_shell * M;
  const double r_event_out = opt.escape_radius * M;
  const double s_end = initial.affine + opt.affine_span * M;

  Chart chart = initial.chart;
  int hemisphere = initial.hemisphere;
  State9 y{initial.t,    initial.r,    initial.q2,   initial.q3, initial.p[0],
           initial.p[1], initial.p[2], initial.p[3], initial.affine};

  IntegrationResult res;
  res.r_min = res.r_max = initial.r;

  const MotionConstants mc0 = motion_constants_of(k, initial);
  const double e_scale = std::max(std::abs(mc0.E), 1e-30);
  const double l_scale = std::max(std::abs(mc0.L), e_scale * M);
  const double qc_scale = std::max(std::abs(mc0.Qc), e_scale * e_scale * M * M);

  std::vector<std::pair<double, double>> r_history;  // (affine, r) per accepted step
  r_history.emplace_back(y[8], y[1]);
  if (opt.record_trajectory) res.samples.push_back(initial);

  auto track = [&](const State9& state) {
    res.r_min = std::min(res.r_min, state[1]);
    res.r_max = std::max(res.r_max, state[1]);
    r_history.emplace_back(state[8], state[1]);
    if (!opt.track_drift) return;
    const MotionConstants mc = motion_constants_of(k, detail::unpack(chart, hemisphere, state));
    res.drift.E = std::max(res.drift.E, std::abs(mc.E - mc0.E) / e_scale);
    res.drift.L = std::max(res.drift.L, std::abs(mc.L - mc0.L) / l_scale);
    res.drift.Qc = std::max(res.drift.Qc, std::abs(mc.Qc - mc0.Qc) / qc_scale);
    res.drift.q_max = std::max(res.drift.q_max, std::abs(mc.q));
  };

  State9 k1 = detail::rhs_chart(k, chart, y);
  double h = 1e-3;  // initial Mino step; the controller adapts immediately
  double err_prev = 1.0;
  detail::Dopri5Step step;

  while (true) {
    if (res.steps >= opt.max_steps) throw std::runtime_error("integrate: step budget exhausted");
    if (!(h > 1e-14)) {
      res.termination = Termination::StepSizeUnderflow;
      res.final_state = detail::unpack(chart, hemisphere, y);
      break;
    }

    detail::dopri5_step(k, chart, y, k1, h, opt.tol, step);
    res.steps += 1;

    if (!(step.err <= 1.0) || !std::isfinite(step.err)) {
      // Reject: shrink and retry.
      const double fac = std::isfinite(step.err)
                             ? std::max(0.2, 0.9 * std::pow(step.err, -0.2))
                             : 0.2;
      h *= std::min(fac, 0.9);
      continue;
    }

    // Events inside the accepted step: pick the earliest crossing.
    double sigma_event = 2.0;
    Termination term = Termination::AffineBudgetExhausted;
    const double r_new = step.y_new[1];
    const double s_new = step.y_new[8];
    if (s_new >= s_end) {
      const double sg = detail::locate_crossing(step, 8, s_end);
      if (sg < sigma_event) {
        sigma_event = sg;
        term = Termination::AffineBudgetExhausted;
      }
    }
    if (r_new <= r_event_in) {
      const double sg = detail::locate_crossing(step, 1, r_event_in);
      if (sg < sigma_event) {
        sigma_event = sg;
        term = Termination::HitHorizonShell;
      }
    }
    if (r_new >= r_event_out) {
      const double sg = detail::locate_crossing(step, 1, r_event_out);
      if (sg < sigma_event) {
        sigma_event = sg;
        term = Termination::ReachedEscapeRadius;
      }
    }

    if (sigma_event <= 1.0) {
      y = detail::dense_state(step, sigma_event);
      track(y);
      if (opt.record_trajectory) res.samples.push_back(detail::unpack(chart, hemisphere, y));
      res.termination = term;
      res.final_state = detail::unpack(chart, hemisphere, y);
      break;
    }

    y = step.y_new;
    k1 = step.k_last;  // FSAL
    track(y);
    if (opt.record_trajectory) res.samples.push_back(detail::unpack(chart, hemisphere, y));

    // PI step-size controller.
    const double err = std::max(step.err, 1e-10);
    double fac = 0.9 * std::pow(err, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
    fac = std::clamp(fac, 0.2, 5.0);
    h *= fac;
    err_prev = err;

    // Chart switching with hysteresis.
    const double s2 = detail::sin2_of(chart, y);
    if (chart == Chart::BoyerLindquist && s2 < opt.switch_lo) {
      detail::switch_chart(k, chart, hemisphere, y);
      k1 = detail::rhs_chart(k, chart, y);
    } else if (chart == Chart::AxisXY && s2 > opt.switch_hi) {
      detail::switch_chart(k, chart, hemisphere, y);
      k1 = detail::rhs_chart(k, chart, y);
    }
  }

  // Radial range over the late half of the affine span actually covered.
  const double s0 = r_history.front().first;
  const double s1 = r_history.back().first;
  const double s_half = s0 + 0.5 * (s1 - s0);
  double lo = res.final_state.r, hi = res.final_state.r;
  for (const auto& [s, r] : r_history) {
    if (s >= s_half) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  res.r_min_late = lo;
  res.r_max_late = hi;
  return res;
}

// Empirical orbit class from an integration outcome. A budget-exhausted run
// whose late radial range is pinched to within 1e-4 M is only a trapped
// *candidate*: finite integration can never certify trapping.
struct EmpiricalFate {
  OrbitClass cls = OrbitClass::Forbidden;
  bool trapped_candidate = false;
};

inline EmpiricalFate empirical_fate(const KerrParams& k, const IntegrationResult& res) {
  switch (res.termination) {
    case Termination::HitHorizonShell:
      return {OrbitClass::FallsIn, false};
    case Termination::ReachedEscapeRadius:
      return {OrbitClass::Escapes, false};
    case Termination::AffineBudgetExhausted:
    case Termination::StepSizeUnderflow: {
      const bool pinched = (res.r_max_late - res.r_min_late) <= 1e-4 * k.mass;
      return {OrbitClass::TrappedSpherical, pinched};
    }
  }
  return {OrbitClass::Forbidden, false};
}

}  // namespace kpr
