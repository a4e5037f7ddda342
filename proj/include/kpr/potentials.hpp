#pragma once

// Radial and polar potentials of Kerr photon motion and their real roots.
//
// Radial:  rho^4 (dr/ds)^2 = R(r) = E^2 r^4 + (a^2 E^2 - L^2 - Qc) r^2
//                                  + 2M ((aE - L)^2 + Qc) r - a^2 Qc,
// scaled by E^2 for E != 0 with Phi = L/E, Q = Qc/E^2.
// Polar (in xi = cos^2(theta)): S^2 Theta / E^2 = Q - (Q + Phi^2 - a^2) xi - a^2 xi^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kpr/kerr.hpp"

namespace kpr {

struct RadialPotential {
  std::array<double, 5> c{};  // c[k] multiplies r^k
  bool scaled = false;        // true when normalized by E^2
};

struct RootMultiset {
  struct Root {
    double r = 0.0;
    int multiplicity = 1;
  };
  std::vector<Root> roots;  // sorted ascending
  int complex_pairs = 0;

  int total_real_multiplicity() const {
    int n = 0;
    for (const auto& root : roots) n += root.multiplicity;
    return n;
  }
};

inline RadialPotential radial_coeffs(const KerrParams& k, const MotionConstants& mc) {
  const double a = k.spin, M = k.mass;
  RadialPotential rp;
  rp.scaled = false;
  rp.c[4] = mc.E * mc.E;
  rp.c[3] = 0.0;
  rp.c[2] = a * a * mc.E * mc.E - mc.L * mc.L - mc.Qc;
  rp.c[1] = 2.0 * M * ((a * mc.E - mc.L) * (a * mc.E - mc.L) + mc.Qc);
  rp.c[0] = -a * a * mc.Qc;
  return rp;
}

inline RadialPotential scaled_radial_coeffs(const KerrParams& k, const ConservedQuotients& cq) {
  const double a = k.spin, M = k.mass;
  RadialPotential rp;
  rp.scaled = true;
  rp.c[4] = 1.0;
  rp.c[3] = 0.0;
  rp.c[2] = a * a - cq.Phi * cq.Phi - cq.Q;
  rp.c[1] = 2.0 * M * ((a - cq.Phi) * (a - cq.Phi) + cq.Q);
  rp.c[0] = -a * a * cq.Q;
  return rp;
}

inline double radial_eval(const RadialPotential& rp, double r) {
  return (((rp.c[4] * r + rp.c[3]) * r + rp.c[2]) * r + rp.c[1]) * r + rp.c[0];
}

inline double radial_deriv(const RadialPotential& rp, double r) {
  return ((4.0 * rp.c[4] * r + 3.0 * rp.c[3]) * r + 2.0 * rp.c[2]) * r + rp.c[1];
}

// Scale used for "is this polynomial value numerically zero" decisions.
inline double radial_scale(const RadialPotential& rp, double r) {
  const double ar = std::abs(r);
  double s = 0.0, rk = 1.0;
  for (int kpow = 0; kpow <= 4; ++kpow) {
    s += std::abs(rp.c[kpow]) * rk;
    rk *= std::max(1.0, ar);
  }
  return std::max(s, 1e-300);
}

inline double polar_eval(const KerrParams& k, const ConservedQuotients& cq, double C) {
  if (!(C >= -1.0 && C <= 1.0)) throw std::domain_error("polar_eval: need C in [-1, 1]");
  const double a = k.spin, xi = C * C;
  return cq.Q - (cq.Q + cq.Phi * cq.Phi - a * a) * xi - a * a * xi * xi;
}

// Roots xi = cos^2(theta) of the polar potential inside [0, 1].
inline std::vector<double> polar_roots(const KerrParams& k, const ConservedQuotients& cq) {
  const double a = k.spin;
  const double b1 = -(cq.Q + cq.Phi * cq.Phi - a * a);  // linear coefficient
  std::vector<double> out;
  auto admit = [&out](double xi) {
    if (xi >= -1e-14 && xi <= 1.0 + 1e-14) out.push_back(std::clamp(xi, 0.0, 1.0));
  };
  if (a == 0.0) {
    if (b1 != 0.0) admit(-cq.Q / b1);  // Q + b1 xi = 0
  } else {
    const double A = -a * a, B = b1, Cc = cq.Q;
    const double disc = B * B - 4.0 * A * Cc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      // Stable quadratic: avoid cancellation in the smaller root.
      const double q = -0.5 * (B + (B >= 0.0 ? sq : -sq));
      if (q != 0.0) admit(Cc / q);
      admit(q / A);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double u, double v) { return std::abs(u - v) < 1e-14; }),
            out.end());
  return out;
}

// All real roots of the quartic via the companion-matrix eigenvalues, two
// Newton polishing steps each, then multiplicity clustering at 1e-7 M.
inline RootMultiset real_roots(const RadialPotential& rp, double mass_scale = 1.0) {
  if (rp.c[4] == 0.0) throw std::invalid_argument("real_roots: leading coefficient vanishes");
  const double c3 = rp.c[3] / rp.c[4], c2 = rp.c[2] / rp.c[4], c1 = rp.c[1] / rp.c[4],
               c0 = rp.c[0] / rp.c[4];

  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(0, 3) = -c0;
  companion(1, 3) = -c1;
  companion(2, 3) = -c2;
  companion(3, 3) = -c3;
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;

  Eigen::EigenSolver<Eigen::Matrix4d> es(companion, /*computeEigenvectors=*/false);
  const auto ev = es.eigenvalues();

  const double imag_tol = 1e-7 * std::max(mass_scale, 1.0);
  std::vector<double> candidates;
  int complex_pairs = 0;
  for (int i = 0; i < 4; ++i) {
    const double scale = std::max(1.0, std::abs(ev[i].real()));
    if (std::abs(ev[i].imag()) <= imag_tol * scale) {
      candidates.push_back(ev[i].real());
    }
  }
  complex_pairs = static_cast<int>(4 - candidates.size()) / 2;

  for (double& r : candidates) {
    for (int it = 0; it < 2; ++it) {
      const double f = radial_eval(rp, r);
      const double df = radial_deriv(rp, r);
      if (df != 0.0) {
        const double step = f / df;
        if (std::abs(step) < 0.5 * std::max(1.0, std::abs(r))) r -= step;
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());

  RootMultiset rm;
  rm.complex_pairs = complex_pairs;
  const double cluster = 1e-7 * mass_scale;
  for (double r : candidates) {
    if (!rm.roots.empty() && std::abs(r - rm.roots.back().r) <= cluster) {
      auto& last = rm.roots.back();
      last.r = (last.r * last.multiplicity + r) / (last.multiplicity + 1);
      last.multiplicity += 1;
    } else {
      rm.roots.push_back({r, 1});
    }
  }
  return rm;
}

}  // namespace kpr
