#pragma once

// Verification sweeps behind the `verify-*` and `report` commands and the
// acceptance suite: family residual scans, orbit-stability integration,
// classifier falsification against the integrator, zero-energy root checks,
// submersion rank sweeps, winding-index checks, and photon-sphere limits.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kpr/classifier.hpp"
#include "kpr/geodesic.hpp"
#include "kpr/io.hpp"
#include "kpr/kerr.hpp"
#include "kpr/phase_space.hpp"
#include "kpr/potentials.hpp"
#include "kpr/rng.hpp"
#include "kpr/spherical_orbits.hpp"
#include "kpr/topology.hpp"

namespace kpr {

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n ? n : 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Family residual scan: R and dR/dr with (Phi_trap, Q_trap) inserted.

struct FamilyResidualRow {
  double r = 0.0, Phi = 0.0, Q = 0.0, R = 0.0, dR = 0.0;
};

struct FamilyResidualScan {
  std::vector<FamilyResidualRow> rows;
  double max_abs_R = 0.0;
  double max_abs_dR = 0.0;
};

inline FamilyResidualScan family_residual_scan(const KerrParams& k, int n_radii) {
  FamilyResidualScan scan;
  if (k.spin == 0.0) {
    // Photon sphere: single row, the polar member Phi = 0, Q = 27 M^2.
    const ConservedQuotients cq{0.0, 27.0 * k.mass * k.mass};
    const RadialPotential rp = scaled_radial_coeffs(k, cq);
    const double r = 3.0 * k.mass;
    scan.rows.push_back({r, cq.Phi, cq.Q, radial_eval(rp, r), radial_deriv(rp, r)});
  } else {
    const SphericalOrbitRange range = r_hat_bounds(k);
    scan.rows.resize(n_radii);
    for (int i = 0; i < n_radii; ++i) {
      const double r = range.inner + (i + 1) * (range.outer - range.inner) / (n_radii + 1);
      const ConservedQuotients cq{phi_trap(k, r), q_trap(k, r)};
      const RadialPotential rp = scaled_radial_coeffs(k, cq);
      scan.rows[i] = {r, cq.Phi, cq.Q, radial_eval(rp, r), radial_deriv(rp, r)};
    }
  }
  for (const auto& row : scan.rows) {
    scan.max_abs_R = std::max(scan.max_abs_R, std::abs(row.R));
    scan.max_abs_dR = std::max(scan.max_abs_dR, std::abs(row.dR));
  }
  return scan;
}

// ---------------------------------------------------------------------------
// Spherical-orbit stability: integrate the equatorial family member at r0
// and report the radial excursion plus constants drift.

struct StabilityReport {
  double max_r_excursion = 0.0;
  DriftRecord drift;
  Termination termination = Termination::AffineBudgetExhausted;
};

inline StabilityReport spherical_orbit_stability(const KerrParams& k, double r0,
                                                 double affine_span = 200.0,
                                                 double tol = 1e-12) {
  const ConservedQuotients cq{phi_trap(k, r0), q_trap(k, r0)};
  PhaseState seed = phase_state_from_quotients(k, cq, r0, M_PI / 2.0, +1, +1);
  IntegratorOptions opt;
  opt.tol = tol;
  opt.affine_span = affine_span;
  StabilityReport rep;
  const IntegrationResult res = integrate(k, seed, opt);
  rep.max_r_excursion = std::max(res.r_max - r0, r0 - res.r_min);
  rep.drift = res.drift;
  rep.termination = res.termination;
  return rep;
}

// ---------------------------------------------------------------------------
// Falsification sweep: R(M)/E^2 >= 0 over random quotients, plus random
// classifier-vs-integrator cross checks.

struct FalsificationReport {
  std::size_t inequality_samples = 0;
  std::size_t inequality_violations = 0;
  double inequality_min = 0.0;
  std::size_t cross_checks = 0;
  std::size_t cross_skipped_band = 0;
  std::size_t cross_agreements = 0;
  std::size_t cross_disagreements = 0;
};

namespace detail {

struct SweepDraw {
  KerrParams k;
  ConservedQuotients cq;
  double r0 = 0.0;
  int sign = +1;
};

inline SweepDraw draw_sample(SplitMix64& rng, bool positive_q) {
  SweepDraw d;
  const double a = rng.uniform(0.0, 0.999);
  d.k = KerrParams(1.0, a);
  d.cq.Phi = rng.uniform(-8.0, 8.0);
  d.cq.Q = positive_q ? rng.uniform(1e-6, 40.0) : rng.uniform(-10.0, 40.0);
  d.r0 = rng.uniform(d.k.horizon_radius() + 0.2, 20.0);
  d.sign = rng.next_double() < 0.5 ? -1 : +1;
  return d;
}

}  // namespace detail

inline FalsificationReport falsification_sweep(std::size_t n_inequality, std::size_t n_cross,
                                               std::uint64_t seed, double curve_tol = 1e-9) {
  FalsificationReport rep;
  rep.inequality_samples = n_inequality;
  rep.cross_checks = n_cross;

  std::vector<double> ineq(n_inequality);
  parallel_for(n_inequality, [&](std::size_t i) {
    SplitMix64 rng = SplitMix64::for_index(seed, i);
    const detail::SweepDraw d = detail::draw_sample(rng, /*positive_q=*/true);
    ineq[i] = trapping_inequality(d.k, d.cq);
  });
  rep.inequality_min = ineq.empty() ? 0.0 : ineq[0];
  for (double v : ineq) {
    rep.inequality_min = std::min(rep.inequality_min, v);
    if (v < 0.0) rep.inequality_violations++;
  }

  // Cross checks: 0 = agree, 1 = disagree, 2 = skipped (curve band).
  std::vector<unsigned char> outcome(n_cross, 0);
  parallel_for(n_cross, [&](std::size_t i) {
    SplitMix64 rng = SplitMix64::for_index(seed ^ 0x5bf0363546bc3ed2ULL, i);
    const detail::SweepDraw d = detail::draw_sample(rng, /*positive_q=*/true);

    if (is_on_trapped_curve(d.k, d.cq, 10.0 * curve_tol)) {
      outcome[i] = 2;
      return;
    }
    Classification cls;
    try {
      cls = classify(d.k, d.cq, d.r0, d.sign, curve_tol);
    } catch (const std::exception&) {
      outcome[i] = 1;
      return;
    }

    PhaseState st;
    bool constructed = true;
    try {
      st = phase_state_from_quotients(d.k, d.cq, d.r0, M_PI / 2.0, d.sign, +1);
    } catch (const std::exception&) {
      constructed = false;
    }
    if (!constructed) {
      // No real momentum exists; the classifier must have said Forbidden.
      outcome[i] = cls.cls == OrbitClass::Forbidden ? 0 : 1;
      return;
    }
    if (cls.cls == OrbitClass::Forbidden) {
      outcome[i] = 1;
      return;
    }

    IntegratorOptions opt;
    opt.tol = 1e-10;
    opt.affine_span = 5000.0;
    opt.track_drift = false;
    const IntegrationResult res = integrate(d.k, st, opt);
    const EmpiricalFate fate = empirical_fate(d.k, res);
    if (fate.cls == OrbitClass::FallsIn || fate.cls == OrbitClass::Escapes) {
      outcome[i] = fate.cls == cls.cls ? 0 : 1;
    } else {
      // Budget exhausted away from the curve band counts against agreement.
      outcome[i] = 1;
    }
  });
  for (unsigned char o : outcome) {
    if (o == 0) rep.cross_agreements++;
    if (o == 1) rep.cross_disagreements++;
    if (o == 2) rep.cross_skipped_band++;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Zero-energy exclusion sweep.

struct ZeroEnergyReport {
  std::size_t samples = 0;
  std::size_t real_pairs = 0;
  std::size_t violations = 0;  // both roots strictly outside the horizon
};

inline ZeroEnergyReport zero_energy_sweep(std::size_t n, std::uint64_t seed) {
  ZeroEnergyReport rep;
  rep.samples = n;
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng = SplitMix64::for_index(seed ^ 0x94d049bb133111ebULL, i);
    const double a = rng.uniform(0.0, 0.999);
    const KerrParams k(1.0, a);
    const double L = rng.uniform(-10.0, 10.0);
    const double Qc = rng.uniform(-5.0, 50.0);
    if (L * L + Qc <= 1e-12) continue;
    const auto roots = zero_energy_roots(k, L, Qc);
    if (!roots) continue;
    rep.real_pairs++;
    const double r_hor = k.horizon_radius();
    if (roots->first > r_hor && roots->second > r_hor) rep.violations++;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Submersion rank sweep.

struct SubmanifoldReport {
  std::size_t f_samples = 0;
  std::size_t h_samples = 0;
  double f_sigma_min = 1e300;   // min over the sweep of row-scaled sigma_min
  double h_sigma_min = 1e300;
  double heart_residual_max = 0.0;
  double f_residual_max = 0.0;  // |f| on constructed members
  std::vector<std::string> failures;
};

inline SubmanifoldReport submanifold_report(const KerrParams& k, int n_f, int n_h,
                                            double sigma_threshold = 1e-6) {
  SubmanifoldReport rep;

  // Off-axis grid: latitudes well away from the poles, radii across the slice.
  {
    const int n_theta = std::max(2, static_cast<int>(std::lround(std::sqrt(double(n_f)))));
    const int n_s = (n_f + n_theta - 1) / n_theta;
    std::vector<double> sigmas(static_cast<std::size_t>(n_theta) * n_s, 1e300);
    std::vector<double> fres(sigmas.size(), 0.0);
    parallel_for(sigmas.size(), [&](std::size_t idx) {
      const int it = static_cast<int>(idx) / n_s;
      const int is = static_cast<int>(idx) % n_s;
      const double theta = M_PI * (0.08 + 0.84 * (it + 0.5) / n_theta);
      const RegionSlice slice = region_slice(k, theta);
      const double s = -0.98 + 1.96 * (is + 0.5) / n_s;
      const double r = rbar(k, slice, s);
      const TangentPoint tp = trapped_sample(k, r, theta, (is % 2) ? +1 : -1);
      const auto fv = f_map(k, tp);
      fres[idx] = std::max({std::abs(fv[0]), std::abs(fv[1]), std::abs(fv[2])});
      const RankReport rr = jacobian_rank(f_map_over_bl_vars(k), pack_vars(tp));
      sigmas[idx] = rr.finite ? rr.singular_values.minCoeff() : 0.0;
    });
    rep.f_samples = sigmas.size();
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      rep.f_sigma_min = std::min(rep.f_sigma_min, sigmas[i]);
      rep.f_residual_max = std::max(rep.f_residual_max, fres[i]);
    }
    if (rep.f_sigma_min <= sigma_threshold)
      rep.failures.push_back("off-axis rank margin too small");
  }

  // Axis caps: sin^2(theta) < 1e-4, both hemispheres, radii across the slice.
  {
    const int per_cap = std::max(1, n_h / 2);
    const int n_lat = std::max(2, static_cast<int>(std::lround(std::sqrt(double(per_cap)))));
    const int n_s = (per_cap + n_lat - 1) / n_lat;
    std::vector<double> sigmas(2u * n_lat * n_s, 1e300);
    parallel_for(sigmas.size(), [&](std::size_t idx) {
      const int cap = static_cast<int>(idx) / (n_lat * n_s);  // 0 north, 1 south
      const int rem = static_cast<int>(idx) % (n_lat * n_s);
      const int il = rem / n_s;
      const int is = rem % n_s;
      const double sin2 = 1e-5 + (1e-4 - 1e-5) * (il + 0.5) / n_lat;
      const double theta_north = std::asin(std::sqrt(sin2));
      const double theta = cap == 0 ? theta_north : M_PI - theta_north;
      const RegionSlice slice = region_slice(k, theta);
      const double s = -0.9 + 1.8 * (is + 0.5) / n_s;
      const double r = rbar(k, slice, s);
      const TangentPoint tp = trapped_sample(k, r, theta, (is % 2) ? +1 : -1);
      const AxisTangentPoint atp = to_axis_chart(k, tp);
      const RankReport rr = jacobian_rank(h_map_over_axis_vars(k), pack_vars(atp));
      sigmas[idx] = rr.finite ? rr.singular_values.minCoeff() : 0.0;
    });
    rep.h_samples = sigmas.size();
    for (double s : sigmas) rep.h_sigma_min = std::min(rep.h_sigma_min, s);
    if (rep.h_sigma_min <= sigma_threshold)
      rep.failures.push_back("axis-cap rank margin too small");
  }

  rep.heart_residual_max = heart_identity_residual(k);
  if (rep.heart_residual_max > 1e-10)
    rep.failures.push_back("pivot identity residual too large");
  return rep;
}

// ---------------------------------------------------------------------------
// Topology report: winding indices, concavity, chart membership.

struct TopologyReport {
  int gamma1_0 = 0, gamma1_1 = 0, gamma2_0 = 0, gamma2_1 = 0;
  bool indices_stable = false;  // across latitudes and sample densities
  double concavity_margin_at_1e3 = 0.0;
  double epsilon_concavity = 0.0;
  double h_membership_residual_max = 0.0;
  double rbar_roundtrip_max = 0.0;
  std::vector<std::string> failures;
};

inline double chart_membership_residual(const KerrParams& k, int grid,
                                        double* rbar_roundtrip_max = nullptr) {
  double worst = 0.0;
  double worst_rt = 0.0;
  for (int it = 0; it < grid; ++it) {
    const double theta = M_PI * (0.05 + 0.90 * it / (grid - 1.0));
    const RegionSlice slice = region_slice(k, theta);
    for (int ip = 0; ip < grid; ++ip) {
      const double phi = -M_PI + 2.0 * M_PI * ip / grid;
      for (int is = 0; is < grid; ++is) {
        const double s = -1.0 + 2.0 * is / (grid - 1.0);
        TorusCoord tc{theta, phi, s, (ip + is) % 2 ? +1 : -1};
        const P0Point pt = chart_H(k, slice, tc);
        TangentPoint tp;
        tp.x = BlPoint{0.0, pt.r, pt.theta, pt.phi};
        tp.u = raise(k, tp.x, Covec4{pt.p, Chart::BoyerLindquist});
        const auto fv = f_map(k, tp);
        worst = std::max({worst, std::abs(fv[0]), std::abs(fv[1]), std::abs(fv[2])});
        const double s_back = rbar_inverse(k, slice, pt.r);
        worst_rt = std::max(worst_rt, std::abs(s_back - s));
      }
    }
  }
  if (rbar_roundtrip_max) *rbar_roundtrip_max = worst_rt;
  return worst;
}

inline TopologyReport topology_report(const KerrParams& k, double theta0 = 0.94 * M_PI,
                                      int base_samples = 256, int membership_grid = 20) {
  TopologyReport rep;
  const FactsReport facts = verify_facts(k, theta0, base_samples);
  rep.gamma1_0 = facts.gamma1_0;
  rep.gamma1_1 = facts.gamma1_1;
  rep.gamma2_0 = facts.gamma2_0;
  rep.gamma2_1 = facts.gamma2_1;
  if (!facts.pass) rep.failures.push_back("winding indices differ from (+1,-1,+1,-1)");

  rep.indices_stable = true;
  for (const double th0 : {0.93 * M_PI, 0.95 * M_PI}) {
    const FactsReport f2 = verify_facts(k, th0, base_samples);
    if (f2.gamma1_0 != facts.gamma1_0 || f2.gamma1_1 != facts.gamma1_1 ||
        f2.gamma2_0 != facts.gamma2_0 || f2.gamma2_1 != facts.gamma2_1)
      rep.indices_stable = false;
  }
  for (const int n : {2 * base_samples, 4 * base_samples}) {
    const FactsReport f2 = verify_facts(k, theta0, n);
    if (f2.gamma1_0 != facts.gamma1_0 || f2.gamma1_1 != facts.gamma1_1 ||
        f2.gamma2_0 != facts.gamma2_0 || f2.gamma2_1 != facts.gamma2_1)
      rep.indices_stable = false;
  }
  if (!rep.indices_stable) rep.failures.push_back("winding indices unstable");

  const double theta_small = M_PI - std::asin(std::sqrt(1e-3));
  rep.concavity_margin_at_1e3 = concavity_margin(k, theta_small);
  if (!(rep.concavity_margin_at_1e3 < 0.0))
    rep.failures.push_back("fiber profile not concave at sin^2 = 1e-3");
  rep.epsilon_concavity = concavity_epsilon(k);
  if (!(rep.epsilon_concavity > 0.0)) rep.failures.push_back("no concavity cap found");

  rep.h_membership_residual_max =
      chart_membership_residual(k, membership_grid, &rep.rbar_roundtrip_max);
  if (rep.h_membership_residual_max > 1e-9)
    rep.failures.push_back("chart membership residual above 1e-9");
  if (rep.rbar_roundtrip_max > 1e-10)
    rep.failures.push_back("rbar round trip above 1e-10");
  return rep;
}

// ---------------------------------------------------------------------------
// Photon-sphere (a -> 0) limit checks.

struct SchwarzschildLimitReport {
  double rhat1_err = 0.0, rhat2_err = 0.0, rm_err = 0.0, qtrap_err = 0.0;
  double defect_at_3M = 0.0;
  double defect_at_2p5M = 0.0, defect_at_4M = 0.0;
  double defect_kerr_sample = 0.0;
  bool pass = false;
};

inline SchwarzschildLimitReport schwarzschild_limit_report(double small_spin = 1e-4) {
  SchwarzschildLimitReport rep;
  const KerrParams ks(1.0, small_spin);
  const SphericalOrbitRange range = r_hat_bounds(ks);
  rep.rhat1_err = std::abs(range.inner - 3.0);
  rep.rhat2_err = std::abs(range.outer - 3.0);
  rep.rm_err = std::abs(r_zero_angular_momentum(ks) - 3.0);
  rep.qtrap_err = std::abs(q_trap(ks, 3.0) - 27.0);

  const KerrParams k0(1.0, 0.0);
  rep.defect_at_3M = umbilicity_defect(k0, 3.0, M_PI / 3.0);
  rep.defect_at_2p5M = umbilicity_defect(k0, 2.5, M_PI / 3.0);
  rep.defect_at_4M = umbilicity_defect(k0, 4.0, M_PI / 3.0);
  const KerrParams k5(1.0, 0.5);
  rep.defect_kerr_sample = umbilicity_defect(k5, 2.8, M_PI / 3.0);

  rep.pass = rep.rhat1_err <= 1e-3 && rep.rhat2_err <= 1e-3 && rep.rm_err <= 1e-3 &&
             rep.qtrap_err <= 1e-8 && rep.defect_at_3M <= 1e-8 && rep.defect_at_2p5M > 1e-3 &&
             rep.defect_at_4M > 1e-3 && rep.defect_kerr_sample > 1e-6;
  return rep;
}

}  // namespace kpr
