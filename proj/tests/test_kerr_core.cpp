#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kpr/geodesic.hpp"
#include "kpr/kerr.hpp"
#include "kpr/rng.hpp"

using namespace kpr;

namespace {

Vec4 random_bl_vector(SplitMix64& rng) {
  Vec4 v;
  v.chart = Chart::BoyerLindquist;
  for (int i = 0; i < 4; ++i) v.u[i] = rng.uniform(-2.0, 2.0);
  return v;
}

BlPoint random_doc_point(SplitMix64& rng, const KerrParams& k) {
  BlPoint x;
  x.t = rng.uniform(-5.0, 5.0);
  x.r = rng.uniform(k.horizon_radius() + 0.3, 15.0);
  x.theta = rng.uniform(0.2, M_PI - 0.2);
  x.phi = rng.uniform(-M_PI, M_PI);
  return x;
}

// Null vector with E > 0 built by solving the quadratic in u^t.
Vec4 random_null_vector(SplitMix64& rng, const KerrParams& k, const BlPoint& x) {
  const Mat4 g = metric(k, x);
  for (;;) {
    const double u1 = rng.uniform(-1.0, 1.0);
    const double u2 = rng.uniform(-1.0, 1.0);
    const double u3 = rng.uniform(-1.0, 1.0);
    const double qa = g[0][0];
    const double qb = 2.0 * g[0][3] * u3;
    const double qc = g[1][1] * u1 * u1 + g[2][2] * u2 * u2 + g[3][3] * u3 * u3;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    for (const double u0 : {(-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)}) {
      if (-(g[0][0] * u0 + g[0][3] * u3) > 0.0) {
        Vec4 v;
        v.chart = Chart::BoyerLindquist;
        v.u = {u0, u1, u2, u3};
        return v;
      }
    }
  }
}

}  // namespace

TEST_CASE("scalar bundle values") {
  // Schwarzschild at the equator.
  {
    const KerrParams k(1.0, 0.0);
    const ScalarBundle b = scalars(k, 3.0, M_PI / 2.0);
    CHECK(b.Delta == Catch::Approx(3.0).margin(1e-14));
    CHECK(b.rho2 == Catch::Approx(9.0).margin(1e-14));
    CHECK(b.Acal == Catch::Approx(81.0).margin(1e-12));
  }
  // Spinning, on the axis (high-precision reference values).
  {
    const KerrParams k(1.0, 0.5);
    const ScalarBundle b = scalars(k, 2.0, 0.0);
    CHECK(b.C == Catch::Approx(1.0).margin(1e-15));
    CHECK(b.rho2 == Catch::Approx(4.25).margin(1e-14));
    CHECK(b.Delta == Catch::Approx(0.25).margin(1e-14));
  }
  // Pythagorean identity is exact.
  SplitMix64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const KerrParams k(1.0, rng.uniform(0.0, 0.99));
    const ScalarBundle b = scalars(k, rng.uniform(2.0, 10.0), rng.uniform(0.0, M_PI));
    CHECK(b.S * b.S + b.C * b.C == Catch::Approx(1.0).margin(1e-15));
  }
}

TEST_CASE("metric components") {
  // Schwarzschild photon-sphere radius, equator.
  {
    const KerrParams k(1.0, 0.0);
    const Mat4 g = metric(k, BlPoint{0.0, 3.0, M_PI / 2.0, 0.0});
    CHECK(g[0][0] == Catch::Approx(-1.0 / 3.0).margin(1e-15));
    CHECK(g[1][1] == Catch::Approx(3.0).margin(1e-14));
    CHECK(g[2][2] == Catch::Approx(9.0).margin(1e-14));
    CHECK(g[3][3] == Catch::Approx(9.0).margin(1e-14));
    CHECK(g[0][3] == Catch::Approx(0.0).margin(1e-15));
  }
  // Spinning case against an independent high-precision evaluation.
  {
    const KerrParams k(1.0, 0.5);
    const Mat4 g = metric(k, BlPoint{0.0, 3.0, M_PI / 3.0, 0.0});
    CHECK(g[0][0] == Catch::Approx(-0.33793103448275862069).epsilon(1e-14));
    CHECK(g[1][1] == Catch::Approx(2.7884615384615384615).epsilon(1e-14));
    CHECK(g[2][2] == Catch::Approx(9.0625).epsilon(1e-14));
    CHECK(g[0][3] == Catch::Approx(-0.24827586206896551724).epsilon(1e-14));
    CHECK(g[3][3] == Catch::Approx(7.030603448275862069).epsilon(1e-14));
  }
  // Lorentzian signature: det(g) < 0 across random DOC points.
  SplitMix64 rng(2);
  for (int i = 0; i < 50; ++i) {
    const KerrParams k(1.0, rng.uniform(0.0, 0.99));
    const BlPoint x = random_doc_point(rng, k);
    const Mat4 g = metric(k, x);
    const double det_tp = g[0][0] * g[3][3] - g[0][3] * g[0][3];
    CHECK(det_tp * g[1][1] * g[2][2] < 0.0);
  }
  CHECK_THROWS_AS(metric(KerrParams(1.0, 0.5), BlPoint{0.0, 3.0, 0.0, 0.0}), std::domain_error);
}

TEST_CASE("inverse metric and index round trips") {
  SplitMix64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const KerrParams k(1.0, rng.uniform(0.0, 0.99));
    const BlPoint x = random_doc_point(rng, k);
    const Mat4 g = metric(k, x);
    const Mat4 gi = inverse_metric(k, x);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int m = 0; m < 4; ++m) s += g[r][m] * gi[m][c];
        CHECK(s == Catch::Approx(r == c ? 1.0 : 0.0).margin(1e-12));
      }
    const Vec4 v = random_bl_vector(rng);
    const Vec4 back = raise(k, x, lower(k, x, v));
    for (int c = 0; c < 4; ++c) CHECK(back.u[c] == Catch::Approx(v.u[c]).margin(1e-12));
  }
  // Diagonal lowering in Schwarzschild.
  const KerrParams k(1.0, 0.0);
  const Covec4 p = lower(k, BlPoint{0.0, 3.0, M_PI / 2.0, 0.0},
                         Vec4{{1.0, 0.0, 0.0, 0.0}, Chart::BoyerLindquist});
  CHECK(p.p[0] == Catch::Approx(-1.0 / 3.0).margin(1e-15));
  CHECK(p.p[1] == 0.0);
}

TEST_CASE("horizon radius") {
  CHECK(KerrParams(1.0, 0.0).horizon_radius() == Catch::Approx(2.0).margin(1e-15));
  CHECK(KerrParams(1.0, 0.5).horizon_radius() ==
        Catch::Approx(1.8660254037844386468).epsilon(1e-15));
  CHECK(KerrParams(1.0, 0.9999999).horizon_radius() == Catch::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(KerrParams(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KerrParams(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("motion constants") {
  const KerrParams k(1.0, 0.7);
  SplitMix64 rng(4);

  // Equatorial photon with u^theta = 0 has vanishing Carter constant.
  {
    BlPoint x{0.0, 5.0, M_PI / 2.0, 0.3};
    for (int i = 0; i < 20; ++i) {
      Vec4 v = random_null_vector(rng, k, x);
      v.u[2] = 0.0;
      // Re-null it: adjust u^t for the new vector.
      const Mat4 g = metric(k, x);
      const double qa = g[0][0];
      const double qb = 2.0 * g[0][3] * v.u[3];
      const double qc = g[1][1] * v.u[1] * v.u[1] + g[3][3] * v.u[3] * v.u[3];
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc <= 0.0) continue;
      const double u0 = (-qb + std::sqrt(disc)) / (2.0 * qa);
      v.u[0] = u0;
      const MotionConstants mc = motion_constants(k, x, v);
      CHECK(std::abs(mc.q) < 1e-12);
      CHECK(std::abs(mc.Qc) < 1e-10);
    }
  }

  // Carter constant agrees with the polar form on random null vectors.
  for (int i = 0; i < 200; ++i) {
    const BlPoint x = random_doc_point(rng, k);
    const Vec4 v = random_null_vector(rng, k, x);
    const MotionConstants mc = motion_constants(k, x, v);
    CHECK(std::abs(mc.q) < 1e-11);
    const ScalarBundle b = scalars(k, x.r, x.theta);
    const double p_theta = b.rho2 * v.u[2];
    const double polar_form =
        p_theta * p_theta +
        b.C * b.C * (mc.L * mc.L / (b.S * b.S) - k.spin * k.spin * mc.E * mc.E);
    CHECK(mc.Qc == Catch::Approx(polar_form).margin(1e-9 * std::max(1.0, std::abs(polar_form))));
  }
}

TEST_CASE("conserved quotients") {
  MotionConstants mc;
  mc.E = 2.0;
  mc.L = -4.0;
  mc.Qc = 12.0;
  const ConservedQuotients cq = conserved_quotients(mc);
  CHECK(cq.Phi == -2.0);
  CHECK(cq.Q == 3.0);
  mc.E = 1.0;
  mc.L = 0.0;
  mc.Qc = 0.0;
  const ConservedQuotients cq2 = conserved_quotients(mc);
  CHECK(cq2.Phi == 0.0);
  CHECK(cq2.Q == 0.0);
  mc.E = 0.0;
  CHECK_THROWS_AS(conserved_quotients(mc), std::domain_error);
}

TEST_CASE("axis chart transforms") {
  const KerrParams k(1.0, 0.6);
  SplitMix64 rng(5);

  // Round trips on random hemisphere points.
  for (int i = 0; i < 200; ++i) {
    BlPoint x = random_doc_point(rng, k);
    if (std::abs(std::cos(x.theta)) < 0.05) continue;  // stay off the equator
    const AxisPoint ax = to_axis_chart(k, x);
    const BlPoint back = from_axis_chart(k, ax);
    CHECK(back.r == Catch::Approx(x.r).epsilon(1e-12));
    CHECK(back.theta == Catch::Approx(x.theta).margin(1e-10));
    CHECK(back.phi == Catch::Approx(x.phi).margin(1e-10));

    const Vec4 v = random_bl_vector(rng);
    const Vec4 there = axis_transform_vec(k, x, v);
    const Vec4 home = axis_transform_vec_back(k, ax, there);
    for (int c = 0; c < 4; ++c) CHECK(home.u[c] == Catch::Approx(v.u[c]).margin(1e-10));

    Covec4 p;
    p.chart = Chart::BoyerLindquist;
    for (int c = 0; c < 4; ++c) p.p[c] = rng.uniform(-2.0, 2.0);
    const Covec4 pt = axis_transform_covec(k, x, p);
    const Covec4 ph = axis_transform_covec_back(k, ax, pt);
    for (int c = 0; c < 4; ++c) CHECK(ph.p[c] == Catch::Approx(p.p[c]).margin(1e-10));

    // Pairing invariance: <p, v> is chart independent.
    double pair_bl = 0.0, pair_ax = 0.0;
    for (int c = 0; c < 4; ++c) {
      pair_bl += p.p[c] * v.u[c];
      pair_ax += pt.p[c] * there.u[c];
    }
    CHECK(pair_ax == Catch::Approx(pair_bl).margin(1e-10));
  }

  // Axis-chart metric agrees with the pullback of the BL metric off-axis.
  for (int i = 0; i < 100; ++i) {
    BlPoint x = random_doc_point(rng, k);
    if (std::abs(std::cos(x.theta)) < 0.05) continue;
    const AxisPoint ax = to_axis_chart(k, x);
    const Mat4 ga = metric(k, ax);
    const Mat4 gb = metric(k, x);
    // Pull back through the covariant transform: g~(u~, v~) = g(u, v).
    const Vec4 v = random_bl_vector(rng);
    const Vec4 w = random_bl_vector(rng);
    const Vec4 va = axis_transform_vec(k, x, v);
    const Vec4 wa = axis_transform_vec(k, x, w);
    double qa = 0.0, qb = 0.0;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        qa += ga[r][c] * va.u[r] * wa.u[c];
        qb += gb[r][c] * v.u[r] * w.u[c];
      }
    CHECK(qa == Catch::Approx(qb).margin(1e-9 * std::max(1.0, std::abs(qb))));
  }

  // On-axis metric is the diagonal continuous extension.
  for (const double r : {2.5, 3.0, 6.0}) {
    const Mat4 g = metric(k, AxisPoint{0.0, r, 0.0, 0.0, +1});
    const double Delta = r * r - 2.0 * r + k.spin * k.spin;
    const double r2a2 = r * r + k.spin * k.spin;
    CHECK(g[0][0] == Catch::Approx(-Delta / r2a2).margin(1e-10));
    CHECK(g[1][1] == Catch::Approx(r2a2 / Delta).margin(1e-10));
    CHECK(g[2][2] == Catch::Approx(r2a2 / (r * r)).margin(1e-10));
    CHECK(g[3][3] == Catch::Approx(r2a2 / (r * r)).margin(1e-10));
    CHECK(std::abs(g[0][2]) < 1e-14);
    CHECK(std::abs(g[2][3]) < 1e-14);
  }

  // Near-axis scaling: with axis-chart components fixed, u^theta stays
  // bounded and S u^phi stays bounded as S -> 0.
  {
    const Vec4 vt{{0.3, -0.2, 0.8, 0.5}, Chart::AxisXY};
    double prev_u2 = 0.0, prev_su3 = 0.0;
    int step = 0;
    for (const double S : {1e-3, 1e-4}) {
      const double theta = std::asin(S);
      const BlPoint x{0.0, 3.0, theta, 0.7};
      const AxisPoint ax = to_axis_chart(k, x);
      const Vec4 back = axis_transform_vec_back(k, ax, vt);
      const double u2 = back.u[2];
      const double su3 = S * back.u[3];
      if (step++) {
        CHECK(std::abs(u2) < 4.0 * std::abs(prev_u2) + 1.0);
        CHECK(std::abs(su3) == Catch::Approx(std::abs(prev_su3)).epsilon(0.05));
      }
      prev_u2 = u2;
      prev_su3 = su3;
    }
  }

  CHECK_THROWS_AS(to_axis_chart(k, BlPoint{0.0, 3.0, M_PI / 2.0, 0.0}), std::domain_error);
}

TEST_CASE("umbilicity defect") {
  const KerrParams k0(1.0, 0.0);
  // The photon sphere is the unique umbilical cylinder in Schwarzschild.
  CHECK(umbilicity_defect(k0, 3.0, 1.1) < 1e-8);
  CHECK(umbilicity_defect(k0, 4.0, 1.1) > 1e-3);
  CHECK(umbilicity_defect(k0, 2.5, 0.4) > 1e-3);
  double min_off = 1e300;
  for (int i = 0; i <= 80; ++i) {
    const double r = 2.05 + (10.0 - 2.05) * i / 80.0;
    const double d = umbilicity_defect(k0, r, 1.0);
    if (std::abs(r - 3.0) > 0.05) min_off = std::min(min_off, d);
  }
  CHECK(min_off > 1e-4);

  // No umbilical cylinder once the spin is on.
  const KerrParams k5(1.0, 0.5);
  CHECK(umbilicity_defect(k5, 2.8, M_PI / 3.0) > 1e-4);
  double min_kerr = 1e300;
  for (int i = 0; i <= 60; ++i) {
    const double r = k5.horizon_radius() + 0.1 + 8.0 * i / 60.0;
    min_kerr = std::min(min_kerr, umbilicity_defect(k5, r, M_PI / 3.0));
  }
  CHECK(min_kerr > 1e-5);
}

TEST_CASE("constants conserved along integrated geodesics") {
  const KerrParams k(1.0, 0.5);
  SplitMix64 rng(6);
  for (int i = 0; i < 5; ++i) {
    const double phi = rng.uniform(-6.0, 6.0);
    const double q = rng.uniform(1.0, 30.0);
    PhaseState st;
    try {
      st = phase_state_from_quotients(k, {phi, q}, rng.uniform(4.0, 12.0), M_PI / 2.0,
                                      rng.next_double() < 0.5 ? -1 : 1, +1);
    } catch (const std::domain_error&) {
      continue;
    }
    IntegratorOptions opt;
    opt.tol = 1e-12;
    opt.affine_span = 200.0;
    const IntegrationResult res = integrate(k, st, opt);
    CHECK(res.drift.E <= 1e-9);
    CHECK(res.drift.L <= 1e-9);
    CHECK(res.drift.Qc <= 1e-9);
    CHECK(res.drift.q_max <= 1e-9);
  }
}
