// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evprom/behavior.hpp"

using namespace evprom;

namespace {

constexpr double kLambda = 1.2e5;
constexpr double kMu = 8.0e4;
const double kSqrt32 = std::sqrt(1.5);

ElasParams isotropic_elastic() {
  ElasParams p;
  p.y1111 = TemperatureTable(kLambda + 2.0 * kMu);
  p.y1122 = TemperatureTable(kLambda);
  p.y1212 = TemperatureTable(kMu);
  p.alpha_th = TemperatureTable(0.0);
  return p;
}

EvpParams base_evp(double m, double d) {
  EvpParams p;
  p.elastic = isotropic_elastic();
  p.r0 = TemperatureTable(200.0);
  p.c = TemperatureTable(1.0e4);
  p.d = TemperatureTable(d);
  p.k = TemperatureTable(500.0);
  p.m = TemperatureTable(m);
  return p;
}

Mat3 random_symmetric(std::mt19937& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat3 a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = dist(rng);
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST_CASE("temperature table interpolates and clamps") {
  const TemperatureTable tab({20.0, 100.0}, {100.0, 60.0});
  REQUIRE_THAT(tab(60.0), Catch::Matchers::WithinAbs(80.0, 1e-13));
  REQUIRE(tab(0.0) == 100.0);
  REQUIRE(tab(500.0) == 60.0);
  REQUIRE(TemperatureTable(7.5)(321.0) == 7.5);
  REQUIRE_THROWS_AS(TemperatureTable({100.0, 20.0}, {1.0, 2.0}), ConfigError);
  REQUIRE_THROWS_AS(TemperatureTable({20.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("isotropic stiffness acts as lambda tr(e) I + 2 mu e") {
  const ElasParams p = isotropic_elastic();
  const Mat6 a = elastic_stiffness(p, 20.0);
  std::mt19937 rng(3);
  const Mat3 e = random_symmetric(rng, 0.01);
  const Mat3 s = apply_stiffness(a, e);
  const Mat3 expected = kLambda * e.trace() * Mat3::Identity() + 2.0 * kMu * e;
  REQUIRE((s - expected).norm() < 1e-9 * expected.norm());
}

TEST_CASE("stiffness moduli follow the temperature tables") {
  ElasParams p = isotropic_elastic();
  p.y1111 = TemperatureTable({20.0, 700.0}, {2.7e5, 1.8e5});
  REQUIRE_THAT(elastic_stiffness(p, 360.0)(0, 0),
               Catch::Matchers::WithinAbs(2.25e5, 1e-7));
}

TEST_CASE("thermal strain is spherical and vanishes at reference") {
  ElasParams p = isotropic_elastic();
  p.alpha_th = TemperatureTable({20.0, 700.0}, {1.0e-5, 1.6e-5});
  REQUIRE(thermal_strain(p, 20.0).norm() == 0.0);
  const Mat3 e = thermal_strain(p, 360.0);
  const double a_mid = 1.0e-5 + (1.6e-5 - 1.0e-5) * 0.5;
  REQUIRE((e - a_mid * 340.0 * Mat3::Identity()).norm() < 1e-15);
  // Free thermal expansion is stress free.
  const LawResult r = integrate_elas(p, e, 360.0);
  REQUIRE(r.sigma.norm() < 1e-9);
}

TEST_CASE("elastic regime returns the trial stress and keeps the state") {
  const EvpParams p = base_evp(5.0, 50.0);
  std::mt19937 rng(5);
  const Mat3 eps = random_symmetric(rng, 2e-4);  // far below yield
  const LawResult r = integrate_evp(p, MaterialState{}, eps, 20.0, 0.5);
  const LawResult el = integrate_elas(p.elastic, eps, 20.0);
  REQUIRE((r.sigma - el.sigma).norm() == 0.0);
  REQUIRE((r.tangent - el.tangent).norm() == 0.0);
  REQUIRE(r.state.eps_p.norm() == 0.0);
  REQUIRE(r.state.p == 0.0);
}

TEST_CASE("closed-form plastic multiplier for linear viscosity") {
  // m = 1, D = 0, virgin state, isotropic elasticity: the incremental
  // problem collapses to dp = dt (f_tr - dp (3 mu + C)) / K, hence
  // dp = dt f_tr / (K + dt (3 mu + C)).
  const EvpParams p = base_evp(1.0, 0.0);
  const double gamma = 0.003, dt = 0.1;
  Mat3 eps = Mat3::Zero();
  eps(0, 1) = eps(1, 0) = gamma;
  const Mat3 sigma_tr = 2.0 * kMu * eps;
  const double f_tr = kSqrt32 * sigma_tr.norm() - 200.0;
  REQUIRE(f_tr > 0.0);
  const double dp_exact = dt * f_tr / (500.0 + dt * (3.0 * kMu + 1.0e4));
  const Mat3 n = sigma_tr / sigma_tr.norm();

  const LawResult r = integrate_evp(p, MaterialState{}, eps, 20.0, dt);
  REQUIRE_THAT(r.state.p, Catch::Matchers::WithinRel(dp_exact, 1e-12));
  REQUIRE((r.state.eps_p - dp_exact * kSqrt32 * n).norm() < 1e-12 * dp_exact);
  REQUIRE((r.state.alpha - dp_exact * kSqrt32 * n).norm() < 1e-12 * dp_exact);
  const Mat3 sigma_exact = sigma_tr - 2.0 * kMu * dp_exact * kSqrt32 * n;
  REQUIRE((r.sigma - sigma_exact).norm() < 1e-9);
}

TEST_CASE("return mapping satisfies its own discrete equations") {
  const EvpParams p = base_evp(5.0, 50.0);
  std::mt19937 rng(17);
  MaterialState s;
  double dt = 0.2;
  for (int step = 0; step < 5; ++step) {
    const Mat3 eps = random_symmetric(rng, 0.004);
    const LawResult r = integrate_evp(p, s, eps, 20.0, dt);
    REQUIRE(r.state.p >= s.p);
    const double dp = r.state.p - s.p;
    if (dp > 0.0) {
      const Mat3 xi = deviator(r.sigma) - (2.0 / 3.0) * 1.0e4 * r.state.alpha;
      const double f = kSqrt32 * xi.norm() - 200.0;
      REQUIRE_THAT(dp, Catch::Matchers::WithinRel(
                           dt * std::pow(std::max(f, 0.0) / 500.0, 5.0), 1e-9));
      const Mat3 depsp = r.state.eps_p - s.eps_p;
      REQUIRE(std::abs(depsp.trace()) < 1e-14);
      const Mat3 n = depsp / (dp * kSqrt32);
      REQUIRE_THAT(n.norm(), Catch::Matchers::WithinAbs(1.0, 1e-10));
      REQUIRE((n - xi / xi.norm()).norm() < 1e-9);
      const Mat3 lhs = r.state.alpha * (1.0 + 50.0 * dp);
      REQUIRE((lhs - (s.alpha + dp * kSqrt32 * n)).norm() <
              1e-10 * (1.0 + lhs.norm()));
    }
    s = r.state;
  }
}

TEST_CASE("cubic anisotropy still satisfies the implicit equations") {
  EvpParams p = base_evp(3.0, 40.0);
  p.elastic.y1212 = TemperatureTable(1.1e5);  // breaks isotropy
  std::mt19937 rng(41);
  MaterialState s;
  const double dt = 0.25;
  for (int step = 0; step < 4; ++step) {
    const Mat3 eps = random_symmetric(rng, 0.004);
    const LawResult r = integrate_evp(p, s, eps, 20.0, dt);
    const double dp = r.state.p - s.p;
    if (dp > 0.0) {
      const Mat3 xi = deviator(r.sigma) - (2.0 / 3.0) * 1.0e4 * r.state.alpha;
      const double f = kSqrt32 * xi.norm() - 200.0;
      REQUIRE_THAT(dp, Catch::Matchers::WithinRel(
                           dt * std::pow(std::max(f, 0.0) / 500.0, 3.0), 1e-9));
      const Mat3 n = (r.state.eps_p - s.eps_p) / (dp * kSqrt32);
      REQUIRE((n - xi / xi.norm()).norm() < 1e-9);
    }
    s = r.state;
  }
  REQUIRE(s.p > 0.0);
}

TEST_CASE("consistent tangent matches the analytic derivative") {
  // Differentiable closed-form case: m = 1, D = 0, virgin state.
  const EvpParams p = base_evp(1.0, 0.0);
  const double dt = 0.05, c_kin = 1.0e4, k_visc = 500.0;
  std::mt19937 rng(23);
  Mat3 eps = random_symmetric(rng, 0.002);
  eps(0, 1) += 0.004;
  eps(1, 0) += 0.004;  // ensure yielding
  const Mat6 a = elastic_stiffness(p.elastic, 20.0);
  const Mat3 xi_tr = deviator(apply_stiffness(a, eps));
  const double f_tr = kSqrt32 * xi_tr.norm() - 200.0;
  REQUIRE(f_tr > 0.0);
  const double c1 = dt / (k_visc + dt * (3.0 * kMu + c_kin));
  const double dp = c1 * f_tr;
  const Mat3 n = xi_tr / xi_tr.norm();
  Mat6 expected;
  for (int j = 0; j < 6; ++j) {
    Vec6 unit = Vec6::Zero();
    unit[j] = 1.0;
    const Mat3 de = strain_from_voigt(unit);
    const double ddp = c1 * kSqrt32 * 2.0 * kMu * ddot(n, deviator(de));
    const Mat3 dn =
        (2.0 * kMu / xi_tr.norm()) * (deviator(de) - ddot(n, deviator(de)) * n);
    const Mat3 ds = apply_stiffness(a, de) -
                    2.0 * kMu * kSqrt32 * (ddp * n + dp * dn);
    expected.col(j) = stress_to_voigt(ds);
  }
  const LawResult r = integrate_evp(p, MaterialState{}, eps, 20.0, dt);
  REQUIRE((r.tangent - expected).norm() < 1e-5 * expected.norm());
}

TEST_CASE("saturated kinematic hardening follows the exact linear solution") {
  // With alpha at its saturation value sqrt(3/2) n / D and a strain path
  // moving along n at rate sqrt(3/2) pdot, the overstress stays constant
  // and the incremental update is exact for any step count.
  const EvpParams p = base_evp(5.0, 50.0);
  Mat3 n = Mat3::Zero();
  n(0, 1) = n(1, 0) = 1.0 / std::sqrt(2.0);
  MaterialState s0;
  s0.alpha = (kSqrt32 / 50.0) * n;
  const double f_bar = 150.0;
  const double pdot = std::pow(f_bar / 500.0, 5.0);
  // Pre-strain setting sqrt(3/2)||xi|| = R0 + f_bar with xi parallel to n.
  const double xi_norm = (200.0 + f_bar) / kSqrt32;
  const double gamma0 =
      (xi_norm + (2.0 / 3.0) * 1.0e4 * s0.alpha.norm()) / (2.0 * kMu);
  const auto eps_of_t = [&](double t) {
    return Mat3((gamma0 + kSqrt32 * pdot * t) * n);
  };
  MaterialState s = s0;
  const int steps = 10;
  const double t_end = 2.0, dt = t_end / steps;
  Mat3 sigma;
  for (int i = 0; i < steps; ++i) {
    const LawResult r = integrate_evp(p, s, eps_of_t((i + 1) * dt), 20.0, dt);
    s = r.state;
    sigma = r.sigma;
  }
  REQUIRE_THAT(s.p, Catch::Matchers::WithinRel(pdot * t_end, 1e-10));
  REQUIRE((s.eps_p - pdot * t_end * kSqrt32 * n).norm() < 1e-10);
  REQUIRE((s.alpha - s0.alpha).norm() < 1e-10);
  const OracleResult o = evp_oracle(
      p, s0, eps_of_t, [](double) { return 20.0; }, 0.0, t_end, 1000);
  REQUIRE_THAT(s.p, Catch::Matchers::WithinRel(o.state.p, 1e-9));
  REQUIRE((sigma - o.sigma).norm() < 1e-7 * o.sigma.norm());
}

TEST_CASE("incremental update converges to the reference at first order") {
  const EvpParams p = base_evp(2.0, 50.0);
  Mat3 dir = Mat3::Zero();
  dir(0, 1) = dir(1, 0) = 0.8;
  dir(0, 0) = 0.4;
  dir(1, 1) = -0.2;
  const auto eps_of_t = [&](double t) { return Mat3(0.004 * t * dir); };
  const auto temp_of_t = [](double) { return 20.0; };
  const OracleResult ref = evp_oracle(p, MaterialState{}, eps_of_t, temp_of_t,
                                      0.0, 1.0, 4000);
  const OracleResult ref2 = evp_oracle(p, MaterialState{}, eps_of_t, temp_of_t,
                                       0.0, 1.0, 2000);
  REQUIRE((ref.sigma - ref2.sigma).norm() < 1e-8 * ref.sigma.norm());

  const auto run = [&](int steps) {
    MaterialState s;
    Mat3 sigma;
    const double dt = 1.0 / steps;
    for (int i = 0; i < steps; ++i) {
      const LawResult r = integrate_evp(p, s, eps_of_t((i + 1) * dt), 20.0, dt);
      s = r.state;
      sigma = r.sigma;
    }
    return (sigma - ref.sigma).norm();
  };
  const double e20 = run(20), e40 = run(40);
  REQUIRE(e20 > 0.0);
  const double ratio = e20 / e40;
  REQUIRE(ratio > 1.5);
  REQUIRE(ratio < 2.7);
}

TEST_CASE("parameter validation raises behavior errors") {
  EvpParams p = base_evp(5.0, 50.0);
  p.k = TemperatureTable(0.0);
  REQUIRE_THROWS_AS(integrate_evp(p, MaterialState{}, Mat3::Zero(), 20.0, 0.1),
                    BehaviorError);
  p = base_evp(0.5, 50.0);
  REQUIRE_THROWS_AS(integrate_evp(p, MaterialState{}, Mat3::Zero(), 20.0, 0.1),
                    BehaviorError);
  p = base_evp(5.0, 50.0);
  REQUIRE_THROWS_AS(integrate_evp(p, MaterialState{}, Mat3::Zero(), 20.0, 0.0),
                    BehaviorError);
}

TEST_CASE("the update is bitwise deterministic") {
  const EvpParams p = base_evp(5.0, 50.0);
  std::mt19937 rng(29);
  const Mat3 eps = random_symmetric(rng, 0.005);
  MaterialState s;
  s.alpha = random_symmetric(rng, 1e-3);
  const LawResult a = integrate_evp(p, s, eps, 150.0, 0.3);
  const LawResult b = integrate_evp(p, s, eps, 150.0, 0.3);
  REQUIRE(a.sigma == b.sigma);
  REQUIRE(a.tangent == b.tangent);
  REQUIRE(a.state.eps_p == b.state.eps_p);
  REQUIRE(a.state.p == b.state.p);
}
