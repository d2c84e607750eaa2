// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "evprom/types.hpp"

namespace evprom {

// Piecewise-linear coefficient of temperature, clamped outside the table.
struct TemperatureTable {
  std::vector<double> temperature;
  std::vector<double> value;

  TemperatureTable() = default;
  explicit TemperatureTable(double constant)
      : temperature{0.0}, value{constant} {}
  TemperatureTable(std::vector<double> t, std::vector<double> v)
      : temperature(std::move(t)), value(std::move(v)) {
    validate();
  }

  void validate() const {
    if (temperature.empty() || temperature.size() != value.size())
      throw ConfigError("temperature table needs matching, nonempty columns");
    for (size_t i = 1; i < temperature.size(); ++i)
      if (!(temperature[i] > temperature[i - 1]))
        throw ConfigError("temperature table must increase strictly");
  }

  double operator()(double t) const {
    if (temperature.empty()) throw ConfigError("empty temperature table");
    if (t <= temperature.front()) return value.front();
    if (t >= temperature.back()) return value.back();
    size_t i = 1;
    while (temperature[i] < t) ++i;
    const double w = (t - temperature[i - 1]) / (temperature[i] - temperature[i - 1]);
    return (1.0 - w) * value[i - 1] + w * value[i];
  }
};

// Cubic-symmetry elasticity: three independent moduli, all temperature
// dependent; isotropy is the special case y1212 == (y1111 - y1122) / 2.
struct ElasParams {
  TemperatureTable y1111, y1122, y1212, alpha_th;
  static constexpr double reference_temperature = 20.0;
};

struct EvpParams {
  ElasParams elastic;
  TemperatureTable r0, c, d, k, m;
};

struct MaterialState {
  Mat3 eps_p = Mat3::Zero();  // plastic strain
  Mat3 alpha = Mat3::Zero();  // kinematic-hardening internal variable
  double p = 0.0;             // accumulated plastic strain
};

struct LawResult {
  Mat3 sigma = Mat3::Zero();
  Mat6 tangent = Mat6::Zero();
  MaterialState state;
};

inline Mat6 elastic_stiffness(const ElasParams& p, double t) {
  const double a = p.y1111(t), b = p.y1122(t), g = p.y1212(t);
  Mat6 m = Mat6::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = i == j ? a : b;
  for (int i = 3; i < 6; ++i) m(i, i) = g;
  return m;
}

inline Mat3 thermal_strain(const ElasParams& p, double t) {
  return p.alpha_th(t) * (t - ElasParams::reference_temperature) * Mat3::Identity();
}

inline Mat3 apply_stiffness(const Mat6& a, const Mat3& eps) {
  return stress_from_voigt(a * strain_to_voigt(eps));
}

inline LawResult integrate_elas(const ElasParams& p, const Mat3& eps, double t) {
  LawResult r;
  r.tangent = elastic_stiffness(p, t);
  r.sigma = apply_stiffness(r.tangent, eps - thermal_strain(p, t));
  return r;
}

namespace detail {

inline double pospow(double x, double m) {
  return x > 0.0 ? std::exp(m * std::log(x)) : 0.0;
}

constexpr double kSqrt32 = 1.2247448713915890;  // sqrt(3/2)

struct EvpCoefficients {
  Mat6 a;
  Mat3 eps_mech;  // total minus thermal strain
  double r0, c, d, k, m;
};

inline EvpCoefficients evp_coefficients(const EvpParams& p, const Mat3& eps,
                                        double t) {
  EvpCoefficients co;
  co.a = elastic_stiffness(p.elastic, t);
  co.eps_mech = eps - thermal_strain(p.elastic, t);
  co.r0 = p.r0(t);
  co.c = p.c(t);
  co.d = p.d(t);
  co.k = p.k(t);
  co.m = p.m(t);
  if (!(co.k > 0.0)) throw BehaviorError("viscous resistance K must be positive");
  if (!(co.m >= 1.0)) throw BehaviorError("rate exponent m must be at least one");
  if (!(co.r0 > 0.0)) throw BehaviorError("yield radius R0 must be positive");
  return co;
}

// Scalar form of the backward-Euler system.  With cubic symmetry the
// stiffness maps a deviator e to 2 mu_n diag(e) + 2 mu_s offdiag(e); the
// mean modulus mu_bar is treated implicitly (radial return) and only the
// anisotropic remainder b_of_n is frozen between direction updates, so the
// effective stress obeys
//   xi = eta(dp) - c_n(dp) * n,   n = eta(dp) / ||eta(dp)||,
//   eta(dp) = dev sigma_tr - (2/3) C alpha_n / (1 + D dp)
//             - dp sqrt(3/2) b_of_n,
//   c_n(dp) = dp sqrt(3/2) (2 mu_bar + (2/3) C / (1 + D dp)),
// and the residual dp - dt <f(dp)/K>^m has a bracketable root because
// c_n grows without bound while eta stays controlled.
struct DirectionalUpdate {
  const EvpCoefficients& co;
  const MaterialState& s0;
  Mat3 dev_sigma_tr;
  double mu_bar;
  Mat3 b_of_n;  // frozen anisotropic remainder dev(A:n) - 2 mu_bar n
  double dt;

  Mat3 eta(double dp) const {
    return dev_sigma_tr - (2.0 / 3.0) * co.c / (1.0 + co.d * dp) * s0.alpha -
           dp * kSqrt32 * b_of_n;
  }
  double radial_coefficient(double dp) const {
    return dp * kSqrt32 * (2.0 * mu_bar + (2.0 / 3.0) * co.c / (1.0 + co.d * dp));
  }
  double overstress(double dp) const {
    return kSqrt32 * (eta(dp).norm() - radial_coefficient(dp)) - co.r0;
  }
  double overstress_derivative(double dp) const {
    const Mat3 e = eta(dp);
    const double ne = e.norm();
    const double opd = 1.0 + co.d * dp;
    const Mat3 deta =
        (2.0 / 3.0) * co.c * co.d / (opd * opd) * s0.alpha - kSqrt32 * b_of_n;
    const double dc =
        kSqrt32 * (2.0 * mu_bar + (2.0 / 3.0) * co.c / (opd * opd));
    const double dn = ne > 0.0 ? ddot(e, deta) / ne : 0.0;
    return kSqrt32 * (dn - dc);
  }
  // Residual of dp = dt * <f(dp)/K>^m and its derivative.
  double residual(double dp) const {
    return dp - dt * pospow(overstress(dp) / co.k, co.m);
  }
  double residual_derivative(double dp) const {
    const double f = overstress(dp);
    if (f <= 0.0) return 1.0;
    return 1.0 - dt * co.m * pospow(f / co.k, co.m - 1.0) *
                     (overstress_derivative(dp) / co.k);
  }
};

// Bracket a sign change of the residual.  The residual is negative at zero
// and increases while the overstress relaxes; past the turning point of
// ||xi(dp)|| it can turn negative again, so growth stops there and the gap
// is scanned if the geometric probes jumped over the positive window.
inline std::pair<double, double> bracket_multiplier(const DirectionalUpdate& u,
                                                    double dp_guess) {
  const double f0 = u.overstress(0.0);
  const double df0 = u.overstress_derivative(0.0);
  double hi = df0 < 0.0 ? f0 / -df0 : std::max(dp_guess, 1e-16);
  double lo = 0.0, f_lo = f0;
  for (int it = 0; it < 300; ++it) {
    if (u.residual(hi) >= 0.0) return {lo, hi};
    const double f_hi = u.overstress(hi);
    if (f_hi >= f_lo) {
      for (int s = 1; s < 64; ++s) {
        const double cand = lo + (hi - lo) * s / 64.0;
        if (u.residual(cand) >= 0.0) return {lo, cand};
      }
      throw BehaviorError("overstress cannot relax along the flow direction");
    }
    lo = hi;
    f_lo = f_hi;
    hi *= 2.0;
  }
  throw BehaviorError("plastic multiplier bracket failed");
}

// Safeguarded Newton on the bracket.  The reachable residual at the root
// is one ulp of dp times the residual slope, so both stop tests scale with
// the local steepness.
inline double solve_multiplier(const DirectionalUpdate& u, double dp_init) {
  auto [lo, hi] = bracket_multiplier(u, dp_init);
  double dp = dp_init > lo && dp_init < hi ? dp_init : 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double r = u.residual(dp);
    const double slope = u.residual_derivative(dp);
    if (std::abs(r) <= 1e-14 * (1.0 + dp) * std::max(1.0, std::abs(slope)))
      return dp;
    if (r < 0.0) lo = dp;
    else hi = dp;
    double next = slope != 0.0 ? dp - r / slope : -1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <=
        4.0 * std::numeric_limits<double>::epsilon() * (1.0 + hi))
      return 0.5 * (lo + hi);
    dp = next;
  }
  throw BehaviorError("plastic multiplier solve did not converge, residual " +
                      std::to_string(u.residual(dp)));
}

inline MaterialState evp_step(const EvpCoefficients& co, const MaterialState& s0,
                              double dt, Mat3* sigma_out) {
  const Mat3 sigma_tr = apply_stiffness(co.a, co.eps_mech - s0.eps_p);
  const Mat3 xi_tr = deviator(sigma_tr) - (2.0 / 3.0) * co.c * s0.alpha;
  const double f_tr = kSqrt32 * xi_tr.norm() - co.r0;
  if (f_tr <= 0.0) {
    if (sigma_out) *sigma_out = sigma_tr;
    return s0;
  }
  const double mu_n = 0.5 * (co.a(0, 0) - co.a(0, 1));
  const double mu_s = co.a(3, 3);
  if (!(mu_n > 0.0) || !(mu_s > 0.0))
    throw BehaviorError("elastic moduli give non-positive shear stiffness");
  const double mu_bar = 0.5 * (mu_n + mu_s);
  Mat3 n = xi_tr / xi_tr.norm();
  double dp = dt * pospow(f_tr / co.k, co.m);
  // The anisotropic remainder couples dp and the flow direction, so the
  // scalar solve sits inside a fixed-point loop on the direction.  With
  // isotropic moduli the remainder vanishes and the loop ends after one
  // confirmation pass.
  for (int it = 0; it < 100; ++it) {
    const Mat3 b_of_n = deviator(apply_stiffness(co.a, n)) - 2.0 * mu_bar * n;
    DirectionalUpdate u{co, s0, deviator(sigma_tr), mu_bar, b_of_n, dt};
    dp = solve_multiplier(u, dp);
    const Mat3 e = u.eta(dp);
    const double ne = e.norm();
    if (ne <= 0.0)
      throw BehaviorError("vanishing effective stress in flow update");
    const Mat3 n_new = e / ne;
    const double change = (n_new - n).norm();
    n = n_new;
    if (change <= 1e-13) {
      MaterialState s1;
      s1.eps_p = s0.eps_p + dp * kSqrt32 * n;
      s1.alpha = (s0.alpha + dp * kSqrt32 * n) / (1.0 + co.d * dp);
      s1.p = s0.p + dp;
      if (sigma_out)
        *sigma_out = apply_stiffness(co.a, co.eps_mech - s1.eps_p);
      return s1;
    }
  }
  throw BehaviorError("flow direction iteration did not converge");
}

}  // namespace detail

// Backward-Euler return mapping over one time increment.  The consistent
// tangent is formed by central differences of the full update map.
inline LawResult integrate_evp(const EvpParams& p, const MaterialState& s0,
                               const Mat3& eps, double t, double dt) {
  if (!(dt > 0.0)) throw BehaviorError("time increment must be positive");
  const detail::EvpCoefficients co = detail::evp_coefficients(p, eps, t);
  LawResult r;
  r.state = detail::evp_step(co, s0, dt, &r.sigma);
  if (r.state.p == s0.p) {
    r.tangent = co.a;
    return r;
  }
  const Vec6 ev = strain_to_voigt(eps);
  for (int j = 0; j < 6; ++j) {
    const double h = 1e-7 * (1.0 + std::abs(ev[j]));
    Vec6 ep = ev, em = ev;
    ep[j] += h;
    em[j] -= h;
    Mat3 sp, sm;
    detail::evp_step(detail::evp_coefficients(p, strain_from_voigt(ep), t), s0,
                     dt, &sp);
    detail::evp_step(detail::evp_coefficients(p, strain_from_voigt(em), t), s0,
                     dt, &sm);
    r.tangent.col(j) = (stress_to_voigt(sp) - stress_to_voigt(sm)) / (2.0 * h);
  }
  return r;
}

// Runtime-selected behavior law.
class MaterialLaw {
 public:
  explicit MaterialLaw(ElasParams p) : params_(std::move(p)) {}
  explicit MaterialLaw(EvpParams p) : params_(std::move(p)) {}

  bool has_internal_state() const {
    return std::holds_alternative<EvpParams>(params_);
  }

  LawResult integrate(const MaterialState& s0, const Mat3& eps, double t,
                      double dt) const {
    if (const auto* evp = std::get_if<EvpParams>(&params_))
      return integrate_evp(*evp, s0, eps, t, dt);
    LawResult r = integrate_elas(std::get<ElasParams>(params_), eps, t);
    r.state = s0;
    return r;
  }

  const ElasParams& elastic() const {
    if (const auto* evp = std::get_if<EvpParams>(&params_)) return evp->elastic;
    return std::get<ElasParams>(params_);
  }

 private:
  std::variant<ElasParams, EvpParams> params_;
};

// Reference integrator: classic fourth-order Runge-Kutta on the flow
// equations with many substeps.  Serves as an independent check of the
// incremental update; not used by the solvers.
struct OracleResult {
  MaterialState state;
  Mat3 sigma = Mat3::Zero();
};

template <class EpsFn, class TempFn>
OracleResult evp_oracle(const EvpParams& p, MaterialState s, EpsFn&& eps_of_t,
                        TempFn&& temp_of_t, double t0, double t1, int substeps) {
  struct Rate {
    Mat3 eps_p, alpha;
    double p;
  };
  const auto rhs = [&](double t, const MaterialState& y) -> Rate {
    const double temp = temp_of_t(t);
    const Mat6 a = elastic_stiffness(p.elastic, temp);
    const Mat3 sigma =
        apply_stiffness(a, eps_of_t(t) - thermal_strain(p.elastic, temp) - y.eps_p);
    const Mat3 xi = deviator(sigma) - (2.0 / 3.0) * p.c(temp) * y.alpha;
    const double nx = xi.norm();
    const double f = detail::kSqrt32 * nx - p.r0(temp);
    const double pdot = detail::pospow(f / p.k(temp), p.m(temp));
    Rate r;
    const Mat3 dir = nx > 0.0 ? Mat3(xi / nx) : Mat3(Mat3::Zero());
    r.eps_p = pdot * detail::kSqrt32 * dir;
    r.alpha = r.eps_p - pdot * p.d(temp) * y.alpha;
    r.p = pdot;
    return r;
  };
  const double h = (t1 - t0) / substeps;
  for (int i = 0; i < substeps; ++i) {
    const double t = t0 + i * h;
    const Rate k1 = rhs(t, s);
    const auto at = [&](const Rate& k, double w) {
      MaterialState y = s;
      y.eps_p += w * h * k.eps_p;
      y.alpha += w * h * k.alpha;
      y.p += w * h * k.p;
      return y;
    };
    const Rate k2 = rhs(t + 0.5 * h, at(k1, 0.5));
    const Rate k3 = rhs(t + 0.5 * h, at(k2, 0.5));
    const Rate k4 = rhs(t + h, at(k3, 1.0));
    s.eps_p += (h / 6.0) * (k1.eps_p + 2.0 * k2.eps_p + 2.0 * k3.eps_p + k4.eps_p);
    s.alpha += (h / 6.0) * (k1.alpha + 2.0 * k2.alpha + 2.0 * k3.alpha + k4.alpha);
    s.p += (h / 6.0) * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
  }
  OracleResult out;
  out.state = s;
  const double temp = temp_of_t(t1);
  out.sigma = apply_stiffness(
      elastic_stiffness(p.elastic, temp),
      eps_of_t(t1) - thermal_strain(p.elastic, temp) - s.eps_p);
  return out;
}

}  // namespace evprom
