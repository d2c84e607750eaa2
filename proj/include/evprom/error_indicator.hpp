// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "evprom/rom.hpp"

namespace evprom {

// Relative errors can be undefined before any activity: both the natural
// and the fallback denominator vanish.
struct ErrorValue {
  double value = 0.0;
  bool defined = false;
};

// A reference norm under one percent of its offline scale counts as
// vanished: a ratio against it measures noise, not approximation quality.
inline constexpr double kNegligibleScale = 1e-2;

// Relative deviation of a reconstructed integration-point field from the
// reference, in the weighted L2 norm of one region (or the whole domain
// with region = -1).  When the reference norm vanishes against the largest
// offline reference norm, that offline norm takes its place.
inline ErrorValue relative_error(const IntegrationTable& table,
                                 const VecX& q_hf, const VecX& q_rec,
                                 int region, double fallback) {
  const double diff = ip_norm(table, q_rec - q_hf, region);
  const double denom = ip_norm(table, q_hf, region);
  if (denom > 0.0 && denom >= kNegligibleScale * fallback)
    return {diff / denom, true};
  if (fallback > 0.0) return {diff / fallback, true};
  if (denom > 0.0) return {diff / denom, true};
  return {0.0, false};
}

// Relative gap between reconstructed and computed values at the sampling
// points of one dual quantity, in the Euclidean norm.  Same fallback rule.
inline ErrorValue gappy_residual(const VecX& p_hat, const VecX& p_tilde,
                                 double fallback) {
  if (p_hat.size() != p_tilde.size())
    throw CalibrationError("gappy residual length mismatch");
  const double diff = (p_tilde - p_hat).norm();
  const double denom = p_hat.norm();
  if (denom > 0.0 && denom >= kNegligibleScale * fallback)
    return {diff / denom, true};
  if (fallback > 0.0) return {diff / fallback, true};
  if (denom > 0.0) return {diff / denom, true};
  return {0.0, false};
}

// One-dimensional Gaussian-process regressor with a squared-exponential
// kernel plus white noise, trained on mean-centered targets.  With fewer
// than two distinct inputs the model degenerates to the target mean with
// the target spread as constant predictive deviation.
struct GprModel {
  VecX inputs;
  VecX targets;
  double target_mean = 0.0;
  double length = 1.0;  // kernel length scale
  double signal = 1.0;  // signal standard deviation
  double noise = 0.0;   // white-noise standard deviation
  MatX chol;            // lower factor of K + noise^2 I
  VecX alpha;           // (K + noise^2 I)^{-1} (targets - mean)
  bool degenerate = false;
  double prior_std = 0.0;  // spread used by the degenerate model

  int size() const { return static_cast<int>(inputs.size()); }
};

struct GprPrediction {
  double mean = 0.0;
  double std = 0.0;
};

namespace detail {

inline double se_kernel(double x, double y, double length, double signal) {
  const double d = (x - y) / length;
  return signal * signal * std::exp(-0.5 * d * d);
}

// Log marginal likelihood of the centered targets; -inf when the kernel
// matrix fails to factorize.
inline double gpr_log_likelihood(const VecX& x, const VecX& yc, double length,
                                 double signal, double noise, MatX* chol_out,
                                 VecX* alpha_out) {
  const int n = static_cast<int>(x.size());
  MatX k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = se_kernel(x[i], x[j], length, signal);
  k.diagonal().array() += noise * noise;
  Eigen::LLT<MatX> llt(k);
  if (llt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  const MatX l = llt.matrixL();
  const VecX alpha = llt.solve(yc);
  double log_det = 0.0;
  for (int i = 0; i < n; ++i) log_det += std::log(l(i, i));
  const double ll = -0.5 * yc.dot(alpha) - log_det -
                    0.5 * n * std::log(2.0 * 3.14159265358979323846);
  if (!std::isfinite(ll)) return -std::numeric_limits<double>::infinity();
  if (chol_out) *chol_out = l;
  if (alpha_out) *alpha_out = alpha;
  return ll;
}

}  // namespace detail

// Hyperparameters maximize the log marginal likelihood over a log-scale
// grid (5 points per dimension), refined once around the best cell.
inline GprModel gpr_fit(const VecX& inputs, const VecX& targets) {
  if (inputs.size() != targets.size())
    throw CalibrationError("calibration inputs and targets differ in length");
  GprModel model;
  model.inputs = inputs;
  model.targets = targets;
  const int n = model.size();
  model.target_mean = n > 0 ? targets.mean() : 0.0;

  int distinct = 0;
  for (int i = 0; i < n; ++i) {
    bool seen = false;
    for (int j = 0; j < i; ++j) seen = seen || inputs[j] == inputs[i];
    if (!seen) ++distinct;
  }
  if (distinct < 2) {
    model.degenerate = true;
    double var = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = targets[i] - model.target_mean;
      var += d * d;
    }
    model.prior_std = n > 0 ? std::sqrt(var / n) : 0.0;
    return model;
  }

  const VecX yc = targets.array() - model.target_mean;
  const double x_span = inputs.maxCoeff() - inputs.minCoeff();
  const double y_spread = std::max(std::sqrt(yc.squaredNorm() / n), 1e-12);

  // Grid centers in log10 around the data scales.  The noise center sits
  // one decade under the target spread: calibration targets scatter, and a
  // noise floor far below that forces interpolation with a tiny length
  // scale, which oscillates between training points.
  double c_len = std::log10(x_span);
  double c_sig = std::log10(y_spread);
  double c_noise = c_sig - 1.0;
  double half = 1.5;  // half-width of the search box in decades

  double best_ll = -std::numeric_limits<double>::infinity();
  double best[3] = {c_len, c_sig, c_noise};
  for (int round = 0; round < 2; ++round) {
    const double step = half / 2.0;
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b)
        for (int c = -2; c <= 2; ++c) {
          const double length = std::pow(10.0, c_len + step * a);
          const double signal = std::pow(10.0, c_sig + step * b);
          const double noise = std::pow(10.0, c_noise + step * c);
          const double ll = detail::gpr_log_likelihood(inputs, yc, length,
                                                       signal, noise, nullptr,
                                                       nullptr);
          if (ll > best_ll) {
            best_ll = ll;
            best[0] = c_len + step * a;
            best[1] = c_sig + step * b;
            best[2] = c_noise + step * c;
          }
        }
    c_len = best[0];
    c_sig = best[1];
    c_noise = best[2];
    half = half / 2.0;
  }
  if (!std::isfinite(best_ll))
    throw CalibrationError("hyperparameter search found no usable kernel");

  model.length = std::pow(10.0, best[0]);
  model.signal = std::pow(10.0, best[1]);
  model.noise = std::pow(10.0, best[2]);
  detail::gpr_log_likelihood(inputs, yc, model.length, model.signal,
                             model.noise, &model.chol, &model.alpha);
  return model;
}

// Predictive distribution at one input; the variance includes the white
// noise so repeated observations stay inside the band.
inline GprPrediction gpr_predict(const GprModel& model, double x) {
  if (model.degenerate) return {model.target_mean, model.prior_std};
  const int n = model.size();
  VecX ks(n);
  for (int i = 0; i < n; ++i)
    ks[i] = detail::se_kernel(x, model.inputs[i], model.length, model.signal);
  const double mean = model.target_mean + ks.dot(model.alpha);
  const VecX v = model.chol.triangularView<Eigen::Lower>().solve(ks);
  const double var = model.signal * model.signal + model.noise * model.noise -
                     v.squaredNorm();
  return {mean, std::sqrt(std::max(0.0, var))};
}

// Conservative error estimate: predictive mean plus three standard
// deviations, reported unclamped.
inline double gpr_indicator(const GprModel& model, double residual) {
  const GprPrediction p = gpr_predict(model, residual);
  return p.mean + 3.0 * p.std;
}

// Calibration data and fitted regressor for one (quantity, region) pair.
struct CalibrationEntry {
  int quantity = 0;
  int region = -1;
  std::vector<double> inputs;   // gappy residuals
  std::vector<double> targets;  // true relative errors
  double fallback_residual = 0.0;  // largest sampled-value norm seen offline
  double fallback_error = 0.0;     // largest reference field norm offline
  GprModel model;
};

struct Calibration {
  std::vector<int> regions;  // monitored regions, -1 meaning the whole domain
  std::vector<CalibrationEntry> entries;  // quantity-major over regions

  const CalibrationEntry& entry(int quantity, int region) const {
    for (const CalibrationEntry& e : entries)
      if (e.quantity == quantity && e.region == region) return e;
    throw CalibrationError("no calibration entry for quantity " +
                           std::to_string(quantity));
  }
};

namespace detail {

// Euclidean norm of the sample subvector lying inside a region.
inline double region_sample_norm(const IntegrationTable& table,
                                 const DualField& dual, const VecX& samples,
                                 int region) {
  double acc = 0.0;
  for (size_t i = 0; i < dual.gappy.points.size(); ++i)
    if (region < 0 || table.points[dual.gappy.points[i]].region == region)
      acc += samples[i] * samples[i];
  return std::sqrt(acc);
}

inline ErrorValue region_gappy_residual(const IntegrationTable& table,
                                        const DualField& dual,
                                        const VecX& samples,
                                        const VecX& reconstruction,
                                        int region, double fallback) {
  std::vector<int> keep;
  for (size_t i = 0; i < dual.gappy.points.size(); ++i)
    if (region < 0 || table.points[dual.gappy.points[i]].region == region)
      keep.push_back(static_cast<int>(i));
  VecX hat(keep.size()), tilde(keep.size());
  for (size_t i = 0; i < keep.size(); ++i) {
    hat[i] = samples[keep[i]];
    tilde[i] = reconstruction[keep[i]];
  }
  return gappy_residual(hat, tilde, fallback);
}

}  // namespace detail

// Residual of one recorded step for one dual quantity, restricted to a
// region, using the stored offline fallback denominator.
inline ErrorValue record_residual(const IntegrationTable& table,
                                  const ReducedModel& model,
                                  const RomRecord& record, int quantity,
                                  int region, double fallback) {
  for (size_t q = 0; q < model.duals.size(); ++q) {
    const DualField& d = model.duals[q];
    if (d.quantity != quantity) continue;
    const VecX rec_at_points = d.gappy.b * record.dual_coeffs[q];
    return detail::region_gappy_residual(table, d, record.dual_samples[q],
                                         rec_at_points, region, fallback);
  }
  throw CalibrationError("model carries no dual for quantity " +
                         std::to_string(quantity));
}

// Loose reduced solves over the offline loadings produce (residual, error)
// pairs per quantity and region; a regressor per pair maps the cheap
// residual to a conservative error estimate.  Plasticity pairs collected
// before the reference shows any plastic activity in the region are
// dropped.
inline Calibration calibrate(const Mesh& mesh, const IntegrationTable& table,
                             const ReducedModel& model, const MaterialLaw& law,
                             const std::vector<LoadingProgram>& loadings,
                             const std::vector<SnapshotArchive>& archives,
                             const std::vector<int>& regions,
                             double loose_tolerance = 0.1) {
  if (loadings.size() != archives.size())
    throw CalibrationError("each loading needs its reference archive");
  const int nq = static_cast<int>(dual_quantity_names().size());

  Calibration cal;
  cal.regions = regions;
  for (int q = 0; q < nq; ++q)
    for (int r : regions) {
      CalibrationEntry e;
      e.quantity = q;
      e.region = r;
      cal.entries.push_back(e);
    }
  auto entry_at = [&](int q, int r) -> CalibrationEntry& {
    for (CalibrationEntry& e : cal.entries)
      if (e.quantity == q && e.region == r) return e;
    throw CalibrationError("missing calibration entry");
  };

  NewtonOptions loose;
  loose.tolerance = loose_tolerance;
  std::vector<RomSolution> solutions;
  for (const LoadingProgram& lp : loadings)
    solutions.push_back(run_rom_transient(model, mesh, table, law, lp, loose));

  // Fallback denominators come from the full offline sweep.
  for (int q = 0; q < nq; ++q)
    for (int r : regions) {
      CalibrationEntry& e = entry_at(q, r);
      for (size_t l = 0; l < loadings.size(); ++l) {
        for (const StepSolution& s : archives[l].steps) {
          const VecX ref = dual_quantity_values(s.stress, s.p, q);
          e.fallback_error = std::max(e.fallback_error, ip_norm(table, ref, r));
        }
        for (const RomRecord& rec : solutions[l].records)
          for (size_t d = 0; d < model.duals.size(); ++d)
            if (model.duals[d].quantity == q)
              e.fallback_residual = std::max(
                  e.fallback_residual,
                  detail::region_sample_norm(table, model.duals[d],
                                             rec.dual_samples[d], r));
      }
    }

  for (size_t l = 0; l < loadings.size(); ++l) {
    if (solutions[l].records.size() != archives[l].steps.size())
      throw CalibrationError("archive and reduced solve disagree on steps");
    std::vector<bool> plastic_seen(regions.size(), false);
    for (size_t s = 0; s < solutions[l].records.size(); ++s) {
      const RomRecord& rec = solutions[l].records[s];
      const StepSolution& ref = archives[l].steps[s];
      for (size_t ri = 0; ri < regions.size(); ++ri) {
        const int r = regions[ri];
        // Plastic activity means flow above the negligible scale: the
        // power law emits values like 1e-40 at incipient yield, and pairs
        // against a negligible reference compare an honest ratio with the
        // fallback measure, poisoning the regressor.
        if (!plastic_seen[ri] &&
            ip_norm(table, ref.p, r) >
                kNegligibleScale * entry_at(0, r).fallback_error)
          plastic_seen[ri] = true;
        for (int q = 0; q < nq; ++q) {
          if (q == 0 && !plastic_seen[ri]) continue;
          CalibrationEntry& e = entry_at(q, r);
          const ErrorValue res =
              record_residual(table, model, rec, q, r, e.fallback_residual);
          const VecX ref_field = dual_quantity_values(ref.stress, ref.p, q);
          size_t dual_index = 0;
          for (size_t d = 0; d < model.duals.size(); ++d)
            if (model.duals[d].quantity == q) dual_index = d;
          const ErrorValue err = relative_error(
              table, ref_field, rec.dual_fields[dual_index], r, e.fallback_error);
          if (!res.defined || !err.defined) continue;
          e.inputs.push_back(res.value);
          e.targets.push_back(err.value);
        }
      }
    }
  }

  for (CalibrationEntry& e : cal.entries) {
    const int n = static_cast<int>(e.inputs.size());
    VecX x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = e.inputs[i];
      y[i] = e.targets[i];
    }
    e.model = gpr_fit(x, y);
  }
  return cal;
}

}  // namespace evprom
