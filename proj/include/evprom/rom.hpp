// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <set>
#include <string>
#include <vector>

#include "evprom/ecm.hpp"
#include "evprom/hf_solver.hpp"
#include "evprom/pod.hpp"

namespace evprom {

// Dual quantities reconstructed online: accumulated plastic strain and the
// six stress components in Voigt order.
inline const std::vector<std::string>& dual_quantity_names() {
  static const std::vector<std::string> names = {
      "p",        "sigma_11", "sigma_22", "sigma_33",
      "sigma_12", "sigma_23", "sigma_31"};
  return names;
}

// Column of the step data holding one dual quantity (index into the names
// above): p comes from the state, the rest from the Voigt stress.
inline VecX dual_quantity_values(const MatX& stress, const VecX& p, int q) {
  return q == 0 ? p : VecX(stress.col(q - 1));
}

struct DualField {
  std::string name;
  int quantity = 0;  // index into dual_quantity_names()
  GappyModel gappy;
  std::vector<int> eval_positions;  // its points, as offsets into eval_points
};

// Everything the online phase needs: primal basis, reduced quadrature and
// per-quantity gappy models, plus cached strain samples at the union of
// evaluation points.
struct ReducedModel {
  ReducedBasis primal;
  ReducedQuadrature quadrature;
  std::vector<DualField> duals;

  std::vector<int> eval_points;     // sorted union of all needed points
  std::vector<int> quad_positions;  // quadrature entries inside eval_points
  std::vector<MatX> mode_strains;   // per mode: |eval_points| x 6

  int eval_count() const { return static_cast<int>(eval_points.size()); }
};

inline ReducedQuadrature full_quadrature(const IntegrationTable& table) {
  ReducedQuadrature rq;
  rq.indices.resize(table.size());
  for (int k = 0; k < table.size(); ++k) rq.indices[k] = k;
  rq.weights = measures(table);
  return rq;
}

// Combine prepared pieces into a model and build the evaluation caches.
inline ReducedModel assemble_reduced_model(const IntegrationTable& table,
                                           ReducedBasis primal,
                                           ReducedQuadrature quadrature,
                                           std::vector<DualField> duals) {
  ReducedModel model;
  model.primal = std::move(primal);
  model.quadrature = std::move(quadrature);
  model.duals = std::move(duals);
  if (model.primal.size() == 0) throw PodError("empty primal basis");
  if (model.quadrature.size() == 0) throw EcmError("empty reduced quadrature");

  std::set<int> pts(model.quadrature.indices.begin(),
                    model.quadrature.indices.end());
  for (const DualField& d : model.duals)
    pts.insert(d.gappy.points.begin(), d.gappy.points.end());
  model.eval_points.assign(pts.begin(), pts.end());

  std::vector<int> where(table.size(), -1);
  for (int i = 0; i < model.eval_count(); ++i) where[model.eval_points[i]] = i;
  model.quad_positions.resize(model.quadrature.size());
  for (int i = 0; i < model.quadrature.size(); ++i)
    model.quad_positions[i] = where[model.quadrature.indices[i]];
  for (DualField& d : model.duals) {
    d.eval_positions.resize(d.gappy.points.size());
    for (size_t i = 0; i < d.gappy.points.size(); ++i)
      d.eval_positions[i] = where[d.gappy.points[i]];
  }

  model.mode_strains.assign(model.primal.size(), MatX(model.eval_count(), 6));
  for (int i = 0; i < model.primal.size(); ++i)
    for (int j = 0; j < model.eval_count(); ++j)
      model.mode_strains[i].row(j) =
          strain_to_voigt(
              strain_at(table.points[model.eval_points[j]], model.primal.modes.col(i)))
              .transpose();
  return model;
}

struct RomOptions {
  double eps_pod = 1e-5;       // primal truncation
  double eps_cubature = 1e-4;  // quadrature fitting tolerance
  double eps_gappy = 1e-5;     // dual truncation
};

// Offline compression: primal basis from displacement snapshots, reduced
// quadrature from the cubature fit, one gappy model per dual quantity.
inline ReducedModel build_reduced_model(
    const Mesh& mesh, const IntegrationTable& table,
    const std::vector<SnapshotArchive>& archives, const RomOptions& opts) {
  int total = 0;
  for (const SnapshotArchive& a : archives)
    total += static_cast<int>(a.steps.size());
  if (total == 0) throw PodError("no snapshots to compress");

  MatX u_snaps(mesh.dof_count(), total);
  std::vector<MatX> stresses;
  MatX p_snaps(table.size(), total);
  int col = 0;
  for (const SnapshotArchive& a : archives)
    for (const StepSolution& s : a.steps) {
      u_snaps.col(col) = s.u;
      stresses.push_back(s.stress);
      p_snaps.col(col) = s.p;
      ++col;
    }

  const InnerProduct nodal_dot = [&table](const VecX& x, const VecX& y) {
    return l2_product(table, x, y);
  };
  const InnerProduct ip_dot = [&table](const VecX& x, const VecX& y) {
    return ip_product(table, x, y);
  };

  const ReducedBasis primal = snapshot_pod(u_snaps, opts.eps_pod, nodal_dot);
  if (primal.degenerate)
    throw PodError("displacement snapshots are all zero");

  const EcmSystem sys = build_ecm_system(table, stresses, primal.modes);
  const NnompResult fit = nnomp(sys.j, sys.g, opts.eps_cubature);
  if (!fit.converged)
    throw EcmError("cubature fit stalled at relative residual " +
                   std::to_string(fit.relative_residual));

  std::vector<DualField> duals;
  for (size_t q = 0; q < dual_quantity_names().size(); ++q) {
    MatX snaps(table.size(), total);
    for (int s = 0; s < total; ++s)
      snaps.col(s) = dual_quantity_values(stresses[s], p_snaps.col(s),
                                          static_cast<int>(q));
    const ReducedBasis basis = snapshot_pod(snaps, opts.eps_gappy, ip_dot);
    DualField d;
    d.name = dual_quantity_names()[q];
    d.quantity = static_cast<int>(q);
    d.gappy = build_gappy(basis, fit.quadrature.indices);
    duals.push_back(std::move(d));
  }
  return assemble_reduced_model(table, primal, fit.quadrature, std::move(duals));
}

// One converged reduced increment; states and stresses live on the
// evaluation points only.
struct ReducedStep {
  VecX u_hat;
  MatX stress;  // eval_count x 6
  VecX p;       // eval_count
  std::vector<MaterialState> states;
  int iterations = 0;
  std::vector<double> residual_history;
};

// Galerkin-Newton on the reduced coordinates.  The balance and tangent use
// the reduced quadrature; the law advances trial states at every
// evaluation point so dual samples stay consistent with the converged
// displacement.
inline ReducedStep rom_solve_step(const ReducedModel& model,
                                  const IntegrationTable& table,
                                  const MaterialLaw& law, const VecX& f_ext_red,
                                  const VecX& temp_nodal, double dt,
                                  const std::vector<MaterialState>& states0,
                                  const VecX& u_hat_guess,
                                  const NewtonOptions& opts) {
  const int n = model.primal.size();
  const int ne = model.eval_count();
  ReducedStep sol;
  sol.u_hat = u_hat_guess;
  sol.stress.resize(ne, 6);
  sol.p.resize(ne);
  sol.states.resize(ne);
  std::vector<Mat6> moduli(ne);
  const double load_norm = f_ext_red.norm();

  for (int it = 0; it <= opts.max_iterations; ++it) {
    for (int j = 0; j < ne; ++j) {
      Vec6 ev = Vec6::Zero();
      for (int i = 0; i < n; ++i)
        ev += sol.u_hat[i] * model.mode_strains[i].row(j).transpose();
      const IpData& ip = table.points[model.eval_points[j]];
      const LawResult r = law.integrate(states0[j], strain_from_voigt(ev),
                                        scalar_at(ip, temp_nodal), dt);
      sol.stress.row(j) = stress_to_voigt(r.sigma).transpose();
      moduli[j] = r.tangent;
      sol.states[j] = r.state;
      sol.p[j] = r.state.p;
    }
    VecX f_int = VecX::Zero(n);
    for (int q = 0; q < model.quadrature.size(); ++q) {
      const int j = model.quad_positions[q];
      const double w = model.quadrature.weights[q];
      for (int i = 0; i < n; ++i)
        f_int[i] += w * sol.stress.row(j).dot(model.mode_strains[i].row(j));
    }
    const VecX residual = f_int - f_ext_red;
    const double rel =
        load_norm > 0.0 ? residual.norm() / load_norm : residual.norm();
    sol.residual_history.push_back(rel);
    if (rel <= opts.tolerance) {
      sol.iterations = it;
      return sol;
    }
    if (it == opts.max_iterations) break;
    MatX k_red = MatX::Zero(n, n);
    for (int q = 0; q < model.quadrature.size(); ++q) {
      const int j = model.quad_positions[q];
      const double w = model.quadrature.weights[q];
      MatX be(6, n);
      for (int i = 0; i < n; ++i)
        be.col(i) = model.mode_strains[i].row(j).transpose();
      k_red += w * be.transpose() * moduli[j] * be;
    }
    Eigen::FullPivLU<MatX> lu(k_red);
    lu.setThreshold(1e-14);
    if (!lu.isInvertible()) throw SolverError("singular reduced tangent");
    sol.u_hat += lu.solve(-residual);
  }
  throw SolverError("reduced newton did not converge, residual " +
                    std::to_string(sol.residual_history.back()));
}

// Per-step outcome of the reduced transient, including the gappy
// reconstruction of every dual quantity.
struct RomRecord {
  double time = 0.0;
  VecX u_hat;
  int iterations = 0;
  bool enriched = false;             // step replaced by a reference solve
  std::vector<VecX> dual_samples;    // per dual: values at its points
  std::vector<VecX> dual_coeffs;     // per dual: gappy coefficients
  std::vector<VecX> dual_fields;     // per dual: reconstructed full field
};

struct RomSolution {
  std::vector<RomRecord> records;
};

inline RomRecord make_rom_record(const ReducedModel& model, double time,
                                 const ReducedStep& step) {
  RomRecord rec;
  rec.time = time;
  rec.u_hat = step.u_hat;
  rec.iterations = step.iterations;
  for (const DualField& d : model.duals) {
    const VecX values = dual_quantity_values(step.stress, step.p, d.quantity);
    VecX samples(d.eval_positions.size());
    for (size_t i = 0; i < d.eval_positions.size(); ++i)
      samples[i] = values[d.eval_positions[i]];
    rec.dual_samples.push_back(samples);
    const VecX z = gappy_coefficients(d.gappy, samples);
    rec.dual_coeffs.push_back(z);
    rec.dual_fields.push_back(z.size() > 0
                                  ? VecX(d.gappy.basis.modes * z)
                                  : VecX(VecX::Zero(d.gappy.basis.modes.rows())));
  }
  return rec;
}

inline RomSolution run_rom_transient(const ReducedModel& model,
                                     const Mesh& mesh,
                                     const IntegrationTable& table,
                                     const MaterialLaw& law,
                                     const LoadingProgram& lp,
                                     const NewtonOptions& opts) {
  lp.validate(mesh);
  RomSolution sol;
  std::vector<MaterialState> states(model.eval_count());
  VecX u_hat = VecX::Zero(model.primal.size());
  for (size_t s = 0; s < lp.times.size(); ++s) {
    const double t = lp.times[s];
    const double dt = s == 0 ? lp.times[1] - lp.times[0] : t - lp.times[s - 1];
    const VecX f_red =
        project_external_force(mesh, table, model.primal.modes, lp, t);
    const VecX temp = lp.temperature_at(t, mesh.node_count());
    const ReducedStep step = rom_solve_step(model, table, law, f_red, temp, dt,
                                            states, u_hat, opts);
    states = step.states;
    u_hat = step.u_hat;
    sol.records.push_back(make_rom_record(model, t, step));
  }
  return sol;
}

}  // namespace evprom
