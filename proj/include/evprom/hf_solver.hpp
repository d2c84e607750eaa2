// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <string>
#include <vector>

#include "evprom/assembly.hpp"
#include "evprom/behavior.hpp"
#include "evprom/loading.hpp"
#include "evprom/types.hpp"

namespace evprom {

struct NewtonOptions {
  double tolerance = 1e-5;
  int max_iterations = 30;
};

// Converged solution of one time increment.
struct StepSolution {
  double time = 0.0;
  VecX u;                             // nodal displacement
  MatX stress;                        // integration-point stress, Voigt rows
  VecX p;                             // accumulated plastic strain per point
  std::vector<MaterialState> states;  // committed states per point
  int iterations = 0;
  std::vector<double> residual_history;
};

// Newton iteration on the balance residual F_int(u) - F_ext with fully
// clamped Dirichlet nodes eliminated.  Convergence is measured relative to
// the free-dof norm of F_ext, or absolutely when the load vanishes.  The
// returned states come from the law evaluation at the accepted iterate.
inline StepSolution solve_step(const Mesh& mesh, const IntegrationTable& table,
                               const MaterialLaw& law, const VecX& f_ext,
                               const VecX& temp_nodal, double t, double dt,
                               const std::vector<MaterialState>& states0,
                               const VecX& u_guess, const NewtonOptions& opts) {
  const DofMap map = make_dof_map(mesh);
  StepSolution sol;
  sol.time = t;
  sol.u = u_guess;
  for (int n : mesh.dirichlet_nodes) sol.u.segment<3>(3 * n).setZero();
  const double load_norm = map.restrict_free(f_ext).norm();

  const int ng = table.size();
  sol.stress.resize(ng, 6);
  sol.p.resize(ng);
  sol.states.resize(ng);
  std::vector<Mat6> moduli(ng);

  for (int it = 0; it <= opts.max_iterations; ++it) {
    for (int k = 0; k < ng; ++k) {
      const IpData& ip = table.points[k];
      const LawResult r = law.integrate(states0[k], strain_at(ip, sol.u),
                                        scalar_at(ip, temp_nodal), dt);
      sol.stress.row(k) = stress_to_voigt(r.sigma).transpose();
      moduli[k] = r.tangent;
      sol.states[k] = r.state;
      sol.p[k] = r.state.p;
    }
    const VecX f_int = assemble_internal_force(table, sol.stress, mesh.dof_count());
    const VecX residual = f_int - f_ext;
    const double norm = map.restrict_free(residual).norm();
    const double rel = load_norm > 0.0 ? norm / load_norm : norm;
    sol.residual_history.push_back(rel);
    if (rel <= opts.tolerance) {
      sol.iterations = it;
      return sol;
    }
    if (it == opts.max_iterations) break;
    const MatX k_mat = assemble_tangent(table, moduli, mesh.dof_count());
    sol.u += solve_free(k_mat, -residual, map);
  }
  throw SolverError("newton did not converge in " +
                    std::to_string(opts.max_iterations) + " iterations at t=" +
                    std::to_string(t) + ", residual " +
                    std::to_string(sol.residual_history.back()));
}

// Transient archive: one converged record per loading time, including the
// full internal state so later runs can restart from any step.
struct SnapshotArchive {
  std::string label;
  std::vector<double> times;
  std::vector<StepSolution> steps;
};

inline SnapshotArchive run_transient(const Mesh& mesh,
                                     const IntegrationTable& table,
                                     const MaterialLaw& law,
                                     const LoadingProgram& lp,
                                     const NewtonOptions& opts) {
  lp.validate(mesh);
  SnapshotArchive archive;
  archive.label = lp.label;
  archive.times = lp.times;
  std::vector<MaterialState> states(table.size());
  VecX u = VecX::Zero(mesh.dof_count());
  for (size_t s = 0; s < lp.times.size(); ++s) {
    const double t = lp.times[s];
    const double dt = s == 0 ? lp.times[1] - lp.times[0] : t - lp.times[s - 1];
    const VecX f_ext = external_force(mesh, table, lp, t);
    const VecX temp = lp.temperature_at(t, mesh.node_count());
    StepSolution sol =
        solve_step(mesh, table, law, f_ext, temp, t, dt, states, u, opts);
    states = sol.states;
    u = sol.u;
    archive.steps.push_back(std::move(sol));
  }
  return archive;
}

}  // namespace evprom
