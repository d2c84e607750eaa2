// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <vector>

#include "evprom/integration.hpp"
#include "evprom/mesh.hpp"
#include "evprom/types.hpp"

namespace evprom {

// Homogeneous Dirichlet handling by row/column elimination.
struct DofMap {
  std::vector<int> full_to_free;  // -1 on constrained dofs
  std::vector<int> free_to_full;

  int free_count() const { return static_cast<int>(free_to_full.size()); }

  VecX restrict_free(const VecX& full) const {
    VecX out(free_count());
    for (int i = 0; i < free_count(); ++i) out[i] = full[free_to_full[i]];
    return out;
  }

  void add_to_full(const VecX& free, VecX& full) const {
    for (int i = 0; i < free_count(); ++i) full[free_to_full[i]] += free[i];
  }
};

inline DofMap make_dof_map(const Mesh& mesh) {
  DofMap map;
  map.full_to_free.assign(mesh.dof_count(), 0);
  for (int n : mesh.dirichlet_nodes)
    for (int d = 0; d < 3; ++d) map.full_to_free[3 * n + d] = -1;
  for (int i = 0; i < mesh.dof_count(); ++i) {
    if (map.full_to_free[i] == 0) {
      map.full_to_free[i] = static_cast<int>(map.free_to_full.size());
      map.free_to_full.push_back(i);
    }
  }
  return map;
}

// Internal force from per-point Cauchy stress samples:
//   f[a] += measure_k * sigma_k . grad N_a(x_k)
// Stresses are Voigt rows of a (n_points x 6) matrix.
inline VecX assemble_internal_force(const IntegrationTable& table,
                                    const MatX& stress_voigt, int dof_count) {
  VecX f = VecX::Zero(dof_count);
  for (int k = 0; k < table.size(); ++k) {
    const IpData& ip = table.points[k];
    const Mat3 sigma = stress_from_voigt(stress_voigt.row(k).transpose());
    for (int a = 0; a < ip.nodes_used; ++a)
      f.segment<3>(3 * ip.nodes[a]) += ip.measure * (sigma * ip.gradient[a]);
  }
  return f;
}

namespace detail {

// 6x3 strain-displacement block of node a (engineering shear rows).
inline Eigen::Matrix<double, 6, 3> b_block(const Vec3& g) {
  Eigen::Matrix<double, 6, 3> b = Eigen::Matrix<double, 6, 3>::Zero();
  b(0, 0) = g.x();
  b(1, 1) = g.y();
  b(2, 2) = g.z();
  b(3, 0) = g.y();
  b(3, 1) = g.x();
  b(4, 1) = g.z();
  b(4, 2) = g.y();
  b(5, 0) = g.z();
  b(5, 2) = g.x();
  return b;
}

}  // namespace detail

// Tangent stiffness from per-point 6x6 moduli samples.
inline MatX assemble_tangent(const IntegrationTable& table,
                             const std::vector<Mat6>& moduli, int dof_count) {
  MatX k_mat = MatX::Zero(dof_count, dof_count);
  for (int k = 0; k < table.size(); ++k) {
    const IpData& ip = table.points[k];
    std::array<Eigen::Matrix<double, 6, 3>, 8> b;
    for (int a = 0; a < ip.nodes_used; ++a) b[a] = detail::b_block(ip.gradient[a]);
    for (int a = 0; a < ip.nodes_used; ++a) {
      const Eigen::Matrix<double, 6, 3> ca = moduli[k] * b[a];
      for (int bn = 0; bn < ip.nodes_used; ++bn) {
        k_mat.block<3, 3>(3 * ip.nodes[bn], 3 * ip.nodes[a]) +=
            ip.measure * (b[bn].transpose() * ca);
      }
    }
  }
  return k_mat;
}

// Dense solve on the free dofs; the tangent must be invertible.
inline VecX solve_free(const MatX& k_full, const VecX& rhs_full,
                       const DofMap& map) {
  const int nf = map.free_count();
  MatX k_free(nf, nf);
  for (int j = 0; j < nf; ++j)
    for (int i = 0; i < nf; ++i)
      k_free(i, j) = k_full(map.free_to_full[i], map.free_to_full[j]);
  Eigen::FullPivLU<MatX> lu(k_free);
  lu.setThreshold(1e-14);
  if (!lu.isInvertible()) throw SolverError("singular tangent matrix");
  const VecX x_free = lu.solve(map.restrict_free(rhs_full));
  VecX x = VecX::Zero(rhs_full.size());
  map.add_to_full(x_free, x);
  return x;
}

}  // namespace evprom
