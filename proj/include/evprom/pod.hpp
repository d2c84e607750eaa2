// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <functional>

#include "evprom/types.hpp"

namespace evprom {

// Basis produced by snapshot compression.  Columns are orthonormal with
// respect to the inner product used at build time.
struct ReducedBasis {
  MatX modes;
  VecX eigenvalues;     // kept correlation eigenvalues, descending
  double total_energy = 0.0;
  bool degenerate = false;  // all snapshots were numerically zero

  int size() const { return static_cast<int>(modes.cols()); }
};

using InnerProduct = std::function<double(const VecX&, const VecX&)>;

// Snapshot compression through the correlation matrix C_ij = (u_i, u_j).
// The kept mode count is the larger of two truncation rules: cumulated
// energy at least (1 - eps^2) of the total, and eigenvalues above eps^2
// times the largest.  Eigenvalues below 1e-14 of the largest are dropped
// outright.  Modes are re-orthonormalized so their Gram matrix is the
// identity to tight tolerance regardless of eigenvalue spread.
inline ReducedBasis snapshot_pod(const MatX& snapshots, double eps,
                                 const InnerProduct& dot) {
  if (snapshots.cols() == 0) throw PodError("snapshot set is empty");
  if (!(eps > 0.0 && eps < 1.0))
    throw PodError("truncation tolerance must lie in (0, 1)");
  const int nc = static_cast<int>(snapshots.cols());
  MatX c(nc, nc);
  for (int j = 0; j < nc; ++j)
    for (int i = 0; i <= j; ++i) {
      c(i, j) = dot(snapshots.col(i), snapshots.col(j));
      c(j, i) = c(i, j);
    }
  Eigen::SelfAdjointEigenSolver<MatX> eig(c);
  if (eig.info() != Eigen::Success)
    throw PodError("correlation matrix eigensolve failed");

  VecX lambda(nc);
  MatX xi(nc, nc);
  for (int i = 0; i < nc; ++i) {
    lambda[i] = eig.eigenvalues()[nc - 1 - i];
    xi.col(i) = eig.eigenvectors().col(nc - 1 - i);
  }
  double total = 0.0;
  for (int i = 0; i < nc; ++i) total += std::max(lambda[i], 0.0);

  ReducedBasis basis;
  basis.total_energy = total;
  if (total <= 0.0) {
    basis.modes.resize(snapshots.rows(), 0);
    basis.eigenvalues.resize(0);
    basis.degenerate = true;
    return basis;
  }

  int kept = 0;
  while (kept < nc && lambda[kept] > 1e-14 * lambda[0]) ++kept;

  int n1 = kept;
  double cum = 0.0;
  for (int i = 0; i < kept; ++i) {
    cum += lambda[i];
    if (cum >= (1.0 - eps * eps) * total) {
      n1 = i + 1;
      break;
    }
  }
  int n2 = kept;
  for (int i = 0; i < kept; ++i) {
    if (lambda[i] <= eps * eps * lambda[0]) {
      n2 = i + 1;
      break;
    }
  }
  const int n = std::max(1, std::max(n1, n2));

  basis.modes.resize(snapshots.rows(), n);
  basis.eigenvalues = lambda.head(n);
  for (int i = 0; i < n; ++i) {
    VecX v = snapshots * xi.col(i);
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j)
        v -= dot(v, basis.modes.col(j)) * basis.modes.col(j);
    const double nrm = std::sqrt(std::max(0.0, dot(v, v)));
    if (!(nrm > 0.0)) throw PodError("degenerate mode during orthonormalization");
    basis.modes.col(i) = v / nrm;
  }
  return basis;
}

// Coefficients of the best approximation of a field in the basis
// (orthonormal modes, so plain inner products).
inline VecX pod_project(const ReducedBasis& basis, const VecX& field,
                        const InnerProduct& dot) {
  VecX z(basis.size());
  for (int i = 0; i < basis.size(); ++i) z[i] = dot(field, basis.modes.col(i));
  return z;
}

}  // namespace evprom
