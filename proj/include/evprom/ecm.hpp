// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "evprom/integration.hpp"
#include "evprom/pod.hpp"
#include "evprom/types.hpp"

namespace evprom {

// Nonnegative least squares min ||a x - b|| s.t. x >= 0, Lawson-Hanson
// active set.  All subproblems order passive columns ascending, and ties
// in the gradient pick the lowest index, so reruns on identical input are
// bit identical.
inline VecX nnls(const MatX& a, const VecX& b) {
  const int n = static_cast<int>(a.cols());
  VecX x = VecX::Zero(n);
  std::vector<int> passive;  // ascending
  std::vector<char> in_passive(n, 0);
  const double kkt_tol = 1e-10 * b.norm();

  const auto solve_passive = [&]() {
    MatX ap(a.rows(), passive.size());
    for (size_t i = 0; i < passive.size(); ++i) ap.col(i) = a.col(passive[i]);
    return VecX(ap.colPivHouseholderQr().solve(b));
  };

  VecX w = a.transpose() * b;
  for (int outer = 0; outer < 10 * n + 10; ++outer) {
    int best = -1;
    double best_w = kkt_tol;
    for (int i = 0; i < n; ++i)
      if (!in_passive[i] && w[i] > best_w) {
        best_w = w[i];
        best = i;
      }
    if (best < 0) return x;
    passive.insert(std::lower_bound(passive.begin(), passive.end(), best), best);
    in_passive[best] = 1;

    for (int inner = 0; inner < 10 * n + 10; ++inner) {
      const VecX z = solve_passive();
      double min_z = 1.0;
      for (size_t i = 0; i < passive.size(); ++i) min_z = std::min(min_z, z[i]);
      if (min_z > 0.0) {
        x.setZero();
        for (size_t i = 0; i < passive.size(); ++i) x[passive[i]] = z[i];
        break;
      }
      double alpha = 1.0;
      for (size_t i = 0; i < passive.size(); ++i)
        if (z[i] <= 0.0) {
          const double xi = x[passive[i]];
          if (xi - z[i] > 0.0) alpha = std::min(alpha, xi / (xi - z[i]));
        }
      for (size_t i = 0; i < passive.size(); ++i) {
        const int col = passive[i];
        x[col] += alpha * (z[i] - x[col]);
      }
      std::vector<int> next;
      for (int col : passive) {
        if (x[col] > 1e-14 * (1.0 + x.maxCoeff())) next.push_back(col);
        else {
          x[col] = 0.0;
          in_passive[col] = 0;
        }
      }
      passive = std::move(next);
      if (passive.empty()) break;
    }
    w = a.transpose() * (b - a * x);
  }
  throw EcmError("nonnegative least squares did not converge");
}

struct ReducedQuadrature {
  std::vector<int> indices;  // ascending
  VecX weights;              // positive, aligned with indices

  int size() const { return static_cast<int>(indices.size()); }
};

struct NnompResult {
  ReducedQuadrature quadrature;
  double relative_residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Greedy nonnegative orthogonal matching pursuit: grow the support by the
// column most correlated with the residual, re-fit all weights by
// nonnegative least squares, stop when ||g - J w|| <= eps ||g||.  Three
// iterations without residual improvement count as stagnation; the best
// iterate seen is returned either way.
inline NnompResult nnomp(const MatX& j, const VecX& g, double eps) {
  const int cols = static_cast<int>(j.cols());
  NnompResult out;
  const double norm_g = g.norm();
  if (norm_g == 0.0) {
    out.converged = true;
    return out;
  }

  std::vector<int> support;  // ascending
  std::vector<char> selected(cols, 0);
  VecX x = VecX::Zero(cols);
  VecX r = g;
  double best_residual = r.norm();
  int since_best = 0;

  const auto record = [&](double res) {
    out.quadrature.indices.clear();
    std::vector<double> w;
    for (int col : support)
      if (x[col] > 0.0) {
        out.quadrature.indices.push_back(col);
        w.push_back(x[col]);
      }
    out.quadrature.weights =
        Eigen::Map<const VecX>(w.data(), static_cast<int>(w.size()));
    out.relative_residual = res / norm_g;
  };
  record(best_residual);

  while (static_cast<int>(support.size()) < cols) {
    if (r.norm() <= eps * norm_g) {
      out.converged = true;
      return out;
    }
    const VecX c = j.transpose() * r;
    int best = -1;
    double best_c = 0.0;
    for (int i = 0; i < cols; ++i)
      if (!selected[i] && c[i] > best_c) {
        best_c = c[i];
        best = i;
      }
    if (best < 0) return out;  // no admissible descent column
    support.insert(std::lower_bound(support.begin(), support.end(), best), best);
    selected[best] = 1;

    MatX js(j.rows(), support.size());
    for (size_t i = 0; i < support.size(); ++i) js.col(i) = j.col(support[i]);
    const VecX w = nnls(js, g);
    x.setZero();
    for (size_t i = 0; i < support.size(); ++i) x[support[i]] = w[i];
    r = g - js * w;
    ++out.iterations;

    const double res = r.norm();
    if (res < best_residual * (1.0 - 1e-12)) {
      best_residual = res;
      since_best = 0;
      record(res);
    } else if (++since_best >= 3) {
      return out;  // stagnation: carry the best iterate
    }
  }
  if (r.norm() <= eps * norm_g) out.converged = true;
  return out;
}

// Cubature fitting system.  Row q = s * n_modes + i holds the samples of
// h_q(x) = sigma_s(x) : strain(psi_i)(x) at every integration point; the
// right-hand side is the full-quadrature integral of each h_q.
struct EcmSystem {
  MatX j;
  VecX g;
  int n_snapshots = 0;
  int n_modes = 0;
};

// Strain samples of nodal basis columns at all table points (Voigt rows
// with engineering shears).
inline std::vector<MatX> basis_strain_samples(const IntegrationTable& table,
                                              const MatX& modes) {
  std::vector<MatX> out;
  out.reserve(modes.cols());
  for (int i = 0; i < modes.cols(); ++i) {
    MatX e(table.size(), 6);
    for (int k = 0; k < table.size(); ++k)
      e.row(k) =
          strain_to_voigt(strain_at(table.points[k], modes.col(i))).transpose();
    out.push_back(std::move(e));
  }
  return out;
}

inline EcmSystem build_ecm_system(const IntegrationTable& table,
                                  const std::vector<MatX>& snapshot_stresses,
                                  const MatX& primal_modes) {
  if (snapshot_stresses.empty() || primal_modes.cols() == 0)
    throw EcmError("cubature system needs snapshots and modes");
  const std::vector<MatX> strains = basis_strain_samples(table, primal_modes);
  EcmSystem sys;
  sys.n_snapshots = static_cast<int>(snapshot_stresses.size());
  sys.n_modes = static_cast<int>(primal_modes.cols());
  sys.j.resize(sys.n_snapshots * sys.n_modes, table.size());
  for (int s = 0; s < sys.n_snapshots; ++s) {
    const MatX& sigma = snapshot_stresses[s];
    if (sigma.rows() != table.size() || sigma.cols() != 6)
      throw EcmError("stress snapshot has wrong shape");
    for (int i = 0; i < sys.n_modes; ++i)
      sys.j.row(s * sys.n_modes + i) =
          (sigma.array() * strains[i].array()).rowwise().sum().transpose();
  }
  sys.g = sys.j * measures(table);
  return sys;
}

inline double quadrature_residual(const EcmSystem& sys,
                                  const ReducedQuadrature& rq) {
  VecX approx = VecX::Zero(sys.g.size());
  for (int i = 0; i < rq.size(); ++i)
    approx += rq.weights[i] * sys.j.col(rq.indices[i]);
  const double ng = sys.g.norm();
  return ng > 0.0 ? (sys.g - approx).norm() / ng : (sys.g - approx).norm();
}

// Greedy interpolation points: start at the largest magnitude of the first
// mode, then repeatedly take the point where the current interpolant is
// worst for the next mode.  Returns points in selection order.
inline std::vector<int> eim_points(const MatX& modes) {
  if (modes.cols() == 0) throw GappyError("interpolation needs at least one mode");
  std::vector<int> pts;
  for (int j = 0; j < modes.cols(); ++j) {
    VecX r = modes.col(j);
    if (j > 0) {
      MatX b(j, j);
      VecX rhs(j);
      for (int i = 0; i < j; ++i) {
        for (int l = 0; l < j; ++l) b(i, l) = modes(pts[i], l);
        rhs[i] = modes(pts[i], j);
      }
      Eigen::FullPivLU<MatX> lu(b);
      lu.setThreshold(1e-14);
      if (!lu.isInvertible())
        throw GappyError("interpolation system is singular");
      r -= modes.leftCols(j) * lu.solve(rhs);
    }
    int best = 0;
    for (int k = 1; k < r.size(); ++k)
      if (std::abs(r[k]) > std::abs(r[best])) best = k;
    if (r.cwiseAbs().maxCoeff() == 0.0)
      throw GappyError("modes are degenerate for interpolation");
    pts.push_back(best);
  }
  return pts;
}

// Least-squares reconstruction of an integration-point field from samples
// at a gappy point set.
struct GappyModel {
  ReducedBasis basis;
  std::vector<int> points;  // sorted, superset of the extra points given
  MatX b;                   // points x modes sampling matrix
  MatX m;                   // normal matrix b^T b, positive definite

  int size() const { return static_cast<int>(points.size()); }
};

inline GappyModel build_gappy(const ReducedBasis& basis,
                              const std::vector<int>& include_points) {
  GappyModel gm;
  gm.basis = basis;
  std::set<int> pts(include_points.begin(), include_points.end());
  if (basis.size() > 0)
    for (int k : eim_points(basis.modes)) pts.insert(k);
  gm.points.assign(pts.begin(), pts.end());
  gm.b.resize(gm.points.size(), basis.size());
  for (size_t i = 0; i < gm.points.size(); ++i)
    for (int j = 0; j < basis.size(); ++j)
      gm.b(i, j) = basis.modes(gm.points[i], j);
  gm.m = gm.b.transpose() * gm.b;
  if (basis.size() > 0) {
    Eigen::LLT<MatX> llt(gm.m);
    if (llt.info() != Eigen::Success)
      throw GappyError("gappy normal matrix is not positive definite");
  }
  return gm;
}

// Coefficients solving min || b z - samples ||.
inline VecX gappy_coefficients(const GappyModel& gm, const VecX& samples) {
  if (gm.basis.size() == 0) return VecX();
  if (samples.size() != static_cast<int>(gm.points.size()))
    throw GappyError("sample vector does not match the gappy points");
  return Eigen::LLT<MatX>(gm.m).solve(gm.b.transpose() * samples);
}

}  // namespace evprom
