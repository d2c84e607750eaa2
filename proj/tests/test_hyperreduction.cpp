// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "evprom/ecm.hpp"

using namespace evprom;

namespace {

MatX random_matrix(std::mt19937& rng, int rows, int cols, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  MatX a(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) a(i, j) = dist(rng);
  return a;
}

// Exhaustive oracle: best nonnegative solution over every column subset.
std::pair<VecX, double> enumerate_nnls(const MatX& a, const VecX& b) {
  const int n = static_cast<int>(a.cols());
  VecX best_x = VecX::Zero(n);
  double best_res = b.norm();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> cols;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) cols.push_back(i);
    MatX as(a.rows(), cols.size());
    for (size_t i = 0; i < cols.size(); ++i) as.col(i) = a.col(cols[i]);
    const VecX z = as.colPivHouseholderQr().solve(b);
    if (z.minCoeff() < -1e-12) continue;
    const double res = (as * z - b).norm();
    if (res < best_res - 1e-12) {
      best_res = res;
      best_x.setZero();
      for (size_t i = 0; i < cols.size(); ++i) best_x[cols[i]] = z[i];
    }
  }
  return {best_x, best_res};
}

}  // namespace

TEST_CASE("nnls matches exhaustive subset enumeration") {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 5; ++trial) {
    const MatX a = random_matrix(rng, 10, 4, -1.0, 1.0);
    VecX b(10);
    for (int i = 0; i < 10; ++i) b[i] = random_matrix(rng, 1, 1, -2.0, 2.0)(0, 0);
    const VecX x = nnls(a, b);
    const auto [x_ref, res_ref] = enumerate_nnls(a, b);
    REQUIRE(x.minCoeff() >= 0.0);
    REQUIRE_THAT((a * x - b).norm(), Catch::Matchers::WithinAbs(res_ref, 1e-10));
    REQUIRE((x - x_ref).norm() < 1e-8);
  }
}

TEST_CASE("nnls satisfies the optimality conditions") {
  std::mt19937 rng(47);
  const MatX a = random_matrix(rng, 20, 8, -1.0, 1.0);
  const VecX b = random_matrix(rng, 20, 1, -1.0, 1.0);
  const VecX x = nnls(a, b);
  const VecX grad = a.transpose() * (b - a * x);
  for (int i = 0; i < 8; ++i) {
    if (x[i] > 0.0) REQUIRE(std::abs(grad[i]) < 1e-8 * (1.0 + b.norm()));
    else REQUIRE(grad[i] <= 1e-10 * b.norm());
  }
}

TEST_CASE("nnls recovers an exactly representable nonnegative solution") {
  std::mt19937 rng(53);
  const MatX a = random_matrix(rng, 20, 8, -1.0, 1.0);
  VecX x_true = VecX::Zero(8);
  x_true[1] = 0.7;
  x_true[4] = 1.3;
  x_true[6] = 0.2;
  const VecX b = a * x_true;
  const VecX x = nnls(a, b);
  REQUIRE((x - x_true).norm() < 1e-8);
}

TEST_CASE("matching pursuit reaches the tolerance on representable data") {
  std::mt19937 rng(59);
  const MatX j = random_matrix(rng, 15, 30, -1.0, 1.0);
  VecX w_true = VecX::Zero(30);
  w_true[2] = 0.5;
  w_true[9] = 1.1;
  w_true[17] = 0.3;
  w_true[21] = 0.9;
  w_true[28] = 0.1;
  const VecX g = j * w_true;
  const NnompResult r = nnomp(j, g, 1e-10);
  REQUIRE(r.converged);
  REQUIRE(r.relative_residual <= 1e-10);
  REQUIRE(r.quadrature.size() <= 15);
  REQUIRE(r.quadrature.weights.minCoeff() > 0.0);
  REQUIRE(std::is_sorted(r.quadrature.indices.begin(),
                         r.quadrature.indices.end()));
  VecX recon = VecX::Zero(15);
  for (int i = 0; i < r.quadrature.size(); ++i)
    recon += r.quadrature.weights[i] * j.col(r.quadrature.indices[i]);
  REQUIRE((recon - g).norm() <= 1e-10 * g.norm());

  const NnompResult again = nnomp(j, g, 1e-10);
  REQUIRE(again.quadrature.indices == r.quadrature.indices);
  REQUIRE(again.quadrature.weights == r.quadrature.weights);
}

TEST_CASE("matching pursuit handles a zero right-hand side") {
  const MatX j = MatX::Ones(3, 5);
  const NnompResult r = nnomp(j, VecX::Zero(3), 1e-8);
  REQUIRE(r.converged);
  REQUIRE(r.quadrature.size() == 0);
}

TEST_CASE("matching pursuit reports failure outside the cone") {
  MatX j = MatX::Zero(4, 4);
  for (int i = 0; i < 4; ++i) j(i, i) = 1.0;
  const VecX g = VecX::Constant(4, -1.0);
  const NnompResult r = nnomp(j, g, 1e-8);
  REQUIRE_FALSE(r.converged);
  REQUIRE(r.quadrature.size() == 0);
  REQUIRE_THAT(r.relative_residual, Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("matching pursuit stagnates on duplicated columns") {
  const MatX j = MatX::Ones(3, 5);
  VecX g(3);
  g << 1.0, 2.0, 3.0;
  const NnompResult r = nnomp(j, g, 1e-10);
  REQUIRE_FALSE(r.converged);
  REQUIRE(r.quadrature.size() == 1);
  REQUIRE(r.quadrature.indices[0] == 0);  // tie broken to the lowest index
  REQUIRE_THAT(r.relative_residual,
               Catch::Matchers::WithinRel(std::sqrt(2.0) / g.norm(), 1e-12));
}

TEST_CASE("cubature system rows follow snapshot-major ordering") {
  const Mesh mesh = make_box_mesh(1, 1, 1, Vec3(1, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  // Two nodal modes with constant strain: axial and simple shear.
  MatX modes = MatX::Zero(mesh.dof_count(), 2);
  for (int n = 0; n < mesh.node_count(); ++n) {
    modes(3 * n + 0, 0) = mesh.nodes[n].x();
    modes(3 * n + 1, 1) = mesh.nodes[n].x();
  }
  // Two constant stress snapshots: pure axial and pure shear.
  MatX s_axial = MatX::Zero(table.size(), 6), s_shear = s_axial;
  s_axial.col(0).setOnes();
  s_shear.col(3).setOnes();
  const EcmSystem sys = build_ecm_system(table, {s_axial, s_shear}, modes);
  REQUIRE(sys.j.rows() == 4);
  REQUIRE(sys.j.cols() == 8);
  REQUIRE((sys.j.row(0) - Eigen::RowVectorXd::Ones(8)).norm() < 1e-13);
  REQUIRE(sys.j.row(1).norm() < 1e-13);
  REQUIRE(sys.j.row(2).norm() < 1e-13);
  REQUIRE((sys.j.row(3) - Eigen::RowVectorXd::Ones(8)).norm() < 1e-13);
  REQUIRE((sys.g - sys.j * measures(table)).norm() == 0.0);
  VecX expected(4);
  expected << 1.0, 0.0, 0.0, 1.0;
  REQUIRE((sys.g - expected).norm() < 1e-13);

  // All columns carry the same information, so one point suffices.
  const NnompResult r = nnomp(sys.j, sys.g, 1e-8);
  REQUIRE(r.converged);
  REQUIRE(r.quadrature.size() == 1);
  REQUIRE_THAT(r.quadrature.weights[0], Catch::Matchers::WithinRel(1.0, 1e-12));
  REQUIRE(quadrature_residual(sys, r.quadrature) <= 1e-12);
}

TEST_CASE("interpolation points start at the largest first-mode entry") {
  std::mt19937 rng(61);
  MatX modes = random_matrix(rng, 25, 4, -1.0, 1.0);
  const Eigen::HouseholderQR<MatX> qr(modes);
  modes = qr.householderQ() * MatX::Identity(25, 4);
  const std::vector<int> pts = eim_points(modes);
  REQUIRE(pts.size() == 4);
  int expect = 0;
  for (int k = 1; k < 25; ++k)
    if (std::abs(modes(k, 0)) > std::abs(modes(expect, 0))) expect = k;
  REQUIRE(pts[0] == expect);
  std::set<int> unique(pts.begin(), pts.end());
  REQUIRE(unique.size() == 4);
  // Interpolating the modes at their own points is exact.
  MatX b(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int l = 0; l < 4; ++l) b(i, l) = modes(pts[i], l);
  REQUIRE(std::abs(b.fullPivLu().determinant()) > 1e-12);
}

TEST_CASE("degenerate modes are rejected for interpolation") {
  MatX modes(6, 2);
  modes.col(0) << 1, 2, 3, 0.5, -1, 0.25;
  modes.col(1) = modes.col(0);
  REQUIRE_THROWS_AS(eim_points(modes), GappyError);
}

TEST_CASE("gappy reconstruction is exact on basis combinations") {
  std::mt19937 rng(67);
  MatX raw = random_matrix(rng, 30, 4, -1.0, 1.0);
  const Eigen::HouseholderQR<MatX> qr(raw);
  ReducedBasis basis;
  basis.modes = qr.householderQ() * MatX::Identity(30, 4);
  basis.eigenvalues = VecX::Ones(4);
  basis.total_energy = 4.0;

  const std::vector<int> quad = {0, 5, 7};
  const GappyModel gm = build_gappy(basis, quad);
  REQUIRE(gm.size() >= 4);
  REQUIRE(gm.size() <= 4 + 3);
  for (int q : quad)
    REQUIRE(std::find(gm.points.begin(), gm.points.end(), q) != gm.points.end());
  REQUIRE(std::is_sorted(gm.points.begin(), gm.points.end()));

  VecX z_true(4);
  z_true << 0.3, -1.2, 0.05, 2.0;
  const VecX field = basis.modes * z_true;
  VecX samples(gm.size());
  for (int i = 0; i < gm.size(); ++i) samples[i] = field[gm.points[i]];
  const VecX z = gappy_coefficients(gm, samples);
  REQUIRE((z - z_true).norm() < 1e-10);
  REQUIRE((basis.modes * z - field).norm() < 1e-10);
}

TEST_CASE("gappy model with empty basis yields empty coefficients") {
  ReducedBasis basis;
  basis.modes.resize(10, 0);
  basis.degenerate = true;
  const GappyModel gm = build_gappy(basis, {1, 2});
  REQUIRE(gappy_coefficients(gm, VecX::Zero(gm.size())).size() == 0);
}
