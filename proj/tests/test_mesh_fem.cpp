// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "evprom/assembly.hpp"
#include "evprom/integration.hpp"
#include "evprom/mesh.hpp"

using namespace evprom;

namespace {

Mesh single_tet() {
  Mesh mesh;
  mesh.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  Element e;
  e.kind = ElementKind::tet4;
  e.nodes = {0, 1, 2, 3, 0, 0, 0, 0};
  mesh.elements = {e};
  Facet f;
  f.count = 3;
  f.label = "base";
  f.nodes = {0, 2, 1, 0};
  mesh.facets = {f};
  return mesh;
}

VecX affine_field(const Mesh& mesh, const Mat3& a, const Vec3& b) {
  VecX u(mesh.dof_count());
  for (int n = 0; n < mesh.node_count(); ++n)
    u.segment<3>(3 * n) = a * mesh.nodes[n] + b;
  return u;
}

}  // namespace

TEST_CASE("voigt round trips preserve tensors and contractions") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Mat3 s, e;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      s(i, j) = dist(rng);
      e(i, j) = dist(rng);
    }
  s = Mat3(0.5 * (s + s.transpose()));
  e = Mat3(0.5 * (e + e.transpose()));
  REQUIRE((stress_from_voigt(stress_to_voigt(s)) - s).norm() == 0.0);
  REQUIRE((strain_from_voigt(strain_to_voigt(e)) - e).norm() == 0.0);
  REQUIRE_THAT(stress_to_voigt(s).dot(strain_to_voigt(e)),
               Catch::Matchers::WithinAbs(ddot(s, e), 1e-15));
}

TEST_CASE("unit cube hex: eight points, measures sum to one") {
  const Mesh mesh = make_box_mesh(1, 1, 1, Vec3(1, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  REQUIRE(table.size() == 8);
  for (const IpData& ip : table.points) {
    REQUIRE_THAT(ip.measure, Catch::Matchers::WithinAbs(0.125, 1e-15));
    REQUIRE(ip.position.minCoeff() > 0.0);
    REQUIRE(ip.position.maxCoeff() < 1.0);
  }
  REQUIRE_THAT(table.total_measure(), Catch::Matchers::WithinAbs(1.0, 1e-14));
}

TEST_CASE("stretched hex: one element of extent 2x1x1") {
  const Mesh mesh = make_box_mesh(1, 1, 1, Vec3(2, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  REQUIRE(table.size() == 8);
  for (const IpData& ip : table.points)
    REQUIRE_THAT(ip.measure, Catch::Matchers::WithinAbs(0.25, 1e-15));
  REQUIRE_THAT(table.total_measure(), Catch::Matchers::WithinAbs(2.0, 1e-14));
}

TEST_CASE("reference tet: single point rule") {
  const Mesh mesh = single_tet();
  const IntegrationTable table = build_integration_table(mesh);
  REQUIRE(table.size() == 1);
  REQUIRE_THAT(table.points[0].measure,
               Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-16));
  REQUIRE((table.points[0].position - Vec3(0.25, 0.25, 0.25)).norm() < 1e-15);
}

TEST_CASE("inverted element is rejected") {
  Mesh mesh = make_box_mesh(1, 1, 1, Vec3(1, 1, 1));
  std::swap(mesh.elements[0].nodes[0], mesh.elements[0].nodes[1]);
  std::swap(mesh.elements[0].nodes[3], mesh.elements[0].nodes[2]);
  std::swap(mesh.elements[0].nodes[4], mesh.elements[0].nodes[5]);
  std::swap(mesh.elements[0].nodes[7], mesh.elements[0].nodes[6]);
  REQUIRE_THROWS_AS(build_integration_table(mesh), MeshError);
}

TEST_CASE("mesh validation catches bad indices and duplicate nodes") {
  Mesh mesh = make_box_mesh(1, 1, 1, Vec3(1, 1, 1));
  Mesh bad = mesh;
  bad.elements[0].nodes[0] = 99;
  REQUIRE_THROWS_AS(validate_mesh(bad), MeshError);
  bad = mesh;
  bad.elements[0].nodes[0] = bad.elements[0].nodes[1];
  REQUIRE_THROWS_AS(validate_mesh(bad), MeshError);
  bad = mesh;
  bad.dirichlet_nodes = {0, 0};
  REQUIRE_THROWS_AS(validate_mesh(bad), MeshError);
}

TEST_CASE("affine fields: exact interpolation and strain at every point") {
  Mat3 a;
  a << 0.1, 0.02, -0.03, 0.04, -0.05, 0.06, 0.07, 0.08, -0.09;
  const Vec3 b(0.5, -0.25, 0.125);
  const Mat3 sym = 0.5 * (a + a.transpose());
  for (const Mesh& mesh :
       {make_box_mesh(2, 2, 2, Vec3(1.5, 1.0, 2.0), Vec3(-0.5, 0.25, 0.0)),
        single_tet()}) {
    const IntegrationTable table = build_integration_table(mesh);
    const VecX u = affine_field(mesh, a, b);
    for (const IpData& ip : table.points) {
      REQUIRE((value_at(ip, u) - (a * ip.position + b)).norm() < 1e-13);
      REQUIRE((strain_at(ip, u) - sym).norm() < 1e-13);
    }
  }
}

TEST_CASE("l2 products integrate low-order polynomials exactly") {
  const Mesh mesh = make_box_mesh(3, 2, 2, Vec3(1, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  VecX c(mesh.dof_count()), x(mesh.dof_count());
  for (int n = 0; n < mesh.node_count(); ++n) {
    c.segment<3>(3 * n) = Vec3(2.0, -1.0, 0.5);
    x.segment<3>(3 * n) = Vec3(mesh.nodes[n].x(), 0.0, 0.0);
  }
  REQUIRE_THAT(l2_product(table, c, c),
               Catch::Matchers::WithinAbs(5.25, 1e-13));
  REQUIRE_THAT(l2_product(table, x, x),
               Catch::Matchers::WithinAbs(1.0 / 3.0, 1e-13));
  REQUIRE_THAT(l2_product(table, c, x),
               Catch::Matchers::WithinAbs(1.0, 1e-13));
}

TEST_CASE("region split restricts integrals") {
  const Mesh mesh = make_box_mesh(4, 1, 1, Vec3(4, 1, 1), Vec3::Zero(), 2.0);
  REQUIRE(mesh.regions() == std::vector<int>{0, 1});
  for (int e = 0; e < 4; ++e) REQUIRE(mesh.elements[e].region == (e < 2 ? 0 : 1));
  const IntegrationTable table = build_integration_table(mesh);
  VecX c(mesh.dof_count());
  for (int n = 0; n < mesh.node_count(); ++n)
    c.segment<3>(3 * n) = Vec3(1.0, 0.0, 0.0);
  REQUIRE_THAT(l2_product(table, c, c, 0), Catch::Matchers::WithinAbs(2.0, 1e-13));
  REQUIRE_THAT(l2_product(table, c, c, 1), Catch::Matchers::WithinAbs(2.0, 1e-13));
  REQUIRE_THAT(l2_product(table, c, c), Catch::Matchers::WithinAbs(4.0, 1e-13));
  VecX ones = VecX::Ones(table.size());
  REQUIRE_THAT(ip_product(table, ones, ones, 1),
               Catch::Matchers::WithinAbs(2.0, 1e-13));
}

TEST_CASE("constant stress is self-equilibrated") {
  const Mesh mesh = make_box_mesh(2, 2, 2, Vec3(1, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  Mat3 sigma;
  sigma << 3.0, 1.0, -0.5, 1.0, 2.0, 0.25, -0.5, 0.25, -1.0;
  MatX sv(table.size(), 6);
  for (int k = 0; k < table.size(); ++k)
    sv.row(k) = stress_to_voigt(sigma).transpose();
  const VecX f = assemble_internal_force(table, sv, mesh.dof_count());
  // Interior node of the 3x3x3 grid carries index 13.
  REQUIRE(f.segment<3>(3 * 13).norm() < 1e-12);
  Vec3 total = Vec3::Zero();
  for (int n = 0; n < mesh.node_count(); ++n) total += f.segment<3>(3 * n);
  REQUIRE(total.norm() < 1e-12);
}

TEST_CASE("tangent of a linear material reproduces the internal force") {
  const Mesh mesh = make_box_mesh(2, 1, 2, Vec3(2, 1, 1));
  const IntegrationTable table = build_integration_table(mesh);
  Mat6 a = Mat6::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = 1.0e3;
  for (int i = 0; i < 3; ++i) a(i, i) += 2.0e3;
  for (int i = 3; i < 6; ++i) a(i, i) = 1.0e3;
  std::vector<Mat6> moduli(table.size(), a);
  const MatX k_mat = assemble_tangent(table, moduli, mesh.dof_count());
  REQUIRE((k_mat - k_mat.transpose()).norm() < 1e-9);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.01, 0.01);
  VecX u(mesh.dof_count());
  for (int i = 0; i < u.size(); ++i) u[i] = dist(rng);
  MatX sv(table.size(), 6);
  for (int k = 0; k < table.size(); ++k)
    sv.row(k) =
        (a * strain_to_voigt(strain_at(table.points[k], u))).transpose();
  const VecX f = assemble_internal_force(table, sv, mesh.dof_count());
  REQUIRE((k_mat * u - f).norm() < 1e-9 * std::max(1.0, f.norm()));
}

TEST_CASE("dof map excludes clamped nodes and round trips") {
  Mesh mesh = make_box_mesh(2, 1, 1, Vec3(2, 1, 1));
  set_dirichlet_face(mesh, "xmin");
  REQUIRE(mesh.dirichlet_nodes.size() == 4);
  const DofMap map = make_dof_map(mesh);
  REQUIRE(map.free_count() == mesh.dof_count() - 12);
  for (int n : mesh.dirichlet_nodes)
    for (int d = 0; d < 3; ++d) REQUIRE(map.full_to_free[3 * n + d] == -1);
  VecX full = VecX::LinSpaced(mesh.dof_count(), 0.0, 1.0);
  const VecX free = map.restrict_free(full);
  VecX back = VecX::Zero(mesh.dof_count());
  map.add_to_full(free, back);
  for (int i = 0; i < mesh.dof_count(); ++i) {
    if (map.full_to_free[i] >= 0) REQUIRE(back[i] == full[i]);
    else REQUIRE(back[i] == 0.0);
  }
}

TEST_CASE("solve_free solves the eliminated system") {
  Mesh mesh = make_box_mesh(2, 1, 1, Vec3(2, 1, 1));
  set_dirichlet_face(mesh, "xmin");
  const IntegrationTable table = build_integration_table(mesh);
  Mat6 a = Mat6::Identity() * 1.0e3;
  std::vector<Mat6> moduli(table.size(), a);
  const MatX k_mat = assemble_tangent(table, moduli, mesh.dof_count());
  const DofMap map = make_dof_map(mesh);
  VecX rhs = VecX::Zero(mesh.dof_count());
  rhs[3 * 2] = 1.0;  // unit load on a free node
  const VecX x = solve_free(k_mat, rhs, map);
  for (int n : mesh.dirichlet_nodes) REQUIRE(x.segment<3>(3 * n).norm() == 0.0);
  VecX residual = k_mat * x - rhs;
  REQUIRE(map.restrict_free(residual).norm() < 1e-10);
}

TEST_CASE("mesh text format round trips exactly") {
  Mesh mesh = make_box_mesh(2, 2, 1, Vec3(1.5, 2.5, 0.75), Vec3(0.1, -0.2, 0.3), 0.85);
  set_dirichlet_face(mesh, "xmin");
  std::ostringstream out;
  write_mesh(out, mesh);
  std::istringstream in(out.str());
  const Mesh again = read_mesh(in);
  REQUIRE(again.node_count() == mesh.node_count());
  REQUIRE(again.element_count() == mesh.element_count());
  for (int n = 0; n < mesh.node_count(); ++n)
    REQUIRE(again.nodes[n] == mesh.nodes[n]);
  for (int e = 0; e < mesh.element_count(); ++e) {
    REQUIRE(again.elements[e].nodes == mesh.elements[e].nodes);
    REQUIRE(again.elements[e].region == mesh.elements[e].region);
  }
  REQUIRE(again.facets.size() == mesh.facets.size());
  REQUIRE(again.dirichlet_nodes == mesh.dirichlet_nodes);
  REQUIRE(again.dirichlet_label == mesh.dirichlet_label);
  std::ostringstream out2;
  write_mesh(out2, again);
  REQUIRE(out.str() == out2.str());
}

TEST_CASE("mesh reader rejects malformed input") {
  std::istringstream bad1("not a mesh");
  REQUIRE_THROWS_AS(read_mesh(bad1), MeshError);
  std::istringstream bad2("evprom mesh 1\nnodes 1\n0 0 0\nelements 1\nhex9 0 0 0 0 0 0 0 0 0\n");
  REQUIRE_THROWS_AS(read_mesh(bad2), MeshError);
  std::istringstream bad3("evprom mesh 1\nnodes 1\n0 0 0\nwhat 3\n");
  REQUIRE_THROWS_AS(read_mesh(bad3), MeshError);
}
