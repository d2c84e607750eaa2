// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "evprom/mesh.hpp"
#include "evprom/types.hpp"

namespace evprom {

// One quadrature point of the global integration table.  Shape values and
// physical gradients are cached so every downstream operator (strain,
// interpolation, assembly) works from the same data.
struct IpData {
  int element = 0;
  int local_index = 0;
  int region = 0;
  Vec3 position = Vec3::Zero();
  double measure = 0.0;  // quadrature weight times |det J|
  int nodes_used = 0;
  std::array<int, 8> nodes{};
  std::array<double, 8> shape{};
  std::array<Vec3, 8> gradient{};
};

struct IntegrationTable {
  std::vector<IpData> points;
  std::vector<int> element_first;  // element -> index of its first point

  int size() const { return static_cast<int>(points.size()); }
  double total_measure() const {
    double v = 0.0;
    for (const IpData& p : points) v += p.measure;
    return v;
  }
};

namespace detail {

inline void hex8_shape(const Vec3& xi, std::array<double, 8>& n,
                       std::array<Vec3, 8>& dn) {
  static const double sx[8] = {-1, 1, 1, -1, -1, 1, 1, -1};
  static const double sy[8] = {-1, -1, 1, 1, -1, -1, 1, 1};
  static const double sz[8] = {-1, -1, -1, -1, 1, 1, 1, 1};
  for (int a = 0; a < 8; ++a) {
    const double px = 1.0 + sx[a] * xi.x();
    const double py = 1.0 + sy[a] * xi.y();
    const double pz = 1.0 + sz[a] * xi.z();
    n[a] = 0.125 * px * py * pz;
    dn[a] = 0.125 * Vec3(sx[a] * py * pz, sy[a] * px * pz, sz[a] * px * py);
  }
}

inline void tet4_shape(const Vec3& xi, std::array<double, 8>& n,
                       std::array<Vec3, 8>& dn) {
  n = {1.0 - xi.x() - xi.y() - xi.z(), xi.x(), xi.y(), xi.z(), 0, 0, 0, 0};
  dn[0] = Vec3(-1, -1, -1);
  dn[1] = Vec3(1, 0, 0);
  dn[2] = Vec3(0, 1, 0);
  dn[3] = Vec3(0, 0, 1);
}

}  // namespace detail

inline IntegrationTable build_integration_table(const Mesh& mesh) {
  validate_mesh(mesh);
  IntegrationTable table;
  table.element_first.reserve(mesh.elements.size());
  const double g = 1.0 / std::sqrt(3.0);
  for (int e = 0; e < mesh.element_count(); ++e) {
    table.element_first.push_back(table.size());
    const Element& el = mesh.elements[e];
    std::vector<std::pair<Vec3, double>> rule;  // reference point, weight
    if (el.kind == ElementKind::hex8) {
      for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
          for (int i = 0; i < 2; ++i)
            rule.push_back({Vec3(i ? g : -g, j ? g : -g, k ? g : -g), 1.0});
    } else {
      rule.push_back({Vec3(0.25, 0.25, 0.25), 1.0 / 6.0});
    }
    const int m = node_count(el.kind);
    for (int q = 0; q < static_cast<int>(rule.size()); ++q) {
      IpData ip;
      ip.element = e;
      ip.local_index = q;
      ip.region = el.region;
      ip.nodes_used = m;
      std::array<double, 8> n{};
      std::array<Vec3, 8> dn{};
      if (el.kind == ElementKind::hex8) detail::hex8_shape(rule[q].first, n, dn);
      else detail::tet4_shape(rule[q].first, n, dn);
      Mat3 jac = Mat3::Zero();  // d x / d xi
      for (int a = 0; a < m; ++a) {
        ip.nodes[a] = el.nodes[a];
        jac += mesh.nodes[el.nodes[a]] * dn[a].transpose();
      }
      const double det = jac.determinant();
      if (!(det > 0.0))
        throw MeshError("non-positive jacobian in element " + std::to_string(e));
      const Mat3 jinv = jac.inverse();
      ip.measure = rule[q].second * det;
      for (int a = 0; a < m; ++a) {
        ip.shape[a] = n[a];
        ip.gradient[a] = jinv.transpose() * dn[a];
        ip.position += n[a] * mesh.nodes[el.nodes[a]];
      }
      table.points.push_back(ip);
    }
  }
  return table;
}

// Nodal vector fields are flat arrays of size 3 * node_count, node major:
// (u0x, u0y, u0z, u1x, ...).  Nodal scalar fields have size node_count.

inline Vec3 value_at(const IpData& ip, const VecX& nodal_vector) {
  Vec3 v = Vec3::Zero();
  for (int a = 0; a < ip.nodes_used; ++a)
    v += ip.shape[a] * nodal_vector.segment<3>(3 * ip.nodes[a]);
  return v;
}

inline double scalar_at(const IpData& ip, const VecX& nodal_scalar) {
  double v = 0.0;
  for (int a = 0; a < ip.nodes_used; ++a)
    v += ip.shape[a] * nodal_scalar[ip.nodes[a]];
  return v;
}

inline Mat3 strain_at(const IpData& ip, const VecX& nodal_vector) {
  Mat3 grad = Mat3::Zero();
  for (int a = 0; a < ip.nodes_used; ++a)
    grad += nodal_vector.segment<3>(3 * ip.nodes[a]) * ip.gradient[a].transpose();
  return 0.5 * (grad + grad.transpose());
}

// L2 products of nodal vector fields over the mesh or one region.
inline double l2_product(const IntegrationTable& table, const VecX& a,
                         const VecX& b, int region = -1) {
  double v = 0.0;
  for (const IpData& ip : table.points) {
    if (region >= 0 && ip.region != region) continue;
    v += ip.measure * value_at(ip, a).dot(value_at(ip, b));
  }
  return v;
}

inline double l2_norm(const IntegrationTable& table, const VecX& a,
                      int region = -1) {
  return std::sqrt(std::max(0.0, l2_product(table, a, a, region)));
}

// Weighted products of fields sampled at the integration points
// (size == table.size()).
inline double ip_product(const IntegrationTable& table, const VecX& a,
                         const VecX& b, int region = -1) {
  double v = 0.0;
  for (int k = 0; k < table.size(); ++k) {
    const IpData& ip = table.points[k];
    if (region >= 0 && ip.region != region) continue;
    v += ip.measure * a[k] * b[k];
  }
  return v;
}

inline double ip_norm(const IntegrationTable& table, const VecX& a,
                      int region = -1) {
  return std::sqrt(std::max(0.0, ip_product(table, a, a, region)));
}

inline VecX measures(const IntegrationTable& table) {
  VecX nu(table.size());
  for (int k = 0; k < table.size(); ++k) nu[k] = table.points[k].measure;
  return nu;
}

}  // namespace evprom
