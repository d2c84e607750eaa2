// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <array>
#include <algorithm>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "evprom/types.hpp"

namespace evprom {

enum class ElementKind { hex8, tet4 };

inline int node_count(ElementKind kind) {
  return kind == ElementKind::hex8 ? 8 : 4;
}

struct Element {
  ElementKind kind = ElementKind::hex8;
  std::array<int, 8> nodes{};  // first node_count(kind) entries are used
  int region = 0;
};

// Boundary facet: quad4 (4 nodes) or tri3 (3 nodes, nodes[3] unused).
// Node ordering fixes the outward normal via the right-hand rule.
struct Facet {
  std::array<int, 4> nodes{};
  int count = 4;
  std::string label;
};

struct Mesh {
  std::vector<Vec3> nodes;
  std::vector<Element> elements;
  std::vector<Facet> facets;
  std::vector<int> dirichlet_nodes;  // fully clamped (all three components)
  std::string dirichlet_label;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int element_count() const { return static_cast<int>(elements.size()); }
  int dof_count() const { return 3 * node_count(); }

  std::vector<int> regions() const {
    std::set<int> r;
    for (const Element& e : elements) r.insert(e.region);
    return {r.begin(), r.end()};
  }
};

inline void validate_mesh(const Mesh& mesh) {
  const int n = mesh.node_count();
  if (n == 0) throw MeshError("mesh has no nodes");
  if (mesh.elements.empty()) throw MeshError("mesh has no elements");
  for (const Element& e : mesh.elements) {
    const int m = node_count(e.kind);
    std::set<int> seen;
    for (int a = 0; a < m; ++a) {
      if (e.nodes[a] < 0 || e.nodes[a] >= n)
        throw MeshError("element node index out of range");
      if (!seen.insert(e.nodes[a]).second)
        throw MeshError("element repeats a node");
    }
  }
  for (const Facet& f : mesh.facets) {
    if (f.count != 3 && f.count != 4) throw MeshError("facet must be tri3 or quad4");
    for (int a = 0; a < f.count; ++a)
      if (f.nodes[a] < 0 || f.nodes[a] >= n)
        throw MeshError("facet node index out of range");
    if (f.label.empty()) throw MeshError("facet without label");
  }
  std::set<int> dir(mesh.dirichlet_nodes.begin(), mesh.dirichlet_nodes.end());
  if (dir.size() != mesh.dirichlet_nodes.size())
    throw MeshError("dirichlet node repeated");
  for (int a : mesh.dirichlet_nodes)
    if (a < 0 || a >= n) throw MeshError("dirichlet node index out of range");
}

inline std::vector<int> facet_nodes(const Mesh& mesh, const std::string& label) {
  std::set<int> out;
  for (const Facet& f : mesh.facets)
    if (f.label == label)
      for (int a = 0; a < f.count; ++a) out.insert(f.nodes[a]);
  return {out.begin(), out.end()};
}

inline void set_dirichlet_face(Mesh& mesh, const std::string& label) {
  mesh.dirichlet_nodes = facet_nodes(mesh, label);
  mesh.dirichlet_label = label;
  if (mesh.dirichlet_nodes.empty())
    throw MeshError("no facet carries label '" + label + "'");
}

// Structured hex box: nx*ny*nz elements over [origin, origin+extent].
// All six faces receive labeled quad facets (xmin .. zmax) with outward
// normals. If region_split_x is set, elements whose centroid lies left of
// the threshold get region 0, the rest region 1.
inline Mesh make_box_mesh(int nx, int ny, int nz, const Vec3& extent,
                          const Vec3& origin = Vec3::Zero(),
                          std::optional<double> region_split_x = std::nullopt) {
  if (nx < 1 || ny < 1 || nz < 1) throw MeshError("box mesh needs nx, ny, nz >= 1");
  if (extent.minCoeff() <= 0.0) throw MeshError("box mesh needs positive extent");
  Mesh mesh;
  const auto node_id = [&](int i, int j, int k) {
    return i + (nx + 1) * (j + (ny + 1) * k);
  };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.nodes.push_back(origin + Vec3(extent.x() * i / nx,
                                           extent.y() * j / ny,
                                           extent.z() * k / nz));
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Element e;
        e.kind = ElementKind::hex8;
        e.nodes = {node_id(i, j, k),         node_id(i + 1, j, k),
                   node_id(i + 1, j + 1, k), node_id(i, j + 1, k),
                   node_id(i, j, k + 1),     node_id(i + 1, j, k + 1),
                   node_id(i + 1, j + 1, k + 1), node_id(i, j + 1, k + 1)};
        if (region_split_x) {
          const double cx = origin.x() + extent.x() * (i + 0.5) / nx;
          e.region = cx < *region_split_x ? 0 : 1;
        }
        mesh.elements.push_back(e);
      }
  const auto quad = [&](const std::string& label, int a, int b, int c, int d) {
    Facet f;
    f.nodes = {a, b, c, d};
    f.count = 4;
    f.label = label;
    mesh.facets.push_back(f);
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      quad("xmin", node_id(0, j, k), node_id(0, j, k + 1),
           node_id(0, j + 1, k + 1), node_id(0, j + 1, k));
      quad("xmax", node_id(nx, j, k), node_id(nx, j + 1, k),
           node_id(nx, j + 1, k + 1), node_id(nx, j, k + 1));
    }
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i) {
      quad("ymin", node_id(i, 0, k), node_id(i + 1, 0, k),
           node_id(i + 1, 0, k + 1), node_id(i, 0, k + 1));
      quad("ymax", node_id(i, ny, k), node_id(i, ny, k + 1),
           node_id(i + 1, ny, k + 1), node_id(i + 1, ny, k));
    }
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      quad("zmin", node_id(i, j, 0), node_id(i, j + 1, 0),
           node_id(i + 1, j + 1, 0), node_id(i + 1, j, 0));
      quad("zmax", node_id(i, j, nz), node_id(i + 1, j, nz),
           node_id(i + 1, j + 1, nz), node_id(i, j + 1, nz));
    }
  validate_mesh(mesh);
  return mesh;
}

// Plain-text mesh format, line oriented:
//   evprom mesh 1
//   nodes <N>          followed by N lines "x y z"
//   elements <M>       followed by M lines "hex8|tet4 <region> <nodes...>"
//   facets <K>         followed by K lines "quad4|tri3 <label> <nodes...>"
//   dirichlet <label> <L>  followed by L whitespace-separated indices
// The facets and dirichlet sections are optional.
inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os.precision(17);
  os << "evprom mesh 1\n";
  os << "nodes " << mesh.node_count() << "\n";
  for (const Vec3& x : mesh.nodes)
    os << x.x() << " " << x.y() << " " << x.z() << "\n";
  os << "elements " << mesh.element_count() << "\n";
  for (const Element& e : mesh.elements) {
    os << (e.kind == ElementKind::hex8 ? "hex8" : "tet4") << " " << e.region;
    for (int a = 0; a < node_count(e.kind); ++a) os << " " << e.nodes[a];
    os << "\n";
  }
  os << "facets " << mesh.facets.size() << "\n";
  for (const Facet& f : mesh.facets) {
    os << (f.count == 4 ? "quad4" : "tri3") << " " << f.label;
    for (int a = 0; a < f.count; ++a) os << " " << f.nodes[a];
    os << "\n";
  }
  if (!mesh.dirichlet_nodes.empty()) {
    os << "dirichlet " << (mesh.dirichlet_label.empty() ? "clamped" : mesh.dirichlet_label)
       << " " << mesh.dirichlet_nodes.size() << "\n";
    for (size_t a = 0; a < mesh.dirichlet_nodes.size(); ++a)
      os << mesh.dirichlet_nodes[a] << (a + 1 == mesh.dirichlet_nodes.size() ? "\n" : " ");
  }
}

inline Mesh read_mesh(std::istream& is) {
  Mesh mesh;
  std::string word;
  if (!(is >> word) || word != "evprom") throw MeshError("not an evprom mesh file");
  int version = 0;
  if (!(is >> word >> version) || word != "mesh" || version != 1)
    throw MeshError("unsupported mesh file version");
  while (is >> word) {
    if (word == "nodes") {
      int n = 0;
      if (!(is >> n) || n < 0) throw MeshError("bad node count");
      mesh.nodes.resize(n);
      for (Vec3& x : mesh.nodes)
        if (!(is >> x.x() >> x.y() >> x.z())) throw MeshError("bad node line");
    } else if (word == "elements") {
      int m = 0;
      if (!(is >> m) || m < 0) throw MeshError("bad element count");
      mesh.elements.resize(m);
      for (Element& e : mesh.elements) {
        std::string kind;
        if (!(is >> kind >> e.region)) throw MeshError("bad element line");
        if (kind == "hex8") e.kind = ElementKind::hex8;
        else if (kind == "tet4") e.kind = ElementKind::tet4;
        else throw MeshError("unknown element kind '" + kind + "'");
        for (int a = 0; a < node_count(e.kind); ++a)
          if (!(is >> e.nodes[a])) throw MeshError("bad element line");
      }
    } else if (word == "facets") {
      int k = 0;
      if (!(is >> k) || k < 0) throw MeshError("bad facet count");
      mesh.facets.resize(k);
      for (Facet& f : mesh.facets) {
        std::string kind;
        if (!(is >> kind >> f.label)) throw MeshError("bad facet line");
        if (kind == "quad4") f.count = 4;
        else if (kind == "tri3") f.count = 3;
        else throw MeshError("unknown facet kind '" + kind + "'");
        for (int a = 0; a < f.count; ++a)
          if (!(is >> f.nodes[a])) throw MeshError("bad facet line");
      }
    } else if (word == "dirichlet") {
      int l = 0;
      if (!(is >> mesh.dirichlet_label >> l) || l < 0)
        throw MeshError("bad dirichlet header");
      mesh.dirichlet_nodes.resize(l);
      for (int& a : mesh.dirichlet_nodes)
        if (!(is >> a)) throw MeshError("bad dirichlet index");
    } else {
      throw MeshError("unknown mesh section '" + word + "'");
    }
  }
  validate_mesh(mesh);
  return mesh;
}

}  // namespace evprom
