// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <string>
#include <vector>

#include "evprom/integration.hpp"
#include "evprom/mesh.hpp"
#include "evprom/types.hpp"

namespace evprom {

// Piecewise-linear signal, clamped outside its knots.
struct PiecewiseLinear {
  std::vector<double> time, value;

  PiecewiseLinear() : time{0.0}, value{0.0} {}
  explicit PiecewiseLinear(double constant) : time{0.0}, value{constant} {}
  PiecewiseLinear(std::vector<double> t, std::vector<double> v)
      : time(std::move(t)), value(std::move(v)) {
    validate();
  }

  void validate() const {
    if (time.empty() || time.size() != value.size())
      throw ConfigError("signal needs matching, nonempty knot columns");
    for (size_t i = 1; i < time.size(); ++i)
      if (!(time[i] > time[i - 1]))
        throw ConfigError("signal knots must increase strictly");
  }

  double operator()(double t) const {
    if (t <= time.front()) return value.front();
    if (t >= time.back()) return value.back();
    size_t i = 1;
    while (time[i] < t) ++i;
    const double w = (t - time[i - 1]) / (time[i] - time[i - 1]);
    return (1.0 - w) * value[i - 1] + w * value[i];
  }
};

struct TemperatureKeyframe {
  double time = 0.0;
  VecX nodal;  // one temperature per node
};

// One transient loading: rotation speed around a fixed axis, pressure with
// a fixed spatial shape and a time coefficient, and a nodal temperature
// field interpolated between keyframes.  The mesh carries its own length
// unit (meters per coordinate unit) so the density, given in kg/m^3, feeds
// the centrifugal force consistently; stresses come out in force per
// squared coordinate unit.
struct LoadingProgram {
  std::string label = "loading";
  std::vector<double> times;  // solver grid, strictly increasing
  double density = 0.0;       // kg/m^3
  double length_unit = 1.0;   // meters per mesh coordinate unit
  Vec3 axis_point = Vec3::Zero();
  Vec3 axis_direction = Vec3::UnitZ();
  PiecewiseLinear rotation_speed;  // rad/s
  PiecewiseLinear pressure;        // traction along the outward normal
  VecX pressure_shape;             // per-facet scalar, empty means all zero
  std::vector<TemperatureKeyframe> temperature;  // sorted by time

  void validate(const Mesh& mesh) const {
    if (times.size() < 2) throw ConfigError("loading needs at least two times");
    for (size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw ConfigError("loading times must increase strictly");
    rotation_speed.validate();
    pressure.validate();
    if (pressure_shape.size() != 0 &&
        pressure_shape.size() != static_cast<int>(mesh.facets.size()))
      throw ConfigError("pressure shape must give one value per facet");
    if (density < 0.0) throw ConfigError("density must be nonnegative");
    if (!(length_unit > 0.0)) throw ConfigError("length unit must be positive");
    if (axis_direction.norm() == 0.0)
      throw ConfigError("rotation axis direction must be nonzero");
    for (size_t i = 0; i < temperature.size(); ++i) {
      if (temperature[i].nodal.size() != mesh.node_count())
        throw ConfigError("temperature keyframe size mismatch");
      if (i > 0 && !(temperature[i].time > temperature[i - 1].time))
        throw ConfigError("temperature keyframes must increase strictly");
    }
  }

  VecX temperature_at(double t, int node_count) const {
    if (temperature.empty())
      return VecX::Constant(node_count, 20.0);
    if (t <= temperature.front().time) return temperature.front().nodal;
    if (t >= temperature.back().time) return temperature.back().nodal;
    size_t i = 1;
    while (temperature[i].time < t) ++i;
    const double w = (t - temperature[i - 1].time) /
                     (temperature[i].time - temperature[i - 1].time);
    return (1.0 - w) * temperature[i - 1].nodal + w * temperature[i].nodal;
  }
};

namespace detail {

// Centrifugal force density at a point, in mesh force units.  The factor
// length_unit^4 converts rho omega^2 r from N/m^3 into the unit system of
// the mesh (per-volume force scales with u^3, the lever arm with u).
inline Vec3 centrifugal_force(const LoadingProgram& lp, const Vec3& x,
                              double omega) {
  const Vec3 d = lp.axis_direction.normalized();
  const Vec3 rel = x - lp.axis_point;
  const Vec3 r_perp = rel - rel.dot(d) * d;
  const double u4 = lp.length_unit * lp.length_unit * lp.length_unit *
                    lp.length_unit;
  return lp.density * omega * omega * u4 * r_perp;
}

// Visit traction quadrature points of one facet: callback gets the shape
// values of the facet nodes and the non-normalized area vector times the
// quadrature weight (so traction_coefficient * shape * area_vector is the
// force carried by the sample).
template <class Fn>
void for_facet_quadrature(const Mesh& mesh, const Facet& f, Fn&& fn) {
  if (f.count == 4) {
    const double g = 1.0 / std::sqrt(3.0);
    static const double sx[4] = {-1, 1, 1, -1};
    static const double sy[4] = {-1, -1, 1, 1};
    for (int q = 0; q < 4; ++q) {
      const double s = (q % 2 ? g : -g), t = (q / 2 ? g : -g);
      std::array<double, 4> n;
      Vec3 ts = Vec3::Zero(), tt = Vec3::Zero();
      for (int a = 0; a < 4; ++a) {
        n[a] = 0.25 * (1.0 + sx[a] * s) * (1.0 + sy[a] * t);
        ts += 0.25 * sx[a] * (1.0 + sy[a] * t) * mesh.nodes[f.nodes[a]];
        tt += 0.25 * sy[a] * (1.0 + sx[a] * s) * mesh.nodes[f.nodes[a]];
      }
      fn(n, Vec3(ts.cross(tt)));  // quadrature weight is one
    }
  } else {
    const Vec3 e1 = mesh.nodes[f.nodes[1]] - mesh.nodes[f.nodes[0]];
    const Vec3 e2 = mesh.nodes[f.nodes[2]] - mesh.nodes[f.nodes[0]];
    std::array<double, 4> n = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0};
    fn(n, Vec3(0.5 * e1.cross(e2)));
  }
}

}  // namespace detail

// Assembled external force at time t (inertia plus boundary traction).
inline VecX external_force(const Mesh& mesh, const IntegrationTable& table,
                           const LoadingProgram& lp, double t) {
  VecX f = VecX::Zero(mesh.dof_count());
  const double omega = lp.rotation_speed(t);
  if (lp.density > 0.0 && omega != 0.0) {
    for (const IpData& ip : table.points) {
      const Vec3 b = detail::centrifugal_force(lp, ip.position, omega);
      for (int a = 0; a < ip.nodes_used; ++a)
        f.segment<3>(3 * ip.nodes[a]) += ip.measure * ip.shape[a] * b;
    }
  }
  const double coef = lp.pressure(t);
  if (coef != 0.0 && lp.pressure_shape.size() > 0) {
    for (size_t i = 0; i < mesh.facets.size(); ++i) {
      const double shape = lp.pressure_shape[i];
      if (shape == 0.0) continue;
      const Facet& facet = mesh.facets[i];
      detail::for_facet_quadrature(
          mesh, facet, [&](const std::array<double, 4>& n, const Vec3& area) {
            for (int a = 0; a < facet.count; ++a)
              f.segment<3>(3 * facet.nodes[a]) += coef * shape * n[a] * area;
          });
    }
  }
  return f;
}

// Reduced load vector: the same quadrature sums taken against basis
// columns directly (no full-size assembly).  Modes are nodal fields in the
// columns of a (3 node_count) x n matrix.
inline VecX project_external_force(const Mesh& mesh,
                                   const IntegrationTable& table,
                                   const MatX& modes, const LoadingProgram& lp,
                                   double t) {
  VecX out = VecX::Zero(modes.cols());
  const double omega = lp.rotation_speed(t);
  if (lp.density > 0.0 && omega != 0.0) {
    for (const IpData& ip : table.points) {
      const Vec3 b = detail::centrifugal_force(lp, ip.position, omega);
      for (int i = 0; i < modes.cols(); ++i) {
        Vec3 psi = Vec3::Zero();
        for (int a = 0; a < ip.nodes_used; ++a)
          psi += ip.shape[a] * modes.col(i).segment<3>(3 * ip.nodes[a]);
        out[i] += ip.measure * psi.dot(b);
      }
    }
  }
  const double coef = lp.pressure(t);
  if (coef != 0.0 && lp.pressure_shape.size() > 0) {
    for (size_t fi = 0; fi < mesh.facets.size(); ++fi) {
      const double shape = lp.pressure_shape[fi];
      if (shape == 0.0) continue;
      const Facet& facet = mesh.facets[fi];
      detail::for_facet_quadrature(
          mesh, facet, [&](const std::array<double, 4>& n, const Vec3& area) {
            for (int i = 0; i < modes.cols(); ++i) {
              Vec3 psi = Vec3::Zero();
              for (int a = 0; a < facet.count; ++a)
                psi += n[a] * modes.col(i).segment<3>(3 * facet.nodes[a]);
              out[i] += coef * shape * psi.dot(area);
            }
          });
    }
  }
  return out;
}

}  // namespace evprom
