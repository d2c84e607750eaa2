// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace evprom {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Error hierarchy; the command-line driver maps each type to a distinct
// exit code so batch callers can tell failure stages apart.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error { using Error::Error; };
struct MeshError : Error { using Error::Error; };
struct BehaviorError : Error { using Error::Error; };
struct SolverError : Error { using Error::Error; };
struct PodError : Error { using Error::Error; };
struct EcmError : Error { using Error::Error; };
struct GappyError : Error { using Error::Error; };
struct CalibrationError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Voigt component order: 11, 22, 33, 12, 23, 31.
// Strain vectors carry engineering shears (2 eps_ij) so that
// stress_voigt.dot(strain_voigt) equals the tensor double contraction
// and a 6x6 stiffness acts on strain vectors directly.

inline Vec6 strain_to_voigt(const Mat3& e) {
  Vec6 v;
  v << e(0, 0), e(1, 1), e(2, 2),
      e(0, 1) + e(1, 0), e(1, 2) + e(2, 1), e(2, 0) + e(0, 2);
  return v;
}

inline Mat3 strain_from_voigt(const Vec6& v) {
  Mat3 e;
  e << v[0], 0.5 * v[3], 0.5 * v[5],
      0.5 * v[3], v[1], 0.5 * v[4],
      0.5 * v[5], 0.5 * v[4], v[2];
  return e;
}

inline Vec6 stress_to_voigt(const Mat3& s) {
  Vec6 v;
  v << s(0, 0), s(1, 1), s(2, 2),
      0.5 * (s(0, 1) + s(1, 0)), 0.5 * (s(1, 2) + s(2, 1)),
      0.5 * (s(2, 0) + s(0, 2));
  return v;
}

inline Mat3 stress_from_voigt(const Vec6& v) {
  Mat3 s;
  s << v[0], v[3], v[5],
      v[3], v[1], v[4],
      v[5], v[4], v[2];
  return s;
}

inline double ddot(const Mat3& a, const Mat3& b) {
  return (a.array() * b.array()).sum();
}

inline Mat3 deviator(const Mat3& a) {
  return a - (a.trace() / 3.0) * Mat3::Identity();
}

}  // namespace evprom
