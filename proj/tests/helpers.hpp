#pragma once

#include <Eigen/Dense>
#include <random>

#include "motorprim/chain.hpp"
#include "motorprim/geom.hpp"

namespace testutil {

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline Eigen::VectorXd random_vec(int n, double lo = -1.0, double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
  return v;
}

inline motorprim::geom::Vec3 random_vec3(double scale = 1.0) {
  return random_vec(3, -scale, scale);
}

/// Uniform on the unit 3-sphere, mapped to SO(3).
inline motorprim::geom::UnitQuat random_quat() {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d v(n(rng()), n(rng()), n(rng()), n(rng()));
  return motorprim::geom::UnitQuat::from_vec4(v.normalized());
}

inline motorprim::geom::Rotation random_rotation() {
  return motorprim::geom::quat_to_rotm(random_quat());
}

inline motorprim::geom::Mat3 random_spd(double lo = 0.5, double hi = 3.0) {
  Eigen::Matrix3d Q = random_rotation().matrix();
  Eigen::Vector3d d(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi));
  return Q * d.asDiagonal() * Q.transpose();
}

inline Eigen::VectorXd random_q(const motorprim::chain::RobotModel& m) {
  Eigen::VectorXd q(m.dof());
  for (int i = 0; i < m.dof(); ++i) q(i) = uniform(m.q_min()(i), m.q_max()(i));
  return q;
}

}  // namespace testutil
