#pragma once

#include <Eigen/Dense>

namespace motorprim::geom {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

/// Cross-product matrix: skew(w) * v == w.cross(v).
Mat3 skew(const Vec3& w);
/// Inverse of skew() on the skew-symmetric part of m.
Vec3 unskew(const Mat3& m);

/// An element of SO(3). Construction through from_matrix() validates
/// orthonormality and det = +1 to within 1e-9.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m, double tol = 1e-9);
  /// Skips validation. For results of closed-form maps that land in SO(3)
  /// by construction.
  static Rotation unchecked(const Mat3& m) { return Rotation(m); }
  /// Nearest rotation in the Frobenius sense (polar projection).
  static Rotation project(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Max deviation of m m^T from identity, and |det - 1|.
  double orthonormality_error() const;

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Unit quaternion (eta, eps). Results of the algebra below are renormalized
/// when the norm drifts from 1 by more than 1e-12.
class UnitQuat {
 public:
  UnitQuat() : eta_(1.0), eps_(Vec3::Zero()) {}
  /// Normalizes the input; throws std::invalid_argument on a zero quaternion.
  UnitQuat(double eta, const Vec3& eps);

  static UnitQuat identity() { return {}; }
  static UnitQuat from_vec4(const Vec4& v) { return {v(0), v.tail<3>()}; }

  double eta() const { return eta_; }
  const Vec3& eps() const { return eps_; }
  Vec4 coeffs() const { return {eta_, eps_(0), eps_(1), eps_(2)}; }
  UnitQuat operator-() const;
  /// Representative with eta >= 0.
  UnitQuat canonical() const;

 private:
  double eta_;
  Vec3 eps_;
};

/// Exponential coordinates (axis times angle).
struct ExpCoords {
  Vec3 e = Vec3::Zero();
  double angle() const { return e.norm(); }
};

enum class Frame { Spatial, Body };

struct AngVel {
  Vec3 w = Vec3::Zero();
  Frame frame = Frame::Spatial;
};

/// Spatial <-> body conversion for the angular velocity of a frame with
/// orientation R.
AngVel to_frame(const AngVel& w, const Rotation& R, Frame target);

enum class LogQuality {
  Regular,
  NearPi,  ///< within 1e-6 of pi; axis chosen from the symmetric part
};

struct LogResult {
  ExpCoords coords;
  LogQuality quality = LogQuality::Regular;
};

Rotation exp_so3(const ExpCoords& e);
inline Rotation exp_so3(const Vec3& e) { return exp_so3(ExpCoords{e}); }
LogResult log_so3(const Rotation& R);
/// Shorthand for log_so3(R).coords.e.
Vec3 Log(const Rotation& R);

/// Rate of the SO(3) exponential coordinates along R(t). Throws
/// std::domain_error when the angle is within 1e-4 of an odd multiple of pi.
Vec3 dlog_so3_dt(const Rotation& R, const Mat3& Rdot);

/// Right Jacobian of SO(3): body angular velocity of Exp(e(t)) is
/// right_jacobian_so3(e) * de/dt.
Mat3 right_jacobian_so3(const Vec3& e);

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b);
UnitQuat quat_conj(const UnitQuat& q);
/// (cos|w|, sin|w| w/|w|). Note the angle convention: the rotation angle of
/// quat_exp(w) is 2|w|.
UnitQuat quat_exp(const Vec3& w);
/// arccos(eta) eps/|eps|.
Vec3 quat_log(const UnitQuat& q);
Rotation quat_to_rotm(const UnitQuat& q);
/// Shepperd's method; returns the eta >= 0 representative.
UnitQuat rotm_to_quat(const Rotation& R);

/// J_H = [-eps^T; eta I - [eps]]  (4x3), d/dt (eta, eps) = 1/2 J_H w_s.
Eigen::Matrix<double, 4, 3> quat_rate_jacobian(const UnitQuat& q);
/// Lower 3x3 block of quat_rate_jacobian().
Mat3 quat_E(const UnitQuat& q);

/// Rate of quat_log along q(t). Throws std::domain_error for |eps| <= 1e-6.
Vec3 dlog_h1_dt(const UnitQuat& q, const Vec4& qdot);

/// G = 1/2 tr(K) I - K.
Mat3 costiffness(const Mat3& K);
/// K = tr(G) I - G.
Mat3 stiffness_of(const Mat3& G);

/// Geodesic angle between two rotations.
double geodesic_distance(const Rotation& a, const Rotation& b);

}  // namespace motorprim::geom
