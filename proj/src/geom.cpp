#include "motorprim/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace motorprim::geom {

namespace {

constexpr double kSeriesAngle = 1e-7;
constexpr double kNearPi = 1e-6;

}  // namespace

Mat3 skew(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w(2), w(1),
       w(2), 0.0, -w(0),
       -w(1), w(0), 0.0;
  return m;
}

Vec3 unskew(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  Rotation r(m);
  if (!m.allFinite() || r.orthonormality_error() > tol) {
    throw std::invalid_argument("Rotation: matrix is not in SO(3)");
  }
  return r;
}

Rotation Rotation::project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Rotation(u * v.transpose());
}

double Rotation::orthonormality_error() const {
  double ortho = (m_ * m_.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m_.determinant() - 1.0));
}

UnitQuat::UnitQuat(double eta, const Vec3& eps) : eta_(eta), eps_(eps) {
  double n = std::sqrt(eta * eta + eps.squaredNorm());
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("UnitQuat: zero or non-finite quaternion");
  }
  if (std::abs(n - 1.0) > 1e-12) {
    eta_ /= n;
    eps_ /= n;
  }
}

UnitQuat UnitQuat::operator-() const { return {-eta_, -eps_}; }

UnitQuat UnitQuat::canonical() const { return eta_ < 0.0 ? -*this : *this; }

AngVel to_frame(const AngVel& w, const Rotation& R, Frame target) {
  if (w.frame == target) return w;
  if (target == Frame::Body) return {R.matrix().transpose() * w.w, Frame::Body};
  return {R.matrix() * w.w, Frame::Spatial};
}

Rotation exp_so3(const ExpCoords& ec) {
  const Vec3& e = ec.e;
  double theta = e.norm();
  Mat3 k = skew(e);
  double a, b;  // sin(t)/t, (1 - cos(t))/t^2
  if (theta < kSeriesAngle) {
    a = 1.0 - theta * theta / 6.0;
    b = 0.5 - theta * theta / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / (theta * theta);
  }
  return Rotation::unchecked(Mat3::Identity() + a * k + b * k * k);
}

LogResult log_so3(const Rotation& R) {
  const Mat3& m = R.matrix();
  Vec3 s_axis = unskew(m);  // sin(theta) * axis
  double s = s_axis.norm();
  double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  double theta = std::atan2(s, c);

  LogResult out;
  if (theta < kSeriesAngle) {
    out.coords.e = s_axis * (1.0 + theta * theta / 6.0);
    return out;
  }
  if (std::numbers::pi - theta >= kNearPi) {
    out.coords.e = s_axis * (theta / s);
    return out;
  }

  // (R + R^T)/2 = c I + (1 - c) w w^T; the largest diagonal entry gives the
  // best conditioned column of w w^T.
  Mat3 outer = (0.5 * (m + m.transpose()) - c * Mat3::Identity()) / (1.0 - c);
  Eigen::Index k;
  outer.diagonal().maxCoeff(&k);
  Vec3 axis = outer.col(k) / std::sqrt(std::max(outer(k, k), 0.0));
  axis.normalize();
  double align = axis.dot(s_axis);
  if (std::abs(align) > 1e-14) {
    if (align < 0.0) axis = -axis;
  } else {
    for (int i = 0; i < 3; ++i) {
      if (std::abs(axis(i)) > 1e-12) {
        if (axis(i) < 0.0) axis = -axis;
        break;
      }
    }
  }
  out.coords.e = theta * axis;
  out.quality = LogQuality::NearPi;
  return out;
}

Vec3 Log(const Rotation& R) { return log_so3(R).coords.e; }

Vec3 dlog_so3_dt(const Rotation& R, const Mat3& Rdot) {
  const Mat3& m = R.matrix();
  double s = unskew(m).norm();
  double c = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  double theta = std::atan2(s, c);
  if (std::numbers::pi - theta < 1e-4) {
    throw std::domain_error("dlog_so3_dt: angle too close to pi");
  }
  double a, b;
  if (theta < 1e-3) {
    double t2 = theta * theta;
    a = -1.0 / 12.0 - t2 / 30.0;
    b = 0.5 + t2 / 12.0;
  } else {
    double st = std::sin(theta);
    a = (theta * std::cos(theta) - st) / (4.0 * st * st * st);
    b = theta / (2.0 * st);
  }
  // vee(R - R^T) = 2 unskew(R)
  return 2.0 * a * Rdot.trace() * unskew(m) + 2.0 * b * unskew(Rdot);
}

Mat3 right_jacobian_so3(const Vec3& e) {
  double theta = e.norm();
  double b, c;
  if (theta < 1e-4) {
    double t2 = theta * theta;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    b = (1.0 - std::cos(theta)) / (theta * theta);
    c = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  Mat3 k = skew(e);
  return Mat3::Identity() - b * k + c * k * k;
}

UnitQuat quat_mul(const UnitQuat& a, const UnitQuat& b) {
  double eta = a.eta() * b.eta() - a.eps().dot(b.eps());
  Vec3 eps = a.eta() * b.eps() + b.eta() * a.eps() + a.eps().cross(b.eps());
  return {eta, eps};
}

UnitQuat quat_conj(const UnitQuat& q) { return {q.eta(), -q.eps()}; }

UnitQuat quat_exp(const Vec3& w) {
  double n = w.norm();
  double sinc = n < kSeriesAngle ? 1.0 - n * n / 6.0 : std::sin(n) / n;
  return {std::cos(n), sinc * w};
}

Vec3 quat_log(const UnitQuat& q) {
  double n = q.eps().norm();
  double eta = q.eta();
  if (n < kSeriesAngle) {
    if (eta > 0.0) return q.eps() * (1.0 - n * n / (3.0 * eta * eta)) / eta;
    if (n > 0.0) return std::numbers::pi * q.eps() / n;
    return {std::numbers::pi, 0.0, 0.0};
  }
  return std::atan2(n, eta) * q.eps() / n;
}

Rotation quat_to_rotm(const UnitQuat& q) {
  Mat3 k = skew(q.eps());
  return Rotation::unchecked(Mat3::Identity() + 2.0 * q.eta() * k + 2.0 * k * k);
}

UnitQuat rotm_to_quat(const Rotation& R) {
  const Mat3& m = R.matrix();
  double tr = m.trace();
  double eta;
  Vec3 eps;
  if (tr >= m(0, 0) && tr >= m(1, 1) && tr >= m(2, 2)) {
    eta = 0.5 * std::sqrt(std::max(1.0 + tr, 0.0));
    double f = 0.25 / eta;
    eps = f * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  } else if (m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2)) {
    double x = 0.5 * std::sqrt(std::max(1.0 + m(0, 0) - m(1, 1) - m(2, 2), 0.0));
    double f = 0.25 / x;
    eta = f * (m(2, 1) - m(1, 2));
    eps = Vec3(x, f * (m(0, 1) + m(1, 0)), f * (m(0, 2) + m(2, 0)));
  } else if (m(1, 1) >= m(2, 2)) {
    double y = 0.5 * std::sqrt(std::max(1.0 - m(0, 0) + m(1, 1) - m(2, 2), 0.0));
    double f = 0.25 / y;
    eta = f * (m(0, 2) - m(2, 0));
    eps = Vec3(f * (m(0, 1) + m(1, 0)), y, f * (m(1, 2) + m(2, 1)));
  } else {
    double z = 0.5 * std::sqrt(std::max(1.0 - m(0, 0) - m(1, 1) + m(2, 2), 0.0));
    double f = 0.25 / z;
    eta = f * (m(1, 0) - m(0, 1));
    eps = Vec3(f * (m(0, 2) + m(2, 0)), f * (m(1, 2) + m(2, 1)), z);
  }
  return UnitQuat(eta, eps).canonical();
}

Eigen::Matrix<double, 4, 3> quat_rate_jacobian(const UnitQuat& q) {
  Eigen::Matrix<double, 4, 3> j;
  j.row(0) = -q.eps().transpose();
  j.bottomRows<3>() = quat_E(q);
  return j;
}

Mat3 quat_E(const UnitQuat& q) { return q.eta() * Mat3::Identity() - skew(q.eps()); }

Vec3 dlog_h1_dt(const UnitQuat& q, const Vec4& qdot) {
  double n = q.eps().norm();
  if (n <= 1e-6) {
    throw std::domain_error("dlog_h1_dt: vector part too close to zero");
  }
  double eta = q.eta();
  double angle = std::atan2(n, eta);  // arccos(eta) for unit q
  Vec3 first = ((-n + angle * eta) / (n * n * n)) * q.eps();
  return first * qdot(0) + (angle / n) * qdot.tail<3>();
}

Mat3 costiffness(const Mat3& K) { return 0.5 * K.trace() * Mat3::Identity() - K; }

Mat3 stiffness_of(const Mat3& G) { return G.trace() * Mat3::Identity() - G; }

double geodesic_distance(const Rotation& a, const Rotation& b) {
  return Log(a.transpose() * b).norm();
}

}  // namespace motorprim::geom
