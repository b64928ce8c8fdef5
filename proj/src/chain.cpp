#include "motorprim/chain.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "motorprim/dyn.hpp"

namespace motorprim::chain {

namespace {

Vec6 revolute(const Vec3& axis, const Vec3& point) {
  Vec6 s;
  s << axis, -axis.cross(point);
  return s;
}

// Solid cylinder of radius r along z between z0 and z1.
LinkInertia z_cylinder(double mass, double r, double z0, double z1) {
  double h = z1 - z0;
  double ixx = mass * (3.0 * r * r + h * h) / 12.0;
  LinkInertia li;
  li.mass = mass;
  li.com = Vec3(0.0, 0.0, 0.5 * (z0 + z1));
  li.inertia = Vec3(ixx, ixx, 0.5 * mass * r * r).asDiagonal();
  return li;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string("RobotModel: non-finite ") + what);
}

}  // namespace

RobotModel::RobotModel(std::string name, std::vector<Vec6> screws, std::vector<LinkInertia> links,
                       std::vector<AttachedFrame> frames, Eigen::VectorXd q_min,
                       Eigen::VectorXd q_max, Eigen::VectorXd tau_max, Vec3 gravity,
                       Eigen::VectorXd armature)
    : name_(std::move(name)),
      screws_(std::move(screws)),
      links_(std::move(links)),
      frames_(std::move(frames)),
      q_min_(std::move(q_min)),
      q_max_(std::move(q_max)),
      tau_max_(std::move(tau_max)),
      armature_(std::move(armature)),
      gravity_(gravity) {
  const auto n = static_cast<Eigen::Index>(screws_.size());
  if (n == 0) throw std::invalid_argument("RobotModel: no joints");
  if (armature_.size() == 0) armature_ = Eigen::VectorXd::Zero(n);
  if (armature_.size() != n || !(armature_.array() >= 0.0).all()) {
    throw std::invalid_argument("RobotModel: armature must be one nonnegative value per joint");
  }
  if (static_cast<Eigen::Index>(links_.size()) != n || q_min_.size() != n || q_max_.size() != n ||
      tau_max_.size() != n) {
    throw std::invalid_argument("RobotModel: per-joint arrays disagree in length");
  }
  for (const auto& s : screws_) {
    double wn = s.head<3>().norm();
    double vn = s.tail<3>().norm();
    bool unit = std::abs(wn - 1.0) < 1e-9 || (wn < 1e-12 && std::abs(vn - 1.0) < 1e-9);
    if (!s.allFinite() || !unit) throw std::invalid_argument("RobotModel: screw axis not unit");
  }
  for (const auto& l : links_) {
    if (!(l.mass > 0.0) || !l.com.allFinite() || !l.inertia.allFinite()) {
      throw std::invalid_argument("RobotModel: bad link mass properties");
    }
    if ((l.inertia - l.inertia.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("RobotModel: link inertia not symmetric");
    }
    if (Eigen::SelfAdjointEigenSolver<Mat3>(l.inertia).eigenvalues().minCoeff() < -1e-12) {
      throw std::invalid_argument("RobotModel: link inertia not positive semidefinite");
    }
  }
  for (const auto& f : frames_) {
    if (f.link < 0 || f.link > n) throw std::invalid_argument("RobotModel: frame link out of range");
  }
  check_finite(q_min_, "q_min");
  check_finite(q_max_, "q_max");
  check_finite(tau_max_, "tau_max");
  if ((q_min_.array() > q_max_.array()).any()) {
    throw std::invalid_argument("RobotModel: q_min > q_max");
  }
  if ((tau_max_.array() <= 0.0).any()) throw std::invalid_argument("RobotModel: tau_max <= 0");
  if (!gravity_.allFinite()) throw std::invalid_argument("RobotModel: non-finite gravity");
}

int RobotModel::frame_index(std::string_view name) const {
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    if (frames_[i].name == name) return static_cast<int>(i);
  }
  throw std::out_of_range("RobotModel: no frame named '" + std::string(name) + "'");
}

RobotModel RobotModel::planar_2link() {
  const Vec3 z = Vec3::UnitZ();
  std::vector<Vec6> screws{revolute(z, Vec3::Zero()), revolute(z, Vec3(1.0, 0.0, 0.0))};
  std::vector<LinkInertia> links(2);
  for (int i = 0; i < 2; ++i) {
    links[i].mass = 1.0;
    links[i].com = Vec3(0.5 + i, 0.0, 0.0);
    links[i].inertia = Vec3(1e-4, 1.0 / 12.0, 1.0 / 12.0).asDiagonal();
  }
  AttachedFrame ee{"ee", 2, Pose::Identity()};
  ee.home.translation() = Vec3(2.0, 0.0, 0.0);
  AttachedFrame elbow{"elbow", 1, Pose::Identity()};
  elbow.home.translation() = Vec3(1.0, 0.0, 0.0);
  const double pi = std::numbers::pi;
  return RobotModel("planar2", std::move(screws), std::move(links), {ee, elbow},
                    Eigen::Vector2d(-pi, -pi), Eigen::Vector2d(pi, pi),
                    Eigen::Vector2d(100.0, 100.0), Vec3(0.0, -9.81, 0.0));
}

RobotModel RobotModel::iiwa14_standin() {
  const Vec3 z = Vec3::UnitZ();
  const Vec3 y = Vec3::UnitY();
  const Vec3 o = Vec3::Zero();
  const Vec3 p2(0.0, 0.0, 0.36), p4(0.0, 0.0, 0.78), p6(0.0, 0.0, 1.18);
  std::vector<Vec6> screws{revolute(z, o),  revolute(y, p2), revolute(z, o), revolute(-y, p4),
                           revolute(z, o),  revolute(y, p6), revolute(z, o)};
  const double seg[8] = {0.1575, 0.36, 0.57, 0.78, 0.98, 1.18, 1.261, 1.306};
  const double mass[7] = {4.0, 4.0, 3.0, 2.7, 1.7, 1.8, 0.3};
  std::vector<LinkInertia> links;
  for (int i = 0; i < 7; ++i) links.push_back(z_cylinder(mass[i], 0.06, seg[i], seg[i + 1]));

  AttachedFrame ee{"ee", 7, Pose::Identity()};
  ee.home.translation() = Vec3(0.0, 0.0, 1.306);
  AttachedFrame wrist{"wrist", 5, Pose::Identity()};
  wrist.home.translation() = p6;
  AttachedFrame elbow{"elbow", 3, Pose::Identity()};
  elbow.home.translation() = p4;

  const double d = std::numbers::pi / 180.0;
  Eigen::VectorXd qmax(7), tmax(7);
  qmax << 170, 120, 170, 120, 170, 120, 175;
  qmax *= d;
  tmax << 320, 320, 176, 176, 110, 40, 40;
  return RobotModel("iiwa14_standin", std::move(screws), std::move(links), {ee, wrist, elbow},
                    -qmax, qmax, tmax, Vec3(0.0, 0.0, -9.81), Eigen::VectorXd::Constant(7, 0.1));
}

Pose screw_exp(const Vec6& screw, double theta) {
  Pose T = Pose::Identity();
  Vec3 w = screw.head<3>();
  Vec3 v = screw.tail<3>();
  if (w.squaredNorm() < 1e-24) {
    T.translation() = v * theta;
    return T;
  }
  Mat3 R = geom::exp_so3(Vec3(w * theta)).matrix();
  Mat3 W = geom::skew(w);
  Mat3 G = theta * Mat3::Identity() + (1.0 - std::cos(theta)) * W +
           (theta - std::sin(theta)) * W * W;
  T.linear() = R;
  T.translation() = G * v;
  return T;
}

Vec6 adjoint(const Pose& T, const Vec6& twist) {
  Vec6 out;
  Vec3 w = T.linear() * twist.head<3>();
  out.head<3>() = w;
  out.tail<3>() = T.linear() * twist.tail<3>() + T.translation().cross(w);
  return out;
}

Vec6 lie_bracket(const Vec6& a, const Vec6& b) {
  Vec6 out;
  Vec3 wa = a.head<3>(), va = a.tail<3>(), wb = b.head<3>(), vb = b.tail<3>();
  out.head<3>() = wa.cross(wb);
  out.tail<3>() = wa.cross(vb) - wb.cross(va);
  return out;
}

ChainPose chain_pose(const RobotModel& model, const Eigen::VectorXd& q) {
  const int n = model.dof();
  if (q.size() != n) throw std::invalid_argument("chain_pose: q has wrong size");
  ChainPose cp;
  cp.prefix.reserve(n + 1);
  cp.twist.reserve(n);
  cp.prefix.push_back(Pose::Identity());
  for (int j = 0; j < n; ++j) {
    const Vec6& s = model.screws()[j];
    cp.twist.push_back(adjoint(cp.prefix.back(), s));
    cp.prefix.push_back(cp.prefix.back() * screw_exp(s, q(j)));
  }
  return cp;
}

namespace {

const AttachedFrame& frame_at(const RobotModel& model, int frame) {
  if (frame < 0 || frame >= static_cast<int>(model.frames().size())) {
    throw std::out_of_range("frame index out of range");
  }
  return model.frames()[frame];
}

Vec3 point_of(const ChainPose& cp, const AttachedFrame& f, const Vec3& offset) {
  return cp.prefix[f.link] * (f.home * offset);
}

}  // namespace

Pose fk_frame(const RobotModel& model, const Eigen::VectorXd& q, int frame) {
  const auto& f = frame_at(model, frame);
  return chain_pose(model, q).prefix[f.link] * f.home;
}

Vec3 fk_position(const RobotModel& model, const Eigen::VectorXd& q, const FramePoint& pt) {
  return fk_frame(model, q, pt.frame) * pt.offset;
}

geom::Rotation fk_rotation(const RobotModel& model, const Eigen::VectorXd& q, int frame) {
  return geom::Rotation::project(fk_frame(model, q, frame).linear());
}

Eigen::Matrix3Xd jacobian_position(const RobotModel& model, const Eigen::VectorXd& q,
                                   const FramePoint& pt) {
  const auto& f = frame_at(model, pt.frame);
  ChainPose cp = chain_pose(model, q);
  Vec3 p = point_of(cp, f, pt.offset);
  Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, model.dof());
  for (int j = 0; j < f.link; ++j) {
    const Vec6& V = cp.twist[j];
    J.col(j) = V.tail<3>() + V.head<3>().cross(p);
  }
  return J;
}

Eigen::Matrix3Xd spatial_jacobian_rotation(const RobotModel& model, const Eigen::VectorXd& q,
                                           int frame) {
  const auto& f = frame_at(model, frame);
  ChainPose cp = chain_pose(model, q);
  Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, model.dof());
  for (int j = 0; j < f.link; ++j) J.col(j) = cp.twist[j].head<3>();
  return J;
}

Eigen::Matrix3Xd body_jacobian_rotation(const RobotModel& model, const Eigen::VectorXd& q,
                                        int frame) {
  const auto& f = frame_at(model, frame);
  ChainPose cp = chain_pose(model, q);
  Mat3 Rt = (cp.prefix[f.link] * f.home).linear().transpose();
  Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, model.dof());
  for (int j = 0; j < f.link; ++j) J.col(j) = Rt * cp.twist[j].head<3>();
  return J;
}

Eigen::Matrix3Xd jacobian_position_dot(const RobotModel& model, const Eigen::VectorXd& q,
                                       const Eigen::VectorXd& qd, const FramePoint& pt) {
  if (qd.size() != model.dof()) throw std::invalid_argument("jacobian_position_dot: bad qd");
  const auto& f = frame_at(model, pt.frame);
  ChainPose cp = chain_pose(model, q);
  Vec3 p = point_of(cp, f, pt.offset);
  Vec3 pdot = Vec3::Zero();
  for (int j = 0; j < f.link; ++j) {
    pdot += (cp.twist[j].tail<3>() + cp.twist[j].head<3>().cross(p)) * qd(j);
  }
  Eigen::Matrix3Xd Jd = Eigen::Matrix3Xd::Zero(3, model.dof());
  for (int j = 0; j < f.link; ++j) {
    Vec6 Vd = Vec6::Zero();
    for (int k = 0; k < j; ++k) Vd += lie_bracket(cp.twist[k], cp.twist[j]) * qd(k);
    Vec3 w = cp.twist[j].head<3>();
    Jd.col(j) = Vd.tail<3>() + Vd.head<3>().cross(p) + w.cross(pdot);
  }
  return Jd;
}

Eigen::MatrixXd geometric_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                   const FramePoint& pt) {
  Eigen::MatrixXd J(6, model.dof());
  J.topRows(3) = jacobian_position(model, q, pt);
  J.bottomRows(3) = spatial_jacobian_rotation(model, q, pt.frame);
  return J;
}

Mat6 task_inertia_inverse(const RobotModel& model, const Eigen::VectorXd& q,
                          const FramePoint& pt) {
  Eigen::MatrixXd J = geometric_jacobian(model, q, pt);
  Eigen::LLT<Eigen::MatrixXd> llt(dyn::mass_matrix(model, q));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("task_inertia_inverse: mass matrix not positive definite");
  }
  return J * llt.solve(J.transpose());
}

}  // namespace motorprim::chain
