#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "motorprim/chain.hpp"
#include "motorprim/dyn.hpp"

using namespace motorprim;
using namespace motorprim::chain;
using geom::Mat3;
using geom::Vec3;

namespace {

constexpr double pi = std::numbers::pi;

using testutil::random_q;

RobotModel one_joint_z() {
  Vec6 s;
  s << 0, 0, 1, 0, 0, 0;
  LinkInertia l{1.0, Vec3(0.5, 0, 0), Mat3::Identity() * 0.1};
  AttachedFrame f{"tip", 1, Pose::Identity()};
  f.home.linear() = geom::exp_so3(Vec3(0.2, 0.1, 0)).matrix();
  return RobotModel("one", {s}, {l}, {f}, Eigen::VectorXd::Constant(1, -pi),
                    Eigen::VectorXd::Constant(1, pi), Eigen::VectorXd::Constant(1, 10.0),
                    Vec3(0, 0, -9.81));
}

}  // namespace

TEST_CASE("planar forward kinematics by hand") {
  RobotModel m = RobotModel::planar_2link();
  FramePoint ee{m.frame_index("ee"), Vec3::Zero()};
  CHECK((fk_position(m, Eigen::Vector2d(0, 0), ee) - Vec3(2, 0, 0)).norm() < 1e-15);
  CHECK((fk_position(m, Eigen::Vector2d(pi / 2, 0), ee) - Vec3(0, 2, 0)).norm() < 1e-15);
  for (int k = 0; k < 50; ++k) {
    double a = testutil::uniform(-pi, pi), b = testutil::uniform(-pi, pi);
    Vec3 expect(std::cos(a) + std::cos(a + b), std::sin(a) + std::sin(a + b), 0);
    CHECK((fk_position(m, Eigen::Vector2d(a, b), ee) - expect).norm() < 1e-14);
  }
}

TEST_CASE("off-body point is frame origin plus rotated offset") {
  RobotModel m = RobotModel::iiwa14_standin();
  int ee = m.frame_index("ee");
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd q = random_q(m);
    Vec3 off = testutil::random_vec3(0.3);
    Pose T = fk_frame(m, q, ee);
    Vec3 expect = T.translation() + T.linear() * off;
    CHECK((fk_position(m, q, {ee, off}) - expect).norm() < 1e-15);
    CHECK(fk_rotation(m, q, ee).orthonormality_error() < 1e-12);
  }
  CHECK_THROWS_AS(m.frame_index("nope"), std::out_of_range);
}

TEST_CASE("single joint rotation") {
  RobotModel m = one_joint_z();
  Mat3 home = m.frames()[0].home.linear();
  CHECK((fk_rotation(m, Eigen::VectorXd::Zero(1), 0).matrix() - home).norm() < 1e-15);
  double th = 0.7;
  Mat3 rz = geom::exp_so3(Vec3(0, 0, th)).matrix();
  CHECK((fk_rotation(m, Eigen::VectorXd::Constant(1, th), 0).matrix() - rz * home).norm() < 1e-15);
  Eigen::Matrix3Xd Jb = body_jacobian_rotation(m, Eigen::VectorXd::Constant(1, th), 0);
  CHECK((Jb.col(0) - home.transpose() * Vec3::UnitZ()).norm() < 1e-15);
}

TEST_CASE("position Jacobian matches finite differences") {
  for (const RobotModel& m : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    const double h = 1e-7;
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd q = random_q(m);
      FramePoint pt{0, testutil::random_vec3(0.2)};
      Eigen::Matrix3Xd J = jacobian_position(m, q, pt);
      for (int j = 0; j < m.dof(); ++j) {
        Eigen::VectorXd dq = Eigen::VectorXd::Unit(m.dof(), j) * h;
        Vec3 fd = (fk_position(m, q + dq, pt) - fk_position(m, q - dq, pt)) / (2 * h);
        CHECK((J.col(j) - fd).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("distal joints have zero columns") {
  RobotModel m = RobotModel::iiwa14_standin();
  Eigen::VectorXd q = random_q(m);
  int elbow = m.frame_index("elbow");
  Eigen::Matrix3Xd J = jacobian_position(m, q, {elbow, Vec3(0.1, 0, 0)});
  for (int j = 3; j < 7; ++j) CHECK(J.col(j).norm() == 0.0);
  CHECK(J.col(1).norm() > 0.0);
}

TEST_CASE("straight planar arm has rank-one position Jacobian") {
  RobotModel m = RobotModel::planar_2link();
  Eigen::Matrix3Xd J = jacobian_position(m, Eigen::Vector2d(0.4, 0.0), {0, Vec3::Zero()});
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  CHECK(svd.singularValues()(1) < 1e-12);
  // J^T annihilates the arm axis direction
  Vec3 axis(std::cos(0.4), std::sin(0.4), 0);
  CHECK((J.transpose() * axis).norm() < 1e-14);
}

TEST_CASE("body rotation Jacobian reproduces R^T Rdot") {
  const double h = 1e-6;
  for (const RobotModel& m : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd q = random_q(m);
      Eigen::VectorXd qd = testutil::random_vec(m.dof());
      Mat3 R = fk_rotation(m, q, 0).matrix();
      Mat3 Rd = (fk_rotation(m, q + h * qd, 0).matrix() - fk_rotation(m, q - h * qd, 0).matrix()) /
                (2 * h);
      Vec3 wb = body_jacobian_rotation(m, q, 0) * qd;
      CHECK((geom::skew(wb) - R.transpose() * Rd).cwiseAbs().maxCoeff() < 1e-6);
      Eigen::Matrix3Xd Js = spatial_jacobian_rotation(m, q, 0);
      CHECK((Js - R * body_jacobian_rotation(m, q, 0)).cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("Jacobian time derivative") {
  RobotModel p = RobotModel::planar_2link();
  Eigen::Vector2d q(0.3, 1.1);
  CHECK(jacobian_position_dot(p, q, Eigen::Vector2d::Zero(), {0, Vec3::Zero()}).norm() == 0.0);

  // hand-differentiated planar Jacobian
  Eigen::Vector2d qd(0.7, -1.3);
  double s1 = std::sin(q(0)), c1 = std::cos(q(0));
  double s12 = std::sin(q(0) + q(1)), c12 = std::cos(q(0) + q(1));
  double w1 = qd(0), w12 = qd(0) + qd(1);
  Eigen::Matrix<double, 3, 2> expect;
  expect << -c1 * w1 - c12 * w12, -c12 * w12, -s1 * w1 - s12 * w12, -s12 * w12, 0, 0;
  CHECK((jacobian_position_dot(p, q, qd, {0, Vec3::Zero()}) - expect).norm() < 1e-14);

  // pdd = Jd qd + J qdd against finite differences of a trajectory
  const double h = 1e-4;
  for (const RobotModel& m : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd q0 = random_q(m), v = testutil::random_vec(m.dof()),
                      a = testutil::random_vec(m.dof());
      FramePoint pt{0, testutil::random_vec3(0.2)};
      auto p_at = [&](double t) {
        Eigen::VectorXd qq = q0 + t * v + 0.5 * t * t * a;
        return fk_position(m, qq, pt);
      };
      Vec3 fd = (p_at(h) - 2.0 * p_at(0) + p_at(-h)) / (h * h);
      Vec3 an = jacobian_position_dot(m, q0, v, pt) * v + jacobian_position(m, q0, pt) * a;
      CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-4);
    }
  }
}

TEST_CASE("task inertia inverse") {
  RobotModel m = RobotModel::planar_2link();
  Mat6 L = task_inertia_inverse(m, Eigen::Vector2d(0.3, 0.0), {0, Vec3::Zero()});
  Eigen::JacobiSVD<Mat6> svd(L);
  CHECK(svd.singularValues()(5) < 1e-8);
  RobotModel r = RobotModel::iiwa14_standin();
  for (int k = 0; k < 50; ++k) {
    Mat6 Li = task_inertia_inverse(r, random_q(r), {0, Vec3::Zero()});
    CHECK((Li - Li.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Mat6>(Li).eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("model JSON round trip") {
  for (const RobotModel& m : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    std::string text = model_to_json_text(m);
    RobotModel back = model_from_json_text(text);
    CHECK(model_to_json_text(back) == text);
    Eigen::VectorXd q = random_q(m);
    CHECK((dyn::mass_matrix(m, q) - dyn::mass_matrix(back, q)).norm() == 0.0);
  }
  CHECK_THROWS_AS(model_from_json_text("{\"joints\": 3}"), ConfigError);
  CHECK_THROWS_AS(model_from_json_text("not json"), ConfigError);
}

TEST_CASE("shipped model files match built-ins") {
  std::string dir = MOTORPRIM_DATA_DIR;
  CHECK(model_to_json_text(load_model(dir + "/models/planar2.json")) ==
        model_to_json_text(RobotModel::planar_2link()));
  CHECK(model_to_json_text(load_model(dir + "/models/iiwa14_standin.json")) ==
        model_to_json_text(RobotModel::iiwa14_standin()));
}

TEST_CASE("model validation") {
  Vec6 bad;
  bad << 0, 0, 2, 0, 0, 0;
  LinkInertia l{1.0, Vec3::Zero(), Mat3::Identity()};
  auto one = [](double v) { return Eigen::VectorXd::Constant(1, v); };
  CHECK_THROWS_AS(RobotModel("x", {bad}, {l}, {}, one(-1), one(1), one(1), Vec3::Zero()),
                  std::invalid_argument);
  Vec6 ok;
  ok << 0, 0, 1, 0, 0, 0;
  LinkInertia neg{1.0, Vec3::Zero(), -Mat3::Identity()};
  CHECK_THROWS_AS(RobotModel("x", {ok}, {neg}, {}, one(-1), one(1), one(1), Vec3::Zero()),
                  std::invalid_argument);
  LinkInertia massless{0.0, Vec3::Zero(), Mat3::Identity()};
  CHECK_THROWS_AS(RobotModel("x", {ok}, {massless}, {}, one(-1), one(1), one(1), Vec3::Zero()),
                  std::invalid_argument);
}
