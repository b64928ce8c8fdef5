#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "helpers.hpp"
#include "motorprim/dyn.hpp"
#include "motorprim/eda.hpp"

using namespace motorprim;
using namespace motorprim::eda;
using chain::RobotModel;
using geom::Vec3;
using testutil::random_q;

namespace {

constexpr double pi = std::numbers::pi;

Eigen::MatrixXd random_spd_n(int n, double lo = 0.5, double hi = 5.0) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(testutil::random_vec(n * n).reshaped(n, n)));
  Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = testutil::uniform(lo, hi);
  return Q * d.asDiagonal() * Q.transpose();
}

Eigen::VectorXd fd_gradient(const Module& m, const RobotModel& model, const Eigen::VectorXd& q,
                            double t, double h = 1e-6) {
  Eigen::VectorXd g(q.size());
  for (Eigen::Index j = 0; j < q.size(); ++j) {
    Eigen::VectorXd qp = q, qm = q;
    qp(j) += h;
    qm(j) -= h;
    g(j) = (module_potential(m, model, qp, t) - module_potential(m, model, qm, t)) / (2 * h);
  }
  return g;
}

VirtualTrajectory hold_vec(VtSpace sp, const Eigen::VectorXd& v) {
  return VirtualTrajectory::hold(sp, v);
}

std::vector<Module> random_modules(const RobotModel& model) {
  const int n = model.dof();
  const int nf = static_cast<int>(model.frames().size());
  int frame = static_cast<int>(testutil::uniform(0, nf - 1e-9));
  std::vector<Module> mods;
  mods.push_back(JointModule{random_spd_n(n), random_spd_n(n),
                             hold_vec(VtSpace::Joint, random_q(model))});
  mods.push_back(TaskPosModule{testutil::random_spd(), testutil::random_spd(),
                               {frame, testutil::random_vec3(0.2)},
                               hold_vec(VtSpace::TaskPosition, testutil::random_vec3(1.0))});
  Eigen::Matrix3d Kr = testutil::random_spd();
  mods.push_back(RotCostiffModule{geom::costiffness(Kr), testutil::random_spd(), frame,
                                  VirtualTrajectory::hold_rotation(testutil::random_rotation())});
  mods.push_back(RotQuatModule{Kr, testutil::random_spd(), frame,
                               VirtualTrajectory::hold_rotation(testutil::random_rotation())});
  double k = testutil::uniform(1.0, 20.0);
  mods.push_back(RotLogModule{k * Eigen::Matrix3d::Identity(), testutil::random_spd(), frame,
                              VirtualTrajectory::hold_rotation(testutil::random_rotation())});
  for (Module& m : mods) validate(m, model);
  return mods;
}

}  // namespace

TEST_CASE("min-jerk profile") {
  Eigen::Vector2d a(0.1, -0.3), b(1.1, 0.7);
  VtSample s = minjerk(a, b, 1.0, 2.0, 0.5);
  CHECK(s.value == a);
  CHECK(s.rate.norm() == 0.0);
  CHECK(minjerk(a, b, 1.0, 2.0, 5.0).value == b);
  CHECK(minjerk(a, b, 1.0, 2.0, 3.0).rate.norm() == 0.0);
  VtSample mid = minjerk(a, b, 1.0, 2.0, 2.0);
  CHECK((mid.value - 0.5 * (a + b)).norm() < 1e-15);
  CHECK((mid.rate - 1.875 * (b - a) / 2.0).norm() < 1e-14);
  // rate is the derivative of value
  for (double t = 1.05; t < 3.0; t += 0.1) {
    Eigen::VectorXd fd = (minjerk(a, b, 1.0, 2.0, t + 1e-6).value -
                          minjerk(a, b, 1.0, 2.0, t - 1e-6).value) / 2e-6;
    CHECK((fd - minjerk(a, b, 1.0, 2.0, t).rate).norm() < 1e-8);
    CHECK(minjerk(a, b, 1.0, 2.0, t).rate.norm() <= 1.875 * (b - a).norm() / 2.0 + 1e-12);
  }
  CHECK_THROWS(minjerk(a, b, 0.0, 0.0, 0.0));
}

TEST_CASE("virtual trajectory superposition") {
  Eigen::Vector3d c(0.1, 0.2, 0.3);
  VirtualTrajectory h = VirtualTrajectory::hold(VtSpace::TaskPosition, c);
  CHECK(h.eval(7.0).value == c);
  CHECK(h.eval(7.0).rate.norm() == 0.0);

  MinJerk mj{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0.3, -0.1, 0.2), 0.5, 1.5};
  Oscillation osc{Eigen::Vector3d(0.1, 0, 0), Eigen::Vector3d(0.05, 0.02, 0), 0.8, 0.3};
  VirtualTrajectory sum(VtSpace::TaskPosition, 3, {mj, osc});
  VirtualTrajectory a(VtSpace::TaskPosition, 3, {mj}), b(VtSpace::TaskPosition, 3, {osc});
  for (double t = 0.0; t < 3.0; t += 0.07) {
    CHECK(sum.eval(t).value == a.eval(t).value + b.eval(t).value);
    CHECK(sum.eval(t).rate == a.eval(t).rate + b.eval(t).rate);
  }
  MinJerk back{mj.goal, mj.start, 0.5, 1.5};
  MinJerk fwd{Eigen::Vector3d::Zero(), mj.goal - mj.start, 0.5, 1.5};
  VirtualTrajectory cancel(VtSpace::TaskPosition, 3, {fwd, back});
  for (double t = 0.0; t < 3.0; t += 0.1) {
    CHECK((cancel.eval(t).value - mj.goal).norm() < 1e-15);
    CHECK(cancel.eval(t).rate.norm() < 1e-15);
  }
  CHECK_THROWS(VirtualTrajectory(VtSpace::TaskPosition, 3, {Hold{Eigen::Vector2d(1, 2)}}));
  CHECK_THROWS(VirtualTrajectory(VtSpace::Joint, 2, {}));
}

TEST_CASE("orientation virtual trajectory") {
  Rotation ref = testutil::random_rotation();
  Oscillation osc{Eigen::Vector3d::Zero(), Eigen::Vector3d(0.3, -0.2, 0.1), 1.3, 0.2};
  MinJerk mj{Eigen::Vector3d::Zero(), Eigen::Vector3d(0.4, 0.1, -0.5), 0.0, 1.0};
  VirtualTrajectory vt(VtSpace::Orientation, 3, {osc, mj}, ref);
  for (double t = 0.05; t < 2.0; t += 0.13) {
    auto r = vt.eval_rotation(t);
    Eigen::Vector3d e = vt.eval(t).value;
    CHECK(geom::geodesic_distance(r.R, ref * geom::exp_so3(e)) < 1e-15);
    Eigen::Matrix3d Rdot = (vt.eval_rotation(t + 1e-6).R.matrix() -
                            vt.eval_rotation(t - 1e-6).R.matrix()) / 2e-6;
    Vec3 ws = geom::unskew(Rdot * r.R.matrix().transpose());
    CHECK((ws - r.omega).norm() < 1e-7);
  }
}

TEST_CASE("DMP summand") {
  dmp::DmpModel m;
  m.space = dmp::Space::Joint;
  m.basis = dmp::BasisSet::make_default(dmp::Kind::Discrete, 10);
  m.W = Eigen::MatrixXd::Random(2, 10) * 50.0;
  m.goal = Eigen::Vector2d(1.0, -1.0);
  m.scaling = Eigen::Matrix2d::Identity();
  dmp::TransformState x0 = dmp::initial_state(m, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero());
  DmpRef ref(m, x0, 0.5, 2.0, 1e-3);
  dmp::Rollout r = dmp::rollout(m, 2.0, 1e-3, x0);
  VirtualTrajectory vt(VtSpace::Joint, 2, {ref});
  CHECK(vt.eval(0.0).value == r.y.front());
  CHECK(vt.eval(0.5 + 0.123).value.isApprox(r.y[123], 1e-14));
  // between samples: Hermite interpolation is O(dt^4)
  dmp::Rollout fine = dmp::rollout(m, 2.0, 1e-4, x0);
  double worst = 0.0, worst_rate = 0.0;
  for (std::size_t k = 5; k < fine.t.size(); k += 37) {
    VtSample s = vt.eval(0.5 + fine.t[k]);
    worst = std::max(worst, (s.value - fine.y[k]).norm());
    worst_rate = std::max(worst_rate, (s.rate - fine.yd[k]).norm());
  }
  CHECK(worst < 1e-8);
  CHECK(worst_rate < 1e-5);
  CHECK(vt.eval(10.0).value == r.y.back());
  CHECK(vt.eval(10.0).rate.norm() == 0.0);

  // orientation DMP summand reproduces R0 = R_G Exp(e)^T
  dmp::DmpModel o = m;
  o.space = dmp::Space::SO3;
  o.W = Eigen::MatrixXd::Random(3, 10) * 20.0;
  o.goal.resize(0);
  o.goal_rot = testutil::random_rotation();
  o.scaling = Eigen::Matrix3d::Identity();
  dmp::TransformState ox = dmp::initial_state(o, testutil::random_rotation());
  DmpRef oref(o, ox, 0.0, 1.0, 1e-3);
  dmp::Rollout orr = dmp::rollout(o, 1.0, 1e-3, ox);
  VirtualTrajectory ovt(VtSpace::Orientation, 3, {oref}, o.goal_rot);
  for (std::size_t k = 0; k < orr.t.size(); k += 50) {
    auto s = ovt.eval_rotation(orr.t[k]);
    CHECK(geom::geodesic_distance(s.R, orr.R[k]) < 1e-12);
    CHECK((s.R.transpose() * s.omega - orr.omega_body[k]).norm() < 1e-8);
  }
  CHECK_THROWS(VirtualTrajectory(VtSpace::Orientation, 3, {oref}, Rotation::identity()));
}

TEST_CASE("joint module") {
  RobotModel m = RobotModel::planar_2link();
  JointModule jm{2.0 * Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Zero(),
                 VirtualTrajectory::hold(VtSpace::Joint, Eigen::Vector2d(1.0, 0.0))};
  Module mod = jm;
  validate(mod, m);
  ModuleTorque t = module_torque(mod, m, {Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()}, 0.0);
  CHECK(t.stiffness == Eigen::Vector2d(2.0, 0.0));
  t = module_torque(mod, m, {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d::Zero()}, 0.0);
  CHECK(t.total().norm() == 0.0);
  // doubling the offset quadruples the potential
  double u1 = module_potential(mod, m, Eigen::Vector2d(0.7, 0.2), 0.0);
  double u2 = module_potential(mod, m, Eigen::Vector2d(0.4, 0.4), 0.0);
  CHECK(u2 == doctest::Approx(4.0 * u1).epsilon(1e-14));
}

TEST_CASE("stiffness torques are minus the potential gradient") {
  for (const RobotModel& model : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    double worst[5] = {0, 0, 0, 0, 0};
    for (int k = 0; k < 100; ++k) {
      std::vector<Module> mods = random_modules(model);
      Eigen::VectorXd q = random_q(model);
      JointState s{q, testutil::random_vec(model.dof())};
      for (std::size_t i = 0; i < mods.size(); ++i) {
        Eigen::VectorXd g = fd_gradient(mods[i], model, q, 0.0);
        Eigen::VectorXd tau = module_torque(mods[i], model, s, 0.0).stiffness;
        worst[i] = std::max(worst[i], (tau + g).norm() / std::max(g.norm(), 1e-6));
      }
    }
    for (int i = 0; i < 5; ++i) {
      INFO(model.name(), " module ", i, " worst ", worst[i]);
      CHECK(worst[i] < 1e-5);
    }
  }
}

TEST_CASE("trace-form and quaternion orientation torques agree") {
  for (const RobotModel& model : {RobotModel::planar_2link(), RobotModel::iiwa14_standin()}) {
    int ee = model.frame_index("ee");
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      Eigen::Matrix3d K = testutil::random_spd();
      Eigen::Matrix3d B = testutil::random_spd();
      VirtualTrajectory vt = VirtualTrajectory::hold_rotation(testutil::random_rotation());
      Module a = RotCostiffModule{geom::costiffness(K), B, ee, vt};
      Module b = RotQuatModule{K, B, ee, vt};
      validate(a, model);
      validate(b, model);
      JointState s{random_q(model), testutil::random_vec(model.dof())};
      ModuleTorque ta = module_torque(a, model, s, 0.0), tb = module_torque(b, model, s, 0.0);
      worst = std::max(worst, (ta.stiffness - tb.stiffness).norm() / std::max(1.0, tb.stiffness.norm()));
      CHECK((ta.damping - tb.damping).norm() < 1e-12);
      // potentials differ only by the constant tr(G)
      double trace_form = costiff_trace_potential(std::get<RotCostiffModule>(a), model, s.q, 0.0);
      CHECK(std::abs(trace_form + geom::costiffness(K).trace() -
                     module_potential(b, model, s.q, 0.0)) < 1e-10);
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("log-map module") {
  RobotModel model = RobotModel::iiwa14_standin();
  int ee = model.frame_index("ee");
  Eigen::VectorXd q = random_q(model);
  Rotation RB = chain::fk_rotation(model, q, ee);
  JointState s{q, Eigen::VectorXd::Zero(7)};
  Eigen::Matrix3Xd Jb = chain::body_jacobian_rotation(model, q, ee);

  Module aligned = RotLogModule{5.0 * Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Identity(), ee,
                                VirtualTrajectory::hold_rotation(RB)};
  validate(aligned, model);
  CHECK(module_torque(aligned, model, s, 0.0).stiffness.norm() < 1e-12);

  // small angle: the quaternion module with K_r = K_r' gives the same torque
  Eigen::Matrix3d K = testutil::random_spd();
  Vec3 axis = testutil::random_vec3().normalized();
  Rotation R0 = RB * geom::exp_so3(Vec3(1e-3 * axis));
  Module lg = RotLogModule{K, Eigen::Matrix3d::Zero(), ee, VirtualTrajectory::hold_rotation(R0)};
  Module qt = RotQuatModule{K, Eigen::Matrix3d::Zero(), ee, VirtualTrajectory::hold_rotation(R0)};
  validate(lg, model);
  validate(qt, model);
  Eigen::VectorXd tl = module_torque(lg, model, s, 0.0).stiffness;
  Eigen::VectorXd tq = module_torque(qt, model, s, 0.0).stiffness;
  double ratio = tq.norm() / tl.norm();
  CHECK(std::abs(ratio - 1.0) < 1e-5);
  CHECK((tl - tq).norm() / tl.norm() < 1e-4);  // first order in the angle

  // isotropic stiffness: body torque is parallel to the Log axis
  Module iso = RotLogModule{3.0 * Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Zero(), ee,
                            VirtualTrajectory::hold_rotation(RB * geom::exp_so3(Vec3(0.4, -0.2, 0.9)))};
  validate(iso, model);
  CHECK((module_torque(iso, model, s, 0.0).stiffness -
         Jb.transpose() * (3.0 * Vec3(0.4, -0.2, 0.9))).norm() < 1e-12);

  Module antipodal = RotLogModule{Eigen::Matrix3d::Identity(), Eigen::Matrix3d::Zero(), ee,
                                  VirtualTrajectory::hold_rotation(RB * geom::exp_so3(Vec3(pi, 0, 0)))};
  validate(antipodal, model);
  CHECK_THROWS_AS(module_torque(antipodal, model, s, 0.0), std::domain_error);
}

TEST_CASE("task-space module at the straight-arm singularity") {
  RobotModel m = RobotModel::planar_2link();
  chain::FramePoint ee{m.frame_index("ee"), Vec3::Zero()};
  Module tp = TaskPosModule{60.0 * Eigen::Matrix3d::Identity(), 20.0 * Eigen::Matrix3d::Identity(), ee,
                            VirtualTrajectory::hold(VtSpace::TaskPosition, Eigen::Vector3d(3, 0, 0))};
  validate(tp, m);
  JointState s{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  ModuleTorque t = module_torque(tp, m, s, 0.0);
  CHECK(t.total().allFinite());
  CHECK(t.total().norm() == 0.0);
  CHECK(module_potential(tp, m, s.q, 0.0) == doctest::Approx(30.0));
  // a target off the arm axis pulls
  std::get<TaskPosModule>(tp).vt = VirtualTrajectory::hold(VtSpace::TaskPosition, Eigen::Vector3d(2, 1, 0));
  CHECK(module_torque(tp, m, s, 0.0).total().norm() > 1.0);
}

TEST_CASE("damping terms") {
  RobotModel model = RobotModel::iiwa14_standin();
  int ee = model.frame_index("ee");
  JointState s{random_q(model), testutil::random_vec(7)};
  Eigen::Matrix3d B = testutil::random_spd();
  Rotation R0 = testutil::random_rotation();
  Module r = RotQuatModule{Eigen::Matrix3d::Identity(), B, ee, VirtualTrajectory::hold_rotation(R0)};
  validate(r, model);
  Eigen::Matrix3Xd Jb = chain::body_jacobian_rotation(model, s.q, ee);
  Eigen::VectorXd expect = -Jb.transpose() * B * Jb * s.qd;
  CHECK((module_torque(r, model, s, 0.0).damping - expect).norm() < 1e-12);
  // damping power is never positive
  for (int k = 0; k < 50; ++k) {
    JointState x{random_q(model), testutil::random_vec(7)};
    for (const Module& m : random_modules(model)) {
      Module still = m;
      // hold targets have zero rate, so the damping term is dissipative
      CHECK(x.qd.dot(module_torque(still, model, x, 0.0).damping) <= 1e-12);
    }
  }
}

TEST_CASE("gain validation") {
  RobotModel m = RobotModel::planar_2link();
  Eigen::Matrix2d bad;
  bad << 1.0, 0.0, 0.0, -0.1;
  Module jm = JointModule{bad, Eigen::Matrix2d::Identity(),
                          VirtualTrajectory::hold(VtSpace::Joint, Eigen::Vector2d::Zero())};
  CHECK_THROWS_AS(validate(jm, m), std::invalid_argument);
  Eigen::Matrix2d asym;
  asym << 2.0, 1.0, 0.0, 2.0;
  Module ok = JointModule{asym, Eigen::Matrix2d::Identity(),
                          VirtualTrajectory::hold(VtSpace::Joint, Eigen::Vector2d::Zero())};
  validate(ok, m);
  CHECK(std::get<JointModule>(ok).K(0, 1) == 0.5);
  CHECK(std::get<JointModule>(ok).K(1, 0) == 0.5);
  Module wrong_vt = JointModule{Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity(),
                                VirtualTrajectory::hold(VtSpace::Joint, Eigen::Vector3d::Zero())};
  CHECK_THROWS(validate(wrong_vt, m));
  // a co-stiffness whose stiffness is indefinite
  Module g = RotCostiffModule{Eigen::Vector3d(0.0, 0.0, -1.0).asDiagonal(), Eigen::Matrix3d::Identity(),
                              0, VirtualTrajectory::hold_rotation(Rotation::identity())};
  CHECK_THROWS(validate(g, m));
  CHECK_THROWS(Controller({}, false, m));
}

TEST_CASE("controller composition") {
  RobotModel model = RobotModel::iiwa14_standin();
  std::vector<Module> mods = random_modules(model);
  Controller all(mods, true, model);
  JointState s{random_q(model), testutil::random_vec(7)};
  const double t = 0.3;

  Controller single({mods[1]}, false, model);
  CHECK(single.compose(model, s, t) == module_torque(mods[1], model, s, t).total());

  std::vector<Module> perm = {mods[3], mods[0], mods[4], mods[2], mods[1]};
  Controller permuted(perm, true, model);
  CHECK(permuted.compose(model, s, t) == all.compose(model, s, t));

  std::vector<Eigen::VectorXd> singles;
  for (const Module& m : mods) singles.push_back(Controller({m}, false, model).compose(model, s, t));
  Eigen::VectorXd expect = canonical_sum(singles) + dyn::gravity_vector(model, s.q);
  CHECK(all.compose(model, s, t) == expect);
  Command c = all.compose_detailed(model, s, t);
  CHECK((c.total - c.stiffness - c.damping - c.gravity).norm() < 1e-10);

  // retuning one module leaves the others' contributions untouched
  std::vector<Module> retuned = mods;
  std::get<TaskPosModule>(retuned[1]).K *= 3.0;
  Controller other(retuned, false, model);
  for (std::size_t i = 0; i < mods.size(); ++i) {
    if (i == 1) continue;
    CHECK(module_torque(other.modules()[i], model, s, t).total() ==
          module_torque(all.modules()[i], model, s, t).total());
  }

  // potentials split by kind
  auto p = all.potentials(model, s.q, t);
  CHECK(p.U_q == doctest::Approx(module_potential(mods[0], model, s.q, t)));
  CHECK(p.U_p == doctest::Approx(module_potential(mods[1], model, s.q, t)));
  CHECK(p.U_r == doctest::Approx(module_potential(mods[2], model, s.q, t) +
                                 module_potential(mods[3], model, s.q, t) +
                                 module_potential(mods[4], model, s.q, t)));
}

TEST_CASE("planar two-module command") {
  RobotModel m = RobotModel::planar_2link();
  chain::FramePoint ee{m.frame_index("ee"), Vec3::Zero()};
  Eigen::Vector2d q0(0.2 * pi, 0.6 * pi);
  Eigen::Vector3d p0(1.2, 0.9, 0.0);
  Eigen::Matrix2d Bq = 0.8 * Eigen::Matrix2d::Identity();
  Controller c({TaskPosModule{60.0 * Eigen::Matrix3d::Identity(), 20.0 * Eigen::Matrix3d::Identity(), ee,
                              VirtualTrajectory::hold(VtSpace::TaskPosition, p0)},
                JointModule{2.0 * Eigen::Matrix2d::Identity(), Bq,
                            VirtualTrajectory::hold(VtSpace::Joint, q0)}},
               false, m);
  for (int k = 0; k < 20; ++k) {
    JointState s{random_q(m), testutil::random_vec(2)};
    // hand-written J_p for two unit links
    double q1 = s.q(0), q12 = s.q(0) + s.q(1);
    Eigen::Matrix2d J;
    J << -std::sin(q1) - std::sin(q12), -std::sin(q12), std::cos(q1) + std::cos(q12), std::cos(q12);
    Eigen::Vector2d p(std::cos(q1) + std::cos(q12), std::sin(q1) + std::sin(q12));
    Eigen::Vector2d tau = J.transpose() * (60.0 * (p0.head<2>() - p) - 20.0 * J * s.qd) +
                          2.0 * (q0 - s.q) - Bq * s.qd;
    CHECK((c.compose(m, s, 0.0) - tau).norm() < 1e-10);
  }
}

TEST_CASE("no Jacobian inversion in the impedance code") {
  std::ifstream in(std::string(MOTORPRIM_SOURCE_DIR) + "/src/eda.cpp");
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string src = ss.str();
  std::regex forbidden(
      R"((\.inverse\s*\(|\.solve\s*\(|pinv|LLT|LDLT|PartialPivLU|FullPivLU|HouseholderQR|ColPivHouseholderQR|CompleteOrthogonalDecomposition|JacobiSVD|BDCSVD|completeOrthogonalDecomposition|\.lu\s*\(|\.llt\s*\(|\.ldlt\s*\())");
  std::smatch hit;
  bool found = std::regex_search(src, hit, forbidden);
  INFO("found: ", found ? hit.str() : std::string());
  CHECK_FALSE(found);
}
