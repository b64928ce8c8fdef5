#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "motorprim/dyn.hpp"
#include "motorprim/eda.hpp"
#include "motorprim/energy.hpp"

using namespace motorprim;
using namespace motorprim::energy;
using chain::RobotModel;
using eda::Controller;
using eda::VirtualTrajectory;
using eda::VtSpace;
using Eigen::Matrix2d;
using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;
using testutil::random_q;

namespace {

constexpr double pi = std::numbers::pi;

Controller two_module(const RobotModel& m, const Vector3d& p0, double Kq, double Bq,
                const Vector2d& q0 = Vector2d(0.2 * pi, 0.6 * pi), double Bp = 20.0) {
  chain::FramePoint ee{m.frame_index("ee"), Vector3d::Zero()};
  return Controller({eda::TaskPosModule{60.0 * Matrix3d::Identity(), Bp * Matrix3d::Identity(), ee,
                                        VirtualTrajectory::hold(VtSpace::TaskPosition, p0)},
                     eda::JointModule{Kq * Matrix2d::Identity(), Bq * Matrix2d::Identity(),
                                      VirtualTrajectory::hold(VtSpace::Joint, q0)}},
                    false, m);
}

dyn::SimTrace run(const Controller& c, const RobotModel& m, const JointState& s0, double T,
                  double dt = 1e-3, dyn::Gravity g = dyn::Gravity::Off) {
  dyn::TorqueLaw law = [&](double t, const JointState& s) { return c.compose(m, s, t); };
  return dyn::simulate(m, s0, law, {}, {T, dt, g});
}

double wrap(double a) { return std::remainder(a, 2 * pi); }

double angle_dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, std::abs(wrap(a(i) - b(i))));
  return d;
}

}  // namespace

TEST_CASE("ledger entry at the virtual targets") {
  RobotModel m = RobotModel::planar_2link();
  Vector2d q(0.3, 0.9);
  chain::FramePoint ee{m.frame_index("ee"), Vector3d::Zero()};
  Vector3d p = chain::fk_position(m, q, ee);
  Controller c = two_module(m, p, 2.0, 0.5, q);
  JointState s{q, Vector2d(0.4, -0.2)};
  LedgerEntry e = potentials(c, m, s, 0.0);
  CHECK(e.U_q == 0.0);
  CHECK(std::abs(e.U_p) < 1e-28);
  CHECK(e.U_r == 0.0);
  CHECK(e.V == doctest::Approx(dyn::kinetic_energy(m, s)).epsilon(1e-14));
  CHECK(e.dUdt == 0.0);
  CHECK(e.dissipation < 0.0);
  CHECK(e.margin == doctest::Approx(-e.dissipation));
}

TEST_CASE("joint potential scales quadratically") {
  RobotModel m = RobotModel::planar_2link();
  Vector2d q0(0.1, 0.2);
  Controller c({eda::JointModule{Matrix2d::Identity() * 3.0, Matrix2d::Identity(),
                                 VirtualTrajectory::hold(VtSpace::Joint, q0)}},
               false, m);
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd d = testutil::random_vec(2);
    double U1 = potential(c, m, q0 + d, 0.0);
    double U2 = potential(c, m, q0 + 2 * d, 0.0);
    CHECK(U2 == doctest::Approx(4 * U1).epsilon(1e-12));
  }
}

TEST_CASE("orientation ledger uses the nonnegative form") {
  RobotModel m = RobotModel::iiwa14_standin();
  int ee = m.frame_index("ee");
  for (int k = 0; k < 50; ++k) {
    Matrix3d G = testutil::random_spd(0.1, 2.0);
    eda::RotCostiffModule mod{G, Matrix3d::Identity(), ee,
                              VirtualTrajectory::hold_rotation(testutil::random_rotation())};
    Controller c({mod}, false, m);
    Eigen::VectorXd q = random_q(m);
    auto P = c.potentials(m, q, 0.0);
    CHECK(P.U_r >= 0.0);
    CHECK(std::abs(eda::costiff_trace_potential(mod, m, q, 0.0) + G.trace() - P.U_r) < 1e-10);
  }
}

TEST_CASE("passivity monitor: constant modules, planar") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.8);
  REQUIRE(constant_parameters(c));
  JointState s0{Vector2d(-0.4, 1.9), Vector2d(0.5, -1.0)};
  dyn::SimTrace tr = run(c, m, s0, 10.0);
  Ledger L = build_ledger(tr, c, m, dyn::Gravity::Off);
  PassivityReport r = passivity_monitor(L, true, tr.dt);
  CHECK(r.violations == 0);
  CHECK(r.V_end < r.V_start);
  CHECK(r.balance_residual_rate < 1e-5);
  CHECK(tr.V.size() == tr.size());
  for (const auto& e : L.rows) {
    CHECK(e.T_kin >= 0.0);
    CHECK(e.dUdt == 0.0);
    CHECK(e.margin >= 0.0);
  }
}

TEST_CASE("passivity monitor: gravity on, compensated, 7 joints") {
  RobotModel m = RobotModel::iiwa14_standin();
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(7);
  q0 << 0.0, 0.6, 0.0, -1.2, 0.0, 0.8, 0.0;
  Controller c({eda::JointModule{20.0 * Eigen::MatrixXd::Identity(7, 7), 3.0 * Eigen::MatrixXd::Identity(7, 7),
                                 VirtualTrajectory::hold(VtSpace::Joint, q0)}},
               true, m);
  JointState s0{q0 + testutil::random_vec(7, -0.3, 0.3), Eigen::VectorXd::Zero(7)};
  dyn::SimTrace tr = run(c, m, s0, 2.0, 1e-3, dyn::Gravity::On);
  PassivityReport r = passivity_monitor(build_ledger(tr, c, m, dyn::Gravity::On), true, tr.dt);
  CHECK(r.violations == 0);
  CHECK(r.balance_residual_rate < 1e-5);
}

TEST_CASE("uncompensated gravity enters the storage function") {
  RobotModel m = RobotModel::planar_2link();
  Controller c({eda::JointModule{Matrix2d::Zero(), Matrix2d::Zero(),
                                 VirtualTrajectory::hold(VtSpace::Joint, Vector2d::Zero())}},
               false, m);
  dyn::SimTrace tr = run(c, m, {Vector2d(0.3, 0.2), Vector2d::Zero()}, 2.0, 1e-3, dyn::Gravity::On);
  PassivityReport r = passivity_monitor(build_ledger(tr, c, m, dyn::Gravity::On), true, tr.dt);
  CHECK(r.V_span < 1e-6);
  CHECK(r.violations == 0);
}

TEST_CASE("zero damping conserves V") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.0, Vector2d(0.2 * pi, 0.6 * pi), 0.0);
  dyn::SimTrace tr = run(c, m, {Vector2d(-0.4, 1.9), Vector2d(0.5, -1.0)}, 10.0);
  PassivityReport r = passivity_monitor(build_ledger(tr, c, m, dyn::Gravity::Off), true, tr.dt);
  CHECK(r.V_span < 1e-6);
  CHECK(r.violations == 0);
}

TEST_CASE("moving target with weak damping shows negative margin") {
  RobotModel m = RobotModel::planar_2link();
  chain::FramePoint ee{m.frame_index("ee"), Vector3d::Zero()};
  VirtualTrajectory vt(VtSpace::TaskPosition, 3,
                       {eda::Oscillation{Vector3d(1.0, 0.8, 0.0), Vector3d(0.4, 0.4, 0.0), 0.5, 0.0}});
  Controller c({eda::TaskPosModule{60.0 * Matrix3d::Identity(), 0.2 * Matrix3d::Identity(), ee, vt},
                eda::JointModule{Matrix2d::Zero(), 0.05 * Matrix2d::Identity(),
                                 VirtualTrajectory::hold(VtSpace::Joint, Vector2d::Zero())}},
               false, m);
  CHECK_FALSE(constant_parameters(c));
  dyn::SimTrace tr = run(c, m, {Vector2d(0.4, 1.2), Vector2d::Zero()}, 3.0);
  Ledger L = build_ledger(tr, c, m, dyn::Gravity::Off);
  PassivityReport r = passivity_monitor(L, false, tr.dt);
  CHECK(r.negative_margin_steps > 0);
  CHECK(r.min_margin < 0.0);
  CHECK(r.violations == 0);  // only counted for constant runs
}

TEST_CASE("energy balance on a smooth time-varying run") {
  RobotModel m = RobotModel::planar_2link();
  chain::FramePoint ee{m.frame_index("ee"), Vector3d::Zero()};
  VirtualTrajectory vt(VtSpace::TaskPosition, 3,
                       {eda::MinJerk{Vector3d(1.0, 0.8, 0.0), Vector3d(0.2, 1.4, 0.0), 0.5, 2.0}});
  Controller c({eda::TaskPosModule{60.0 * Matrix3d::Identity(), 20.0 * Matrix3d::Identity(), ee, vt},
                eda::JointModule{2.0 * Matrix2d::Identity(), 0.8 * Matrix2d::Identity(),
                                 VirtualTrajectory::hold(VtSpace::Joint, Vector2d(0.2 * pi, 0.6 * pi))}},
               false, m);
  dyn::SimTrace tr = run(c, m, {Vector2d(0.2, 1.3), Vector2d::Zero()}, 4.0);
  PassivityReport r = passivity_monitor(build_ledger(tr, c, m, dyn::Gravity::Off), false, tr.dt);
  CHECK(r.balance_residual_rate < 1e-5);
}

TEST_CASE("ledger csv layout") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.8);
  dyn::SimTrace tr = run(c, m, {Vector2d(0.1, 0.2), Vector2d::Zero()}, 0.01);
  std::ostringstream os;
  build_ledger(tr, c, m, dyn::Gravity::Off).write_csv(os);
  std::string text = os.str();
  CHECK(text.rfind("t,T_kin,U_q,U_p,U_r,V,dVdt,dissipation,margin\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 12);
}

TEST_CASE("LaSalle convergence on the planar arm") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.8);
  dyn::SimTrace tr = run(c, m, {Vector2d(-0.4, 1.9), Vector2d::Zero()}, 30.0);
  CHECK(tr.qd.back().norm() < 1e-4);
  CHECK(potential_gradient(c, m, tr.q.back(), 0.0).norm() < 1e-3);
}

TEST_CASE("potential minimizer") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.8);
  Minimum mn = minimize_potential(c, m, Vector2d(0.5, 0.5));
  CHECK(mn.grad_norm < 1e-8);
  CHECK(mn.U <= potential(c, m, Vector2d(0.5, 0.5), 0.0));
}

TEST_CASE("landscape: finite, parallel equals serial") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(2.5, 0.0, 0.0), 2.0, 0.8);  // target out of reach
  LandscapeSpec spec;
  spec.n_i = 97;
  spec.n_j = 61;
  Landscape a = landscape_grid(c, m, spec);
  Landscape b = landscape_grid_serial(c, m, spec);
  CHECK(a.U.allFinite());
  CHECK(std::memcmp(a.U.data(), b.U.data(), sizeof(double) * a.U.size()) == 0);
  CHECK(a.xs.front() == -pi);
  CHECK(a.xs.back() < pi);
  CHECK(a.ys.size() == 61);
}

TEST_CASE("landscape: K_q = 0 minima sit on the IK solutions") {
  RobotModel m = RobotModel::planar_2link();
  Vector3d p0(1.2, 0.9, 0.0);
  Controller c = two_module(m, p0, 0.0, 0.8);
  // analytic two-link IK, unit links
  double r2 = p0.head<2>().squaredNorm();
  double c2 = (r2 - 2.0) / 2.0;
  double q2 = std::acos(c2);
  auto ik = [&](double s2) {
    double a = std::atan2(p0.y(), p0.x()) - std::atan2(s2 * std::sin(q2), 1.0 + std::cos(q2));
    return Vector2d(a, s2 * q2);
  };
  Vector2d left = ik(1.0), right = ik(-1.0);

  LandscapeSpec spec;
  spec.n_i = spec.n_j = 200;
  Landscape L = landscape_grid(c, m, spec);
  const double h = 2 * pi / 200;
  double dmin = std::min(angle_dist(L.argmin(), left), angle_dist(L.argmin(), right));
  CHECK(dmin < h);

  int hits_left = 0, hits_right = 0;
  for (int k = 0; k < 40; ++k) {
    Minimum mn = minimize_potential(c, m, testutil::random_vec(2, -pi, pi));
    if (mn.U > 1e-12) continue;  // parked on a saddle or the boundary ridge
    if (angle_dist(mn.q, left) < 1e-6) ++hits_left;
    else if (angle_dist(mn.q, right) < 1e-6) ++hits_right;
    else FAIL("minimum off the IK set");
  }
  CHECK(hits_left > 0);
  CHECK(hits_right > 0);
}

TEST_CASE("landscape: grid minimum agrees with direct minimization") {
  RobotModel m = RobotModel::planar_2link();
  Controller c = two_module(m, Vector3d(1.2, 0.9, 0.0), 2.0, 0.8);
  LandscapeSpec spec;
  spec.n_i = spec.n_j = 512;
  Landscape L = landscape_grid(c, m, spec);
  Eigen::VectorXd g = L.argmin();
  Minimum mn = minimize_potential(c, m, g);
  CHECK(angle_dist(g, mn.q) < 1e-2);
  CHECK(mn.U <= L.U.minCoeff());
}

TEST_CASE("singularity scan: planar flags concentrate near q2 = 0, pi") {
  RobotModel m = RobotModel::planar_2link();
  ScanSpec spec;
  spec.point = {m.frame_index("ee"), Vector3d::Zero()};
  spec.points_per_joint = 121;
  spec.threshold = 0.03;
  REQUIRE(default_task_rows(m) == std::vector<int>{0, 1});
  ScanResult r = singularity_scan(m, spec);
  CHECK(r.states == 121 * 121);
  CHECK(r.flagged > 0);
  CHECK(r.fraction == doctest::Approx(double(r.flagged) / r.states));
  CHECK(r.cloud.size() == r.flagged);
  auto axes = scan_axes(m, spec);
  for (double q1 : axes[0]) {
    for (double q2 : axes[1]) {
      CloudPoint p = singularity_sample(m, Vector2d(q1, q2), spec.point, {0, 1});
      if (p.sigma_min <= spec.threshold) CHECK(std::abs(std::sin(q2)) < 0.3);
      if (std::abs(std::sin(q2)) < 1e-12) CHECK(p.sigma_min <= spec.threshold);
    }
  }
  // every flagged end-effector point lies near the inner or outer boundary
  for (const auto& p : r.cloud) {
    double rad = std::hypot(p.x, p.y);
    CHECK((rad > 1.9 || rad < 0.4));
  }
}

TEST_CASE("singularity scan: threshold 0 on an offset grid") {
  RobotModel m = RobotModel::planar_2link();
  ScanSpec spec;
  spec.point = {m.frame_index("ee"), Vector3d::Zero()};
  spec.points_per_joint = 50;
  spec.offset_seed = 7;
  spec.threshold = 0.0;
  ScanResult r = singularity_scan(m, spec);
  CHECK(r.flagged == 0);
  CHECK(r.sigma_floor > 0.0);
  spec.threshold = -1.0;
  CHECK_THROWS_AS(singularity_scan(m, spec), std::invalid_argument);
}

TEST_CASE("singularity scan: parallel equals serial, fixed joints honoured") {
  RobotModel m = RobotModel::iiwa14_standin();
  ScanSpec spec;
  spec.point = {m.frame_index("ee"), Vector3d::Zero()};
  spec.fixed.assign(7, std::nullopt);
  spec.fixed[0] = 0.0;
  spec.fixed[6] = 0.0;
  spec.points_per_joint = 5;
  spec.threshold = 0.03;
  ScanResult a = singularity_scan(m, spec);
  ScanResult b = singularity_scan_serial(m, spec);
  CHECK(a.states == 3125);
  REQUIRE(a.cloud.size() == b.cloud.size());
  CHECK(a.flagged == b.flagged);
  CHECK(a.sigma_floor == b.sigma_floor);
  if (!a.cloud.empty()) {
    CHECK(std::memcmp(a.cloud.data(), b.cloud.data(), sizeof(CloudPoint) * a.cloud.size()) == 0);
  }
  auto axes = scan_axes(m, spec);
  CHECK(axes[0].size() == 1);
  CHECK(axes[3].size() == 5);
  CHECK(axes[3].front() == m.q_min()(3));
  CHECK(axes[3].back() == m.q_max()(3));
}
