#include "motorprim/dyn.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "motorprim/csv.hpp"

namespace motorprim::dyn {

namespace {

using chain::ChainPose;
using geom::Mat3;
using geom::Vec3;

// World-frame quantities of each link at one configuration.
struct LinkState {
  Vec3 c;
  Mat3 I;  // about the center of mass, base frame
};

std::vector<LinkState> link_states(const RobotModel& model, const ChainPose& cp) {
  std::vector<LinkState> out;
  out.reserve(model.dof());
  for (int i = 0; i < model.dof(); ++i) {
    const auto& l = model.links()[i];
    const chain::Pose& T = cp.prefix[i + 1];
    Mat3 R = T.linear();
    out.push_back({T * l.com, R * l.inertia * R.transpose()});
  }
  return out;
}

// Linear velocity Jacobian of link i's center of mass (3 x n).
Eigen::Matrix3Xd com_jacobian(const ChainPose& cp, const Vec3& c, int i, int n) {
  Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, n);
  for (int j = 0; j <= i; ++j) J.col(j) = cp.twist[j].tail<3>() + cp.twist[j].head<3>().cross(c);
  return J;
}

Eigen::Matrix3Xd ang_jacobian(const ChainPose& cp, int i, int n) {
  Eigen::Matrix3Xd J = Eigen::Matrix3Xd::Zero(3, n);
  for (int j = 0; j <= i; ++j) J.col(j) = cp.twist[j].head<3>();
  return J;
}

void check_state(const RobotModel& model, const VectorXd& q, const VectorXd& qd) {
  if (q.size() != model.dof() || qd.size() != model.dof()) {
    throw std::invalid_argument("dynamics: state has wrong size");
  }
}

}  // namespace

MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q) {
  const int n = model.dof();
  ChainPose cp = chain::chain_pose(model, q);
  auto ls = link_states(model, cp);
  MatrixXd M = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::Matrix3Xd Jv = com_jacobian(cp, ls[i].c, i, n);
    Eigen::Matrix3Xd Jw = ang_jacobian(cp, i, n);
    M.noalias() += model.links()[i].mass * Jv.transpose() * Jv;
    M.noalias() += Jw.transpose() * ls[i].I * Jw;
  }
  M.diagonal() += model.armature();
  return 0.5 * (M + M.transpose());
}

std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model, const VectorXd& q) {
  const int n = model.dof();
  ChainPose cp = chain::chain_pose(model, q);
  auto ls = link_states(model, cp);
  std::vector<MatrixXd> dM(n, MatrixXd::Zero(n, n));
  const auto& V = cp.twist;

  for (int i = 0; i < n; ++i) {
    const double m = model.links()[i].mass;
    const Vec3& c = ls[i].c;
    const Mat3& I = ls[i].I;
    Eigen::Matrix3Xd Jv = com_jacobian(cp, c, i, n);
    Eigen::Matrix3Xd Jw = ang_jacobian(cp, i, n);
    for (int k = 0; k <= i; ++k) {
      const Vec3 wk = V[k].head<3>();
      const Vec3 vk = V[k].tail<3>();
      const Vec3 dc = vk + wk.cross(c);
      Eigen::Matrix3Xd dJv = Eigen::Matrix3Xd::Zero(3, n);
      Eigen::Matrix3Xd dJw = Eigen::Matrix3Xd::Zero(3, n);
      for (int j = 0; j <= i; ++j) {
        const Vec3 wj = V[j].head<3>();
        Vec3 dw = Vec3::Zero(), dv = Vec3::Zero();
        if (k < j) {
          dw = wk.cross(wj);
          dv = wk.cross(Vec3(V[j].tail<3>())) - wj.cross(vk);
        }
        dJw.col(j) = dw;
        dJv.col(j) = dv + dw.cross(c) + wj.cross(dc);
      }
      Mat3 W = geom::skew(wk);
      Mat3 dI = W * I - I * W;
      MatrixXd lin = m * Jv.transpose() * dJv;
      MatrixXd ang = Jw.transpose() * I * dJw;
      dM[k] += lin + lin.transpose() + ang + ang.transpose() + Jw.transpose() * dI * Jw;
    }
  }
  for (auto& d : dM) d = 0.5 * (d + d.transpose());
  return dM;
}

VectorXd gravity_vector(const RobotModel& model, const VectorXd& q) {
  const int n = model.dof();
  ChainPose cp = chain::chain_pose(model, q);
  auto ls = link_states(model, cp);
  VectorXd g = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    g.noalias() -= model.links()[i].mass * com_jacobian(cp, ls[i].c, i, n).transpose() *
                   model.gravity();
  }
  return g;
}

double gravity_potential(const RobotModel& model, const VectorXd& q) {
  ChainPose cp = chain::chain_pose(model, q);
  auto ls = link_states(model, cp);
  double u = 0.0;
  for (int i = 0; i < model.dof(); ++i) u -= model.links()[i].mass * model.gravity().dot(ls[i].c);
  return u;
}

double kinetic_energy(const RobotModel& model, const JointState& s) {
  check_state(model, s.q, s.qd);
  return 0.5 * s.qd.dot(mass_matrix(model, s.q) * s.qd);
}

DynTerms dynamics_terms(const RobotModel& model, const VectorXd& q, const VectorXd& qd,
                        Gravity gravity) {
  check_state(model, q, qd);
  const int n = model.dof();
  DynTerms out;
  out.M = mass_matrix(model, q);
  auto dM = mass_matrix_partials(model, q);
  // c_ijk = 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i); with A(:, j) = dM_j qd
  // this sums to C = 1/2 (Mdot + A - A^T).
  MatrixXd Mdot = MatrixXd::Zero(n, n);
  MatrixXd A(n, n);
  for (int k = 0; k < n; ++k) {
    Mdot += dM[k] * qd(k);
    A.col(k) = dM[k] * qd;
  }
  out.C = 0.5 * (Mdot + A - A.transpose());
  out.g = gravity == Gravity::On ? gravity_vector(model, q) : VectorXd::Zero(n);
  return out;
}

double skewness_defect(const RobotModel& model, const VectorXd& q, const VectorXd& qd, double h) {
  DynTerms d = dynamics_terms(model, q, qd, Gravity::Off);
  MatrixXd Mdot = (mass_matrix(model, q + h * qd) - mass_matrix(model, q - h * qd)) / (2.0 * h);
  MatrixXd N = Mdot - 2.0 * d.C;
  return (N + N.transpose()).cwiseAbs().rowwise().sum().maxCoeff();
}

VectorXd forward_dynamics(const RobotModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& tau_in, const VectorXd& tau_ext, Gravity gravity) {
  DynTerms d = dynamics_terms(model, q, qd, gravity);
  VectorXd rhs = tau_in + tau_ext - d.C * qd - d.g;
  Eigen::LLT<MatrixXd> llt(d.M);
  if (llt.info() != Eigen::Success) throw NumericalAbort("mass matrix lost positive definiteness");
  return llt.solve(rhs);
}

namespace {

VectorXd eval_law(const TorqueLaw& law, double t, const JointState& s) {
  if (!law) return VectorXd::Zero(s.q.size());
  VectorXd tau = law(t, s);
  if (tau.size() != s.q.size()) throw std::invalid_argument("torque law returned wrong size");
  return tau;
}

}  // namespace

JointState step(const RobotModel& model, const JointState& s, double t, double dt,
                const TorqueLaw& tau_in, const TorqueLaw& tau_ext, Gravity gravity) {
  if (!(dt > 0.0 && dt <= 1e-2)) throw std::invalid_argument("step: dt must lie in (0, 1e-2]");
  auto deriv = [&](double tt, const JointState& x) {
    VectorXd a = forward_dynamics(model, x.q, x.qd, eval_law(tau_in, tt, x),
                                  eval_law(tau_ext, tt, x), gravity);
    return JointState{x.qd, a};
  };
  auto add = [](const JointState& x, double h, const JointState& k) {
    return JointState{x.q + h * k.q, x.qd + h * k.qd};
  };
  JointState k1 = deriv(t, s);
  JointState k2 = deriv(t + 0.5 * dt, add(s, 0.5 * dt, k1));
  JointState k3 = deriv(t + 0.5 * dt, add(s, 0.5 * dt, k2));
  JointState k4 = deriv(t + dt, add(s, dt, k3));
  JointState out{s.q + dt / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
                 s.qd + dt / 6.0 * (k1.qd + 2.0 * k2.qd + 2.0 * k3.qd + k4.qd)};
  if (!out.q.allFinite() || !out.qd.allFinite()) {
    throw NumericalAbort("non-finite state at t = " + format_double(t + dt));
  }
  return out;
}

SimTrace simulate(const RobotModel& model, const JointState& initial, const TorqueLaw& tau_in,
                  const TorqueLaw& tau_ext, const SimOptions& opt) {
  check_state(model, initial.q, initial.qd);
  if (!(opt.duration >= 0.0)) throw std::invalid_argument("simulate: negative duration");
  const long steps = std::lround(opt.duration / opt.dt);
  SimTrace tr;
  tr.dt = opt.dt;
  tr.t.reserve(steps + 1);
  JointState s = initial;
  for (long k = 0;; ++k) {
    double t = k * opt.dt;
    tr.t.push_back(t);
    tr.q.push_back(s.q);
    tr.qd.push_back(s.qd);
    tr.tau_in.push_back(eval_law(tau_in, t, s));
    tr.tau_ext.push_back(eval_law(tau_ext, t, s));
    if (k == steps) break;
    s = step(model, s, t, opt.dt, tau_in, tau_ext, opt.gravity);
  }
  return tr;
}

void SimTrace::write_csv(std::ostream& out) const {
  const int n = t.empty() ? 0 : static_cast<int>(q.front().size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",q" << i;
  for (int i = 1; i <= n; ++i) out << ",qd" << i;
  for (int i = 1; i <= n; ++i) out << ",tau" << i;
  out << ",V,dVdt\n";
  const bool have_v = V.size() == t.size() && dVdt.size() == t.size();
  std::vector<double> row;
  for (std::size_t k = 0; k < t.size(); ++k) {
    row.clear();
    row.push_back(t[k]);
    for (int i = 0; i < n; ++i) row.push_back(q[k](i));
    for (int i = 0; i < n; ++i) row.push_back(qd[k](i));
    for (int i = 0; i < n; ++i) row.push_back(tau_in[k](i));
    row.push_back(have_v ? V[k] : std::nan(""));
    row.push_back(have_v ? dVdt[k] : std::nan(""));
    write_row(out, row);
  }
}

void SimTrace::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_csv(out);
}

}  // namespace motorprim::dyn
