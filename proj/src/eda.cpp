// Everything here is Jacobian-transpose only; tests grep this file for
// inversion calls.
#include "motorprim/eda.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "motorprim/dyn.hpp"

namespace motorprim::eda {

namespace {

constexpr double pi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

MatrixXd sym_psd(const MatrixXd& M, const std::string& what, Eigen::Index n) {
  if (M.rows() != n || M.cols() != n) throw std::invalid_argument(what + ": wrong size");
  if (!M.allFinite()) throw std::invalid_argument(what + ": not finite");
  MatrixXd S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(S, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(what + ": not positive semi-definite");
  }
  return S;
}

void check_vt(const VirtualTrajectory& vt, VtSpace space, int dim, const char* what) {
  if (vt.space() != space || vt.dim() != dim) {
    throw std::invalid_argument(std::string(what) + ": virtual trajectory has the wrong space");
  }
}

void check_frame(const RobotModel& model, int frame) {
  if (frame < 0 || frame >= static_cast<int>(model.frames().size())) {
    throw std::invalid_argument("module frame index out of range");
  }
}

// Body angular-velocity damping shared by the three orientation modules.
VectorXd rot_damping(const Matrix3d& B, const Eigen::Matrix3Xd& Jb, const Rotation& RB,
                     const VectorXd& qd, const VirtualTrajectory::RotSample& r0, bool ff) {
  Vec3 wb = Jb * qd;
  Vec3 w0 = ff ? Vec3(RB.transpose() * r0.omega) : Vec3::Zero();
  return Jb.transpose() * (B * (w0 - wb));
}

}  // namespace

VtSample minjerk(const VectorXd& start, const VectorXd& goal, double t0, double D, double t) {
  if (!(D > 0.0)) throw std::invalid_argument("minjerk: duration must be > 0");
  double u = std::clamp((t - t0) / D, 0.0, 1.0);
  double u2 = u * u;
  double s = u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
  double ds = 30.0 * u2 * (1.0 - 2.0 * u + u2) / D;
  return {start + s * (goal - start), ds * (goal - start)};
}

DmpRef::DmpRef(const dmp::DmpModel& model, const dmp::TransformState& initial, double t_start,
               double duration, double dt)
    : t_start_(t_start), dt_(dt), orientation_(dmp::is_orientation(model.space)),
      goal_rot_(model.goal_rot) {
  dmp::Rollout r = dmp::rollout(model, duration, dt, initial);
  y_ = std::move(r.y);
  yd_ = std::move(r.yd);
  if (orientation_) {
    for (auto& v : y_) v = -v;
    for (auto& v : yd_) v = -v;
  }
}

VtSample DmpRef::eval(double t) const {
  const Eigen::Index n = y_.front().size();
  double u = (t - t_start_) / dt_;
  if (u <= 0.0) return {y_.front(), VectorXd::Zero(n)};
  const double last = static_cast<double>(y_.size() - 1);
  if (u > last) return {y_.back(), VectorXd::Zero(n)};
  std::size_t k = std::min(static_cast<std::size_t>(std::floor(u)), y_.size() - 2);
  double s = u - k;
  double s2 = s * s, s3 = s2 * s;
  double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  const VectorXd &y0 = y_[k], &y1 = y_[k + 1], &m0 = yd_[k], &m1 = yd_[k + 1];
  return {h00 * y0 + h10 * dt_ * m0 + h01 * y1 + h11 * dt_ * m1,
          (d00 * y0 + d01 * y1) / dt_ + d10 * m0 + d11 * m1};
}

VirtualTrajectory::VirtualTrajectory(VtSpace space, int dim, std::vector<Primitive> summands,
                                     const Rotation& reference)
    : space_(space), dim_(dim), summands_(std::move(summands)), reference_(reference) {
  if (space == VtSpace::TaskPosition && dim != 3) throw std::invalid_argument("task VT is 3-D");
  if (space == VtSpace::Orientation && dim != 3) throw std::invalid_argument("orientation VT is 3-D");
  if (summands_.empty()) throw std::invalid_argument("virtual trajectory needs a summand");
  auto bad = [](const char* what) {
    return std::invalid_argument(std::string("virtual trajectory: ") + what);
  };
  for (const Primitive& p : summands_) {
    std::visit(overloaded{
                   [&](const MinJerk& m) {
                     if (m.start.size() != dim || m.goal.size() != dim) throw bad("min-jerk size");
                     if (!(m.duration > 0.0)) throw bad("min-jerk duration must be > 0");
                   },
                   [&](const Oscillation& o) {
                     if (o.center.size() != dim || o.amplitude.size() != dim) {
                       throw bad("oscillation size");
                     }
                     if (!(o.period > 0.0)) throw bad("oscillation period must be > 0");
                   },
                   [&](const DmpRef& d) {
                     if (d.dim() != dim) throw bad("DMP dimension");
                     if (d.orientation() != (space == VtSpace::Orientation)) throw bad("DMP space");
                     if (d.orientation() &&
                         geom::geodesic_distance(d.goal_rot(), reference_) > 1e-9) {
                       throw bad("orientation DMP summand needs reference = its goal");
                     }
                   },
                   [&](const Hold& h) {
                     if (h.value.size() != dim) throw bad("hold size");
                   },
               },
               p);
  }
}

VirtualTrajectory VirtualTrajectory::hold(VtSpace space, const VectorXd& value) {
  return VirtualTrajectory(space, static_cast<int>(value.size()), {Hold{value}});
}

VirtualTrajectory VirtualTrajectory::hold_rotation(const Rotation& R) {
  return VirtualTrajectory(VtSpace::Orientation, 3, {Hold{Vec3::Zero()}}, R);
}

VtSample VirtualTrajectory::eval(double t) const {
  VtSample out{VectorXd::Zero(dim_), VectorXd::Zero(dim_)};
  for (const Primitive& p : summands_) {
    VtSample s = std::visit(
        overloaded{
            [&](const MinJerk& m) { return minjerk(m.start, m.goal, m.t0, m.duration, t); },
            [&](const Oscillation& o) {
              const double w = 2.0 * pi / o.period;
              const double arg = w * t + o.phase;
              return VtSample{o.center + std::sin(arg) * o.amplitude,
                              w * std::cos(arg) * o.amplitude};
            },
            [&](const DmpRef& d) { return d.eval(t); },
            [&](const Hold& h) { return VtSample{h.value, VectorXd::Zero(dim_)}; },
        },
        p);
    out.value += s.value;
    out.rate += s.rate;
  }
  return out;
}

VirtualTrajectory::RotSample VirtualTrajectory::eval_rotation(double t) const {
  if (space_ != VtSpace::Orientation) throw std::logic_error("eval_rotation on a vector VT");
  VtSample s = eval(t);
  Vec3 e = s.value;
  Rotation R = reference_ * geom::exp_so3(e);
  Vec3 wb = geom::right_jacobian_so3(e) * Vec3(s.rate);
  return {R, R * wb};
}

PotentialKind potential_kind(const Module& m) {
  if (std::holds_alternative<JointModule>(m)) return PotentialKind::Joint;
  if (std::holds_alternative<TaskPosModule>(m)) return PotentialKind::Position;
  return PotentialKind::Orientation;
}

std::string module_name(const Module& m) {
  static const char* names[] = {"joint", "task_pos", "rot_costiff", "rot_quat", "rot_log"};
  return names[m.index()];
}

void validate(Module& m, const RobotModel& model) {
  const int n = model.dof();
  std::visit(overloaded{
                 [&](JointModule& j) {
                   j.K = sym_psd(j.K, "joint K_q", n);
                   j.B = sym_psd(j.B, "joint B_q", n);
                   check_vt(j.vt, VtSpace::Joint, n, "joint module");
                 },
                 [&](TaskPosModule& p) {
                   p.K = sym_psd(p.K, "task K_p", 3);
                   p.B = sym_psd(p.B, "task B_p", 3);
                   check_frame(model, p.point.frame);
                   check_vt(p.vt, VtSpace::TaskPosition, 3, "task module");
                 },
                 [&](RotCostiffModule& r) {
                   r.G = 0.5 * (r.G + r.G.transpose());
                   sym_psd(geom::stiffness_of(r.G), "stiffness of G_r", 3);
                   r.B = sym_psd(r.B, "rotation B_r", 3);
                   check_frame(model, r.frame);
                   check_vt(r.vt, VtSpace::Orientation, 3, "rotation module");
                 },
                 [&](RotQuatModule& r) {
                   r.K = sym_psd(r.K, "rotation K_r", 3);
                   r.B = sym_psd(r.B, "rotation B_r", 3);
                   check_frame(model, r.frame);
                   check_vt(r.vt, VtSpace::Orientation, 3, "rotation module");
                 },
                 [&](RotLogModule& r) {
                   r.K = sym_psd(r.K, "rotation K_r'", 3);
                   r.B = sym_psd(r.B, "rotation B_r", 3);
                   check_frame(model, r.frame);
                   check_vt(r.vt, VtSpace::Orientation, 3, "rotation module");
                 },
             },
             m);
}

ModuleTorque module_torque(const Module& m, const RobotModel& model, const JointState& s,
                           double t) {
  return std::visit(
      overloaded{
          [&](const JointModule& j) {
            VtSample x0 = j.vt.eval(t);
            return ModuleTorque{j.K * (x0.value - s.q), j.B * (x0.rate - s.qd)};
          },
          [&](const TaskPosModule& p) {
            VtSample x0 = p.vt.eval(t);
            Vec3 pos = chain::fk_position(model, s.q, p.point);
            Eigen::Matrix3Xd J = chain::jacobian_position(model, s.q, p.point);
            Vec3 pd = J * s.qd;
            return ModuleTorque{J.transpose() * (p.K * (Vec3(x0.value) - pos)),
                                J.transpose() * (p.B * (Vec3(x0.rate) - pd))};
          },
          [&](const RotCostiffModule& r) {
            auto r0 = r.vt.eval_rotation(t);
            Rotation RB = chain::fk_rotation(model, s.q, r.frame);
            Eigen::Matrix3Xd Jb = chain::body_jacobian_rotation(model, s.q, r.frame);
            // d/dq_j tr(G R_B^T R0) = w_j . vee(R G - G R^T), R = R_B^T R0, w_j body column
            Matrix3d R = (RB.transpose() * r0.R).matrix();
            Matrix3d A = R * r.G;
            Vec3 v = geom::unskew(A - A.transpose());
            return ModuleTorque{Jb.transpose() * v,
                                rot_damping(r.B, Jb, RB, s.qd, r0, r.omega_feedforward)};
          },
          [&](const RotQuatModule& r) {
            auto r0 = r.vt.eval_rotation(t);
            Rotation RB = chain::fk_rotation(model, s.q, r.frame);
            Eigen::Matrix3Xd Jb = chain::body_jacobian_rotation(model, s.q, r.frame);
            geom::UnitQuat qe = geom::quat_mul(geom::quat_conj(geom::rotm_to_quat(RB)),
                                               geom::rotm_to_quat(r0.R));
            Vec3 v = 2.0 * geom::quat_E(qe).transpose() * (r.K * qe.eps());
            return ModuleTorque{Jb.transpose() * v,
                                rot_damping(r.B, Jb, RB, s.qd, r0, r.omega_feedforward)};
          },
          [&](const RotLogModule& r) {
            auto r0 = r.vt.eval_rotation(t);
            Rotation RB = chain::fk_rotation(model, s.q, r.frame);
            Eigen::Matrix3Xd Jb = chain::body_jacobian_rotation(model, s.q, r.frame);
            Rotation Rrel = RB.transpose() * r0.R;
            if (geom::geodesic_distance(RB, r0.R) >= pi - 1e-4) {
              throw std::domain_error("log-map orientation module: frames are (nearly) antipodal");
            }
            Vec3 e = geom::Log(Rrel);
            return ModuleTorque{Jb.transpose() * (r.K * e),
                                rot_damping(r.B, Jb, RB, s.qd, r0, r.omega_feedforward)};
          },
      },
      m);
}

double costiff_trace_potential(const RotCostiffModule& m, const RobotModel& model,
                               const VectorXd& q, double t) {
  Rotation RB = chain::fk_rotation(model, q, m.frame);
  Rotation R0 = m.vt.eval_rotation(t).R;
  return -(m.G * (RB.transpose() * R0).matrix()).trace();
}

double module_potential(const Module& m, const RobotModel& model, const VectorXd& q, double t) {
  auto quat_form = [&](const Matrix3d& K, int frame, const VirtualTrajectory& vt) {
    Rotation RB = chain::fk_rotation(model, q, frame);
    geom::UnitQuat qe = geom::quat_mul(geom::quat_conj(geom::rotm_to_quat(RB)),
                                       geom::rotm_to_quat(vt.eval_rotation(t).R));
    return 2.0 * qe.eps().dot(K * qe.eps());
  };
  return std::visit(
      overloaded{
          [&](const JointModule& j) {
            VectorXd d = q - j.vt.eval(t).value;
            return 0.5 * d.dot(j.K * d);
          },
          [&](const TaskPosModule& p) {
            Vec3 d = chain::fk_position(model, q, p.point) - Vec3(p.vt.eval(t).value);
            return 0.5 * d.dot(p.K * d);
          },
          [&](const RotCostiffModule& r) {
            return quat_form(geom::stiffness_of(r.G), r.frame, r.vt);
          },
          [&](const RotQuatModule& r) { return quat_form(r.K, r.frame, r.vt); },
          [&](const RotLogModule& r) {
            Rotation RB = chain::fk_rotation(model, q, r.frame);
            Vec3 e = geom::Log(RB.transpose() * r.vt.eval_rotation(t).R);
            return 0.5 * e.dot(r.K * e);
          },
      },
      m);
}

VectorXd canonical_sum(std::vector<VectorXd> terms) {
  if (terms.empty()) throw std::invalid_argument("canonical_sum: no terms");
  std::sort(terms.begin(), terms.end(), [](const VectorXd& a, const VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  });
  VectorXd acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc += terms[i];
  return acc;
}

Controller::Controller(std::vector<Module> modules, bool gravity_compensation,
                       const RobotModel& model)
    : modules_(std::move(modules)), gravity_compensation_(gravity_compensation) {
  if (modules_.empty()) throw std::invalid_argument("controller needs at least one module");
  for (Module& m : modules_) validate(m, model);
}

Command Controller::compose_detailed(const RobotModel& model, const JointState& s, double t) const {
  std::vector<VectorXd> tot, stiff, damp;
  for (const Module& m : modules_) {
    ModuleTorque mt = module_torque(m, model, s, t);
    tot.push_back(mt.total());
    stiff.push_back(std::move(mt.stiffness));
    damp.push_back(std::move(mt.damping));
  }
  Command c;
  c.stiffness = canonical_sum(std::move(stiff));
  c.damping = canonical_sum(std::move(damp));
  c.total = canonical_sum(std::move(tot));
  c.gravity = gravity_compensation_ ? dyn::gravity_vector(model, s.q)
                                    : VectorXd::Zero(model.dof());
  if (gravity_compensation_) c.total += c.gravity;
  return c;
}

VectorXd Controller::compose(const RobotModel& model, const JointState& s, double t) const {
  return compose_detailed(model, s, t).total;
}

Controller::Potentials Controller::potentials(const RobotModel& model, const VectorXd& q,
                                              double t) const {
  Potentials p;
  for (const Module& m : modules_) {
    double u = module_potential(m, model, q, t);
    switch (potential_kind(m)) {
      case PotentialKind::Joint: p.U_q += u; break;
      case PotentialKind::Position: p.U_p += u; break;
      case PotentialKind::Orientation: p.U_r += u; break;
    }
  }
  return p;
}

}  // namespace motorprim::eda
