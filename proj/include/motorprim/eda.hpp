#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

#include "motorprim/chain.hpp"
#include "motorprim/dmp.hpp"
#include "motorprim/geom.hpp"

namespace motorprim::eda {

using chain::JointState;
using chain::RobotModel;
using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using geom::Rotation;
using geom::Vec3;

enum class VtSpace { Joint, TaskPosition, Orientation };

struct VtSample {
  VectorXd value;
  VectorXd rate;
};

/// Quintic min-jerk profile, clamped to start before t0 and to goal after t0 + D.
VtSample minjerk(const VectorXd& start, const VectorXd& goal, double t0, double D, double t);

struct MinJerk {
  VectorXd start, goal;
  double t0 = 0.0;
  double duration = 1.0;
};

/// center + amplitude * sin(2 pi t / period + phase), componentwise.
struct Oscillation {
  VectorXd center, amplitude;
  double period = 1.0;
  double phase = 0.0;
};

struct Hold {
  VectorXd value;
};

/// Pre-integrated DMP rollout sampled on a uniform grid and read back with
/// cubic Hermite interpolation. Before t_start it holds the initial value,
/// after the table it holds the last value, both with zero rate. For
/// orientation models the summand is -e, i.e. exponential coordinates of
/// R0 = R_G Exp(-e) about R_G; the owning trajectory must use R_G as its
/// reference.
class DmpRef {
 public:
  DmpRef(const dmp::DmpModel& model, const dmp::TransformState& initial, double t_start,
         double duration, double dt = 1e-3);

  VtSample eval(double t) const;
  int dim() const { return static_cast<int>(y_.front().size()); }
  bool orientation() const { return orientation_; }
  const Rotation& goal_rot() const { return goal_rot_; }
  double t_start() const { return t_start_; }
  double t_end() const { return t_start_ + dt_ * (y_.size() - 1); }

 private:
  std::vector<VectorXd> y_, yd_;
  double t_start_, dt_;
  bool orientation_;
  Rotation goal_rot_;
};

using Primitive = std::variant<MinJerk, Oscillation, DmpRef, Hold>;

/// Pointwise sum of primitives. Orientation trajectories sum exponential
/// coordinates e_i about `reference` and map back: R0 = reference Exp(sum e_i).
class VirtualTrajectory {
 public:
  VirtualTrajectory() = default;
  VirtualTrajectory(VtSpace space, int dim, std::vector<Primitive> summands,
                    const Rotation& reference = Rotation::identity());

  static VirtualTrajectory hold(VtSpace space, const VectorXd& value);
  static VirtualTrajectory hold_rotation(const Rotation& R);

  VtSpace space() const { return space_; }
  int dim() const { return dim_; }
  const Rotation& reference() const { return reference_; }
  const std::vector<Primitive>& summands() const { return summands_; }

  /// Vector value and rate (exponential coordinates for orientation).
  VtSample eval(double t) const;

  struct RotSample {
    Rotation R;
    Vec3 omega;  // spatial angular velocity of R0
  };
  RotSample eval_rotation(double t) const;

 private:
  VtSpace space_ = VtSpace::Joint;
  int dim_ = 0;
  std::vector<Primitive> summands_;
  Rotation reference_;
};

struct JointModule {
  MatrixXd K, B;
  VirtualTrajectory vt;
};

struct TaskPosModule {
  Matrix3d K, B;
  chain::FramePoint point;
  VirtualTrajectory vt;
};

/// Trace-form orientation module with co-stiffness G.
struct RotCostiffModule {
  Matrix3d G, B;
  int frame = 0;
  VirtualTrajectory vt;
  bool omega_feedforward = false;
};

/// Unit-quaternion orientation module.
struct RotQuatModule {
  Matrix3d K, B;
  int frame = 0;
  VirtualTrajectory vt;
  bool omega_feedforward = false;
};

/// Log-map orientation module, K' Log(R_B^T R0).
struct RotLogModule {
  Matrix3d K, B;
  int frame = 0;
  VirtualTrajectory vt;
  bool omega_feedforward = false;
};

using Module = std::variant<JointModule, TaskPosModule, RotCostiffModule, RotQuatModule, RotLogModule>;

enum class PotentialKind { Joint, Position, Orientation };
PotentialKind potential_kind(const Module& m);
std::string module_name(const Module& m);

/// Symmetrizes the gain matrices in place and checks PSD (eigenvalues above
/// -1e-10; for co-stiffness the matching stiffness is checked), dimensions,
/// and virtual-trajectory spaces. Throws std::invalid_argument.
void validate(Module& m, const RobotModel& model);

struct ModuleTorque {
  VectorXd stiffness;
  VectorXd damping;
  VectorXd total() const { return stiffness + damping; }
};

ModuleTorque module_torque(const Module& m, const RobotModel& model, const JointState& s, double t);

/// Virtual elastic potential of one module at (q, t), zero at the virtual
/// target: joint and position quadratics, 2 eps^T K eps for the trace and
/// quaternion modules (K = stiffness of G for the former), and
/// 1/2 Log^T K' Log for the log module.
double module_potential(const Module& m, const RobotModel& model, const VectorXd& q, double t);

/// -tr(G R_B^T R0) for a trace-form module, without the tr(G) offset.
double costiff_trace_potential(const RotCostiffModule& m, const RobotModel& model,
                               const VectorXd& q, double t);

/// Sum in an order fixed by the values (lexicographic), so the result does not
/// depend on the order of the inputs.
VectorXd canonical_sum(std::vector<VectorXd> terms);

struct Command {
  VectorXd total;
  VectorXd stiffness;
  VectorXd damping;
  VectorXd gravity;
};

class Controller {
 public:
  Controller(std::vector<Module> modules, bool gravity_compensation, const RobotModel& model);

  const std::vector<Module>& modules() const { return modules_; }
  bool gravity_compensation() const { return gravity_compensation_; }

  VectorXd compose(const RobotModel& model, const JointState& s, double t) const;
  Command compose_detailed(const RobotModel& model, const JointState& s, double t) const;

  /// Sum of module potentials split by kind.
  struct Potentials {
    double U_q = 0.0, U_p = 0.0, U_r = 0.0;
    double total() const { return U_q + U_p + U_r; }
  };
  Potentials potentials(const RobotModel& model, const VectorXd& q, double t) const;

 private:
  std::vector<Module> modules_;
  bool gravity_compensation_;
};

}  // namespace motorprim::eda
