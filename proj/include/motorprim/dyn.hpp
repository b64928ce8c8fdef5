#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "motorprim/chain.hpp"
#include "motorprim/errors.hpp"

namespace motorprim::dyn {

using chain::JointState;
using chain::RobotModel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Gravity { Off, On };

/// M q'' + C q' + g = tau. C comes from Christoffel symbols of the first kind,
/// so M' - 2C is skew-symmetric.
struct DynTerms {
  MatrixXd M;
  MatrixXd C;
  VectorXd g;
};

MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q);
/// dM/dq_k for k = 0..n-1, analytic.
std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model, const VectorXd& q);
/// With Gravity::Off, g is the zero vector.
DynTerms dynamics_terms(const RobotModel& model, const VectorXd& q, const VectorXd& qd,
                        Gravity gravity = Gravity::On);

/// g(q) = dU_g/dq for the model's gravity vector.
VectorXd gravity_vector(const RobotModel& model, const VectorXd& q);
/// U_g(q) = -sum m_i g^T c_i(q), zero when all centers of mass are at the base origin.
double gravity_potential(const RobotModel& model, const VectorXd& q);
double kinetic_energy(const RobotModel& model, const JointState& s);

/// Max-row-sum norm of (M' - 2C) + (M' - 2C)^T, with M' from a central
/// difference of M along qd (step h).
double skewness_defect(const RobotModel& model, const VectorXd& q, const VectorXd& qd,
                       double h = 1e-6);

/// Joint accelerations from the manipulator equation (Cholesky solve).
VectorXd forward_dynamics(const RobotModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& tau_in, const VectorXd& tau_ext, Gravity gravity);

/// Torque source evaluated at (t, state). An empty function means zero torque.
using TorqueLaw = std::function<VectorXd(double, const JointState&)>;

/// One classical RK4 step. dt must lie in (0, 1e-2]. Throws NumericalAbort
/// if the new state is not finite.
JointState step(const RobotModel& model, const JointState& s, double t, double dt,
                const TorqueLaw& tau_in, const TorqueLaw& tau_ext, Gravity gravity);

struct SimTrace {
  double dt = 0.0;
  std::vector<double> t;
  std::vector<VectorXd> q, qd, tau_in, tau_ext;
  /// Filled by the energy bookkeeping; written as nan when absent.
  std::vector<double> V, dVdt;

  std::size_t size() const { return t.size(); }
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

struct SimOptions {
  double duration = 1.0;
  double dt = 1e-3;
  Gravity gravity = Gravity::Off;
};

/// Fixed-step RK4 from t = 0. Samples k = 0..round(duration/dt) are recorded;
/// torques in the trace are evaluated at the recorded states.
SimTrace simulate(const RobotModel& model, const JointState& initial, const TorqueLaw& tau_in,
                  const TorqueLaw& tau_ext, const SimOptions& opt);

}  // namespace motorprim::dyn
