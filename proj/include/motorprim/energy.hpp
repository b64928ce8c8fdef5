#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "motorprim/chain.hpp"
#include "motorprim/dyn.hpp"
#include "motorprim/eda.hpp"

namespace motorprim::energy {

using chain::JointState;
using chain::RobotModel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One row of the storage-function bookkeeping. V = T_kin + U_q + U_p + U_r
/// (+ U_g when gravity acts on the plant and is not compensated).
/// dissipation is the signed damping power qd^T tau_damp; margin is
/// -qd^T tau_damp - dU/dt, so dV/dt = -margin + qd^T tau_ext.
struct LedgerEntry {
  double t = 0.0;
  double T_kin = 0.0;
  double U_q = 0.0, U_p = 0.0, U_r = 0.0, U_g = 0.0;
  double V = 0.0;
  double dVdt = 0.0;
  double dissipation = 0.0;
  double margin = 0.0;
  double dUdt = 0.0;
  double ext_power = 0.0;
  double in_power = 0.0;  // qd^T tau_in
};

/// Single-state entry; dVdt is left at zero and dU/dt comes from a central
/// difference of the controller potential at frozen q with step h.
LedgerEntry potentials(const eda::Controller& ctl, const RobotModel& model, const JointState& s,
                       double t, double h = 1e-6);

struct Ledger {
  std::vector<LedgerEntry> rows;
  void write_csv(std::ostream& out) const;
  void write_csv(const std::string& path) const;
};

/// Rebuilds the ledger along a trace produced with this controller. dU/dt
/// re-evaluates the potential at q_k on the neighbouring time samples; dV/dt
/// is a central difference of V (one-sided at the ends). Also fills
/// trace.V and trace.dVdt.
Ledger build_ledger(dyn::SimTrace& trace, const eda::Controller& ctl, const RobotModel& model,
                    dyn::Gravity plant_gravity);

/// True when every virtual trajectory is a pure hold, i.e. the closed loop is
/// autonomous.
bool constant_parameters(const eda::Controller& ctl);

struct PassivityReport {
  bool constant = true;
  std::size_t steps = 0;
  double tol = 0.0;
  // constant-parameter check: V_{k+1} - V_k - external work > tol
  std::size_t violations = 0;
  double max_increase = 0.0;
  // time-varying check: per-step margin
  std::size_t negative_margin_steps = 0;
  double min_margin = 0.0;
  // |V_end - V_0 - integral of dV/dt terms|, per second
  double balance_residual_rate = 0.0;
  double V_start = 0.0, V_end = 0.0, V_span = 0.0;

  std::string summary() const;
};

PassivityReport passivity_monitor(const Ledger& ledger, bool constant, double dt);

/// Total virtual potential and its gradient (minus the stiffness torques).
double potential(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q, double t);
VectorXd potential_gradient(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q,
                            double t);

struct Minimum {
  VectorXd q;
  double U = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Damped Newton on the controller potential with a finite-difference Hessian
/// of the analytic gradient, shifted to be positive definite, and Armijo
/// backtracking.
Minimum minimize_potential(const eda::Controller& ctl, const RobotModel& model, const VectorXd& q0,
                           double t = 0.0, double grad_tol = 1e-10, int max_iter = 500);

/// Two joints swept on a rectangular grid, the rest held at `base`.
struct LandscapeSpec {
  int axis_i = 0, axis_j = 1;
  double lo_i = -M_PI, hi_i = M_PI, lo_j = -M_PI, hi_j = M_PI;
  int n_i = 64, n_j = 64;
  bool periodic = true;  // drop the hi endpoint, for the torus
  VectorXd base;
  double t = 0.0;

  double value_i(int a) const;
  double value_j(int b) const;
};

struct Landscape {
  std::vector<double> xs, ys;
  MatrixXd U;  // n_i x n_j
  int axis_i = 0, axis_j = 1;
  VectorXd base;

  /// Grid cell with the smallest value, as a full configuration.
  VectorXd argmin() const;
};

/// OpenMP kernel.
Landscape landscape_grid(const eda::Controller& ctl, const RobotModel& model,
                         const LandscapeSpec& spec);
/// Serial reference; bitwise equal to landscape_grid.
Landscape landscape_grid_serial(const eda::Controller& ctl, const RobotModel& model,
                                const LandscapeSpec& spec);

/// Joint grid for the singularity scan. A joint with a fixed value is not
/// swept; the others take points_per_joint values across their limits
/// (inclusive), or, with offset_seed, q_min + (i + u) (q_max - q_min) / N with
/// one uniform u per joint.
struct ScanSpec {
  std::vector<std::optional<double>> fixed;
  int points_per_joint = 30;
  std::optional<std::uint64_t> offset_seed;
  chain::FramePoint point;
  /// Rows of [p; w] kept from Lambda^{-1}; empty means default_task_rows.
  std::vector<int> rows;
  double threshold = 0.03;
};

/// {0, 1} (x, y) for planar chains about z, all six rows otherwise.
std::vector<int> default_task_rows(const RobotModel& model);

std::vector<std::vector<double>> scan_axes(const RobotModel& model, const ScanSpec& spec);

struct CloudPoint {
  double x, y, z, sigma_min;
};

struct ScanResult {
  std::size_t states = 0;
  std::size_t flagged = 0;
  double fraction = 0.0;
  double sigma_floor = 0.0;  // smallest sigma_min seen
  std::vector<CloudPoint> cloud;
  void write_pointcloud_csv(const std::string& path) const;
};

/// Smallest singular value of the selected block of J M^{-1} J^T, and the
/// point position.
CloudPoint singularity_sample(const RobotModel& model, const VectorXd& q,
                              const chain::FramePoint& pt, const std::vector<int>& rows);

/// OpenMP kernel; states are processed in blocks and merged in index order.
ScanResult singularity_scan(const RobotModel& model, const ScanSpec& spec);
/// Serial reference; bitwise equal to singularity_scan.
ScanResult singularity_scan_serial(const RobotModel& model, const ScanSpec& spec);

namespace detail {
/// Fills an empty base with zeros and checks the axes; returns the result
/// shell with xs, ys and an n_i x n_j U.
Landscape prepare_landscape(const RobotModel& model, LandscapeSpec& spec);
double landscape_point(const eda::Controller& ctl, const RobotModel& model,
                       const LandscapeSpec& spec, int a, int b);
struct ScanPlan {
  std::vector<std::vector<double>> axes;
  std::vector<int> rows;
  std::size_t states = 1;
  VectorXd q_at(std::size_t index) const;
};
ScanPlan plan_scan(const RobotModel& model, const ScanSpec& spec);
void check_scan(const ScanSpec& spec);
}  // namespace detail

}  // namespace motorprim::energy
