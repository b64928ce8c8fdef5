#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "motorprim/geom.hpp"

namespace motorprim::dmp {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using geom::Rotation;
using geom::UnitQuat;
using geom::Vec3;

enum class Kind { Discrete, Rhythmic };
enum class Space { Joint, TaskPosition, SO3, H1 };

std::string to_string(Kind k);
std::string to_string(Space s);
Kind kind_from_string(const std::string& s);
Space space_from_string(const std::string& s);
inline bool is_orientation(Space s) { return s == Space::SO3 || s == Space::H1; }

/// Phase clock. Discrete: s = exp(-alpha_s t / tau). Rhythmic: s = (t / tau) mod 2pi,
/// tau = period / 2pi.
struct Canonical {
  Kind kind = Kind::Discrete;
  double alpha_s = 1.0;
  double tau = 1.0;

  double value(double t) const;
  void validate() const;
};

/// Gaussian (discrete) or von Mises (rhythmic) basis.
struct BasisSet {
  Kind kind = Kind::Discrete;
  VectorXd c;
  VectorXd h;

  int size() const { return static_cast<int>(c.size()); }
  /// Normalized activations; the discrete variant includes the factor s.
  VectorXd activations(double s) const;
  void validate() const;

  static BasisSet make_default(Kind kind, int N, double alpha_s = 1.0);
};

/// A learned or hand-built movement primitive. For orientation spaces the
/// state is the exponential coordinate e = Log(R0^T R_G) (or its quaternion
/// counterpart) and its equilibrium is e = 0; goal_rot holds R_G.
struct DmpModel {
  Space space = Space::Joint;
  Canonical canonical;
  BasisSet basis;
  MatrixXd W;  // n x N
  double alpha_z = 10.0;
  double beta_z = 2.5;
  VectorXd goal;       // Joint / TaskPosition
  Rotation goal_rot;   // SO3 / H1
  MatrixXd scaling;    // n x n, S_q / S_p / S_e
  /// Start and goal of the demonstration in the model's coordinates (for
  /// orientation: e at the first sample and zero). Used for re-targeting.
  VectorXd demo_start, demo_goal;

  int dim() const { return static_cast<int>(W.rows()); }
  /// Forcing term F(s) = W a(s), before scaling.
  VectorXd forcing(double s) const;
  void validate() const;
  double period() const;  ///< rhythmic only: 2pi tau
};

struct TransformState {
  VectorXd y;
  VectorXd z;
};

/// Right-hand side (dy/dt, dz/dt) of the transformation system at time t.
TransformState transform_rhs(const DmpModel& m, const TransformState& x, double t);
/// One RK4 step of the transformation system with s(t) in closed form.
TransformState transform_step(const DmpModel& m, const TransformState& x, double t, double dt);

/// Initial transformation-system state from a value and its time derivative
/// (z = tau * rate). For orientation spaces, `value` is e.
TransformState initial_state(const DmpModel& m, const VectorXd& value, const VectorXd& rate);
/// e = Log(R_i^T R_G) for an initial orientation, with zero rate.
TransformState initial_state(const DmpModel& m, const Rotation& R_i);

struct Rollout {
  Space space = Space::Joint;
  std::vector<double> t;
  std::vector<VectorXd> y, yd, ydd;  // coordinates (q, p or e) and their time derivatives
  std::vector<Rotation> R;           // orientation spaces: R0(t) = R_G Exp(e)^T
  std::vector<UnitQuat> quat;        // H1: q_G (x) Exp_H*(e / 2)
  std::vector<Vec3> omega_body;      // orientation spaces: body angular velocity of R0
};

/// Integrates from t = 0 with step dt and records round(duration/dt)+1 samples.
Rollout rollout(const DmpModel& m, double duration, double dt, const TransformState& initial);

/// Demonstration on a uniform grid. Vector spaces fill `y` (and optionally yd,
/// ydd); orientation spaces fill `R` (and optionally spatial `omega`).
struct Demonstration {
  Space space = Space::Joint;
  std::vector<double> t;
  std::vector<VectorXd> y, yd, ydd;
  std::vector<Rotation> R;
  std::vector<Vec3> omega;

  std::size_t size() const { return t.size(); }
  void validate() const;
};

struct LearnOptions {
  Kind kind = Kind::Discrete;
  int N = 50;
  double alpha_s = 1.0;
  double alpha_z = 10.0;
  std::optional<double> beta_z;  ///< defaults to alpha_z / 4
  /// Rhythmic period; required for rhythmic learning.
  std::optional<double> period;
  /// Overrides for the goal (vector spaces), goal orientation and tau. The
  /// defaults come from the demonstration; the overrides exist for relearning
  /// from a rollout, whose endpoint or mean is not the original goal.
  std::optional<VectorXd> goal;
  std::optional<Rotation> goal_rot;
  std::optional<double> tau;
  /// Rhythmic orientation scaling S_e = r I.
  double r = 1.0;
  /// Smoothing window as a fraction of P, used when derivatives are derived
  /// numerically.
  double smooth_fraction = 0.05;
};

struct LearnResult {
  DmpModel model;
  std::vector<int> unlearnable;  ///< orientation coordinates with zero S_e diagonal
  bool regularized = false;      ///< ridge term was added to A A^T
  double rcond = 0.0;            ///< reciprocal condition estimate of A A^T
  std::vector<std::string> warnings;
};

LearnResult imitation_learn(const Demonstration& demo, const LearnOptions& opt);

/// Reproduction error of a rollout against the demonstration it was learned
/// from, sample by sample (the rollout must use the demo grid). Vector spaces:
/// RMS of the Euclidean error; orientation: RMS geodesic distance. Amplitude
/// is the largest per-coordinate peak-to-peak range of the demo coordinates.
struct Reproduction {
  double rmse = 0.0;
  double amplitude = 0.0;
  double relative() const { return amplitude > 0.0 ? rmse / amplitude : rmse; }
};
Reproduction reproduction_error(const Demonstration& demo, const Rollout& r);

/// Rollout over the demo's time grid starting from its first sample and rate.
Rollout replay(const DmpModel& m, const Demonstration& demo, const LearnOptions& opt);

/// Locally weighted regression W = B A^T (A A^T)^-1 with a ridge of
/// 1e-8 tr(A A^T) when rcond(A A^T) < 1e-12.
MatrixXd lwr_solve(const MatrixXd& A, const MatrixXd& B, bool* regularized = nullptr,
                   double* rcond = nullptr);

/// Demo coordinates, rates and accelerations after goal selection; exposed for
/// the relearning oracle and diagnostics.
struct DemoCoordinates {
  std::vector<VectorXd> y, yd, ydd;
  VectorXd goal;
  Rotation goal_rot;
  double tau = 1.0;
};
DemoCoordinates demo_coordinates(const Demonstration& demo, const LearnOptions& opt);

/// Central differences followed by Gaussian smoothing (window = fraction * P
/// samples, sigma = window / 5). `periodic` wraps indices modulo the sample
/// count.
std::vector<VectorXd> smooth_derivative(const std::vector<VectorXd>& x, double dt,
                                        double fraction, bool periodic);

/// S_p = R |p_g - p_i| / |p_g^(d) - p_i^(d)| for re-targeting a discrete
/// position primitive.
MatrixXd position_scaling(const Rotation& R, const Vec3& start, const Vec3& goal,
                          const Vec3& demo_start, const Vec3& demo_goal);
/// S_e = diag(Log(R_i^T R_G)).
MatrixXd orientation_scaling(const Rotation& R_i, const Rotation& R_G);

/// Full-precision JSON dump and load; round trip is bit-exact.
std::string model_to_json_text(const DmpModel& m);
DmpModel model_from_json_text(const std::string& text);
void save_model(const DmpModel& m, const std::string& path);
DmpModel load_model(const std::string& path);

/// Demonstration CSV. Header comment lines: "# space: joint|task_pos|so3|h1"
/// and optionally "# period: <s>". Columns: t, then y1..yn (with optional
/// yd1..ydn, ydd1..ydn) for vector spaces, or qw,qx,qy,qz (with optional
/// wx,wy,wz spatial angular velocity) for orientation spaces.
Demonstration load_demo(const std::string& path, std::optional<double>* period = nullptr);
void save_demo(const Demonstration& d, const std::string& path,
               std::optional<double> period = std::nullopt);

/// Rollout in the demonstration CSV layout (orientation rows carry the
/// spatial angular velocity), so it loads back with load_demo.
Demonstration as_demonstration(const Rollout& r);
void save_rollout(const Rollout& r, const std::string& path,
                  std::optional<double> period = std::nullopt);

}  // namespace motorprim::dmp
