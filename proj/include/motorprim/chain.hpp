#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <string>
#include <string_view>
#include <vector>

#include "motorprim/geom.hpp"

namespace motorprim::chain {

using geom::Mat3;
using geom::Vec3;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Pose = Eigen::Isometry3d;

/// Mass properties of one link at the home configuration, expressed in the
/// base frame. `inertia` is taken about the center of mass.
struct LinkInertia {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();
};

/// A frame rigidly attached to `link` (1-based; link k moves with joints
/// 1..k). `home` is its pose at q = 0.
struct AttachedFrame {
  std::string name;
  int link = 0;
  Pose home = Pose::Identity();
};

/// Serial chain of revolute (or prismatic) joints described by spatial screw
/// axes [w; v] at the home configuration, product-of-exponentials style.
class RobotModel {
 public:
  RobotModel(std::string name, std::vector<Vec6> screws, std::vector<LinkInertia> links,
             std::vector<AttachedFrame> frames, Eigen::VectorXd q_min, Eigen::VectorXd q_max,
             Eigen::VectorXd tau_max, Vec3 gravity, Eigen::VectorXd armature = {});

  /// Two-link planar arm in the xy-plane, L1 = L2 = 1 m, uniform 1 kg rods.
  static RobotModel planar_2link();
  /// Seven-joint arm with the KUKA iiwa14 axis layout and link lengths.
  /// Link inertias are uniform-cylinder approximations, not vendor data; each
  /// joint carries 0.1 kg m^2 of drive armature.
  static RobotModel iiwa14_standin();

  const std::string& name() const { return name_; }
  int dof() const { return static_cast<int>(screws_.size()); }
  const std::vector<Vec6>& screws() const { return screws_; }
  const std::vector<LinkInertia>& links() const { return links_; }
  const std::vector<AttachedFrame>& frames() const { return frames_; }
  const Eigen::VectorXd& q_min() const { return q_min_; }
  const Eigen::VectorXd& q_max() const { return q_max_; }
  const Eigen::VectorXd& tau_max() const { return tau_max_; }
  const Vec3& gravity() const { return gravity_; }
  /// Reflected drive inertia per joint, added to the diagonal of M.
  const Eigen::VectorXd& armature() const { return armature_; }

  /// Index of the attached frame called `name`; throws std::out_of_range.
  int frame_index(std::string_view name) const;

 private:
  std::string name_;
  std::vector<Vec6> screws_;
  std::vector<LinkInertia> links_;
  std::vector<AttachedFrame> frames_;
  Eigen::VectorXd q_min_, q_max_, tau_max_, armature_;
  Vec3 gravity_;
};

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
};

/// A point with fixed coordinates in an attached frame. The point need not
/// lie on the physical robot.
struct FramePoint {
  int frame = 0;
  Vec3 offset = Vec3::Zero();
};

/// Product-of-exponentials prefix products and spatial joint twists for one
/// configuration. prefix[k] = exp([S1]q1)...exp([Sk]qk); twist[j] is the
/// spatial twist of joint j+1, Ad(prefix[j]) S_{j+1}.
struct ChainPose {
  std::vector<Pose> prefix;
  std::vector<Vec6> twist;
};

ChainPose chain_pose(const RobotModel& model, const Eigen::VectorXd& q);

/// exp([S] theta) for a unit screw.
Pose screw_exp(const Vec6& screw, double theta);
/// Adjoint map of a pose applied to a twist [w; v].
Vec6 adjoint(const Pose& T, const Vec6& twist);
/// Lie bracket [a, b] of twists [w; v].
Vec6 lie_bracket(const Vec6& a, const Vec6& b);

Pose fk_frame(const RobotModel& model, const Eigen::VectorXd& q, int frame);
Vec3 fk_position(const RobotModel& model, const Eigen::VectorXd& q, const FramePoint& pt);
geom::Rotation fk_rotation(const RobotModel& model, const Eigen::VectorXd& q, int frame);

/// 3 x n, pdot = J_p qd.
Eigen::Matrix3Xd jacobian_position(const RobotModel& model, const Eigen::VectorXd& q,
                                   const FramePoint& pt);
/// 3 x n, spatial angular velocity w_s = J qd.
Eigen::Matrix3Xd spatial_jacobian_rotation(const RobotModel& model, const Eigen::VectorXd& q,
                                           int frame);
/// 3 x n, body angular velocity w_b = J qd.
Eigen::Matrix3Xd body_jacobian_rotation(const RobotModel& model, const Eigen::VectorXd& q,
                                        int frame);
/// 3 x n, time derivative of jacobian_position along (q, qd).
Eigen::Matrix3Xd jacobian_position_dot(const RobotModel& model, const Eigen::VectorXd& q,
                                       const Eigen::VectorXd& qd, const FramePoint& pt);
/// 6 x n, rows [J_p; spatial J_r] for the point pt.
Eigen::MatrixXd geometric_jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                                   const FramePoint& pt);

/// J M^{-1} J^T with J = geometric_jacobian(model, q, pt).
Mat6 task_inertia_inverse(const RobotModel& model, const Eigen::VectorXd& q,
                          const FramePoint& pt);

/// Model files are JSON; see data/models/README.md for the schema.
RobotModel load_model(const std::string& path);
RobotModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const RobotModel& model);
void save_model(const RobotModel& model, const std::string& path);

}  // namespace motorprim::chain
