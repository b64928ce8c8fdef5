#pragma once

#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "motorprim/chain.hpp"
#include "motorprim/dyn.hpp"
#include "motorprim/eda.hpp"

namespace motorprim::config {

using json = nlohmann::ordered_json;
using chain::JointState;
using chain::RobotModel;

/// Force and moment (base frame, moment about the point) applied at a point
/// for t in [t0, t1).
struct WrenchPulse {
  chain::FramePoint point;
  double t0 = 0.0, t1 = 0.0;
  geom::Vec3 force = geom::Vec3::Zero();
  geom::Vec3 moment = geom::Vec3::Zero();
};

/// Scenario file contents after validation. See data/configs/README.md for
/// the schema.
struct ScenarioConfig {
  std::string scenario;   // runner kind
  std::string name;       // defaults to the file stem
  std::string base_dir;   // relative paths resolve against this
  std::string model_ref;  // as written in the file
  std::shared_ptr<const RobotModel> model;
  double duration = 0.0;
  double dt = 1e-3;
  dyn::Gravity gravity = dyn::Gravity::Off;
  std::string output_dir;
  JointState initial;
  json controller;  // built on demand, see build_controller
  std::vector<WrenchPulse> wrenches;
  json params;      // runner-specific block
};

/// Reads and validates a scenario file; throws ConfigError.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario(const json& doc, const std::string& base_dir, const std::string& name);

/// "planar2" and "iiwa14_standin" name the built-in models; anything else is a
/// model file path relative to base_dir.
std::shared_ptr<const RobotModel> resolve_model(const std::string& ref, const std::string& base_dir);

std::string resolve_path(const std::string& base_dir, const std::string& path);

/// Controller from a {"gravity_compensation": bool, "modules": [...]} block.
/// "initial" anchors (hold values, orientation references, DMP offsets) are
/// taken from `initial`.
eda::Controller build_controller(const json& spec, const RobotModel& model, const JointState& initial,
                                 const std::string& base_dir);

/// Scalar -> s I, list -> diagonal, list of lists -> full matrix.
Eigen::MatrixXd parse_gain(const json& v, int n, const std::string& what);
Eigen::VectorXd parse_vector(const json& v, int n, const std::string& what);

/// External torque from the wrench schedule, J_p^T f + J_w^T m.
dyn::TorqueLaw wrench_law(const std::vector<WrenchPulse>& pulses, const RobotModel& model);

}  // namespace motorprim::config
