#pragma once

#include <string>

#include "motorprim/config.hpp"
#include "motorprim/dyn.hpp"
#include "motorprim/eda.hpp"
#include "motorprim/energy.hpp"

namespace motorprim::scenarios {

using config::json;
using config::ScenarioConfig;

struct Simulation {
  dyn::SimTrace trace;
  energy::Ledger ledger;
  energy::PassivityReport passivity;
};

/// Closed-loop run of the configured plant under `ctl`, with the ledger and
/// passivity report attached.
Simulation simulate_controller(const ScenarioConfig& cfg, const eda::Controller& ctl);

struct Result {
  json report;  // metrics, written as report.json
  Simulation sim;
};

/// Runners. With a non-empty out_dir they write trace.csv, ledger.csv,
/// plot.svg and report.json there (singular_load: report.json, torques.csv and
/// plot.svg).
Result run_planar_singularity(const ScenarioConfig& cfg, const std::string& out_dir);
/// n-joint analog of the planar passage: joint `singular_joint` (1-based)
/// crossing zero under a task stretch and a joint spring on the other branch.
Result run_elbow_passage(const ScenarioConfig& cfg, const std::string& out_dir);
Result run_redundancy_drift(const ScenarioConfig& cfg, const std::string& out_dir);
Result run_singular_load(const ScenarioConfig& cfg, const std::string& out_dir);
Result run_modular_imitation(const ScenarioConfig& cfg, const std::string& out_dir);
/// Singularity scan over the joint grid: pointcloud.csv, plot.svg and
/// report.json (fraction, states, flagged, sigma floor).
Result run_singularity_scan(const ScenarioConfig& cfg, const std::string& out_dir);
Result scan_and_report(const chain::RobotModel& model, const energy::ScanSpec& spec,
                       const std::string& name, const std::string& out_dir);
/// Plain simulation with the common metrics only.
Result run_simulate(const ScenarioConfig& cfg, const std::string& out_dir);

/// Dispatches on cfg.scenario; throws ConfigError for unknown kinds.
Result run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

/// Joint torques J_p^T f + J_w^T m at q for a wrench at pt.
Eigen::VectorXd wrench_torque(const chain::RobotModel& model, const Eigen::VectorXd& q,
                              const chain::FramePoint& pt, const geom::Vec3& force,
                              const geom::Vec3& moment);

/// Smallest |a_i - b_i| modulo 2 pi.
double angle_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace motorprim::scenarios
