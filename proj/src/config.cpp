#include "motorprim/config.hpp"

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "motorprim/dmp.hpp"
#include "motorprim/errors.hpp"

namespace motorprim::config {

namespace fs = std::filesystem;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using geom::Rotation;
using geom::Vec3;

namespace {

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(where + ": missing '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  return v.get<double>();
}

Rotation parse_rotation(const json& v, const Rotation& initial, const std::string& what) {
  if (v.is_string()) {
    if (v.get<std::string>() == "initial") return initial;
    throw ConfigError(what + ": unknown rotation '" + v.get<std::string>() + "'");
  }
  if (v.is_object() && v.contains("axis_angle")) {
    VectorXd aa = parse_vector(v.at("axis_angle"), 4, what);
    Vec3 axis = aa.head<3>();
    if (axis.norm() < 1e-12) throw ConfigError(what + ": zero rotation axis");
    Rotation R = geom::exp_so3(Vec3(axis.normalized() * aa(3)));
    if (v.value("relative_to_initial", false)) R = initial * R;
    return R;
  }
  MatrixXd m = parse_gain(v, 3, what);
  try {
    return Rotation::from_matrix(m, 1e-6);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

struct TargetContext {
  eda::VtSpace space;
  int dim;
  VectorXd initial_value;   // vector spaces
  Rotation initial_rot;     // orientation
  std::string base_dir;
  std::string where;
};

VectorXd value_or_initial(const json& v, const TargetContext& ctx, const std::string& what) {
  if (v.is_string() && v.get<std::string>() == "initial") {
    if (ctx.space == eda::VtSpace::Orientation) {
      return VectorXd::Zero(3);  // exponential coordinates about the reference
    }
    return ctx.initial_value;
  }
  return parse_vector(v, ctx.dim, what);
}

dmp::Space dmp_space_for(eda::VtSpace s) {
  switch (s) {
    case eda::VtSpace::Joint: return dmp::Space::Joint;
    case eda::VtSpace::TaskPosition: return dmp::Space::TaskPosition;
    case eda::VtSpace::Orientation: return dmp::Space::SO3;
  }
  return dmp::Space::Joint;
}

// Learns the primitive from a demonstration file. With anchor set, vector
// demos are shifted to start at zero (so they add to a hold of the initial
// value) and orientation demos are re-expressed to start at the robot's
// initial orientation.
eda::DmpRef parse_dmp(const json& p, const TargetContext& ctx) {
  const std::string what = ctx.where + ".dmp";
  std::optional<double> period;
  dmp::Demonstration demo =
      dmp::load_demo(resolve_path(ctx.base_dir, need(p, "demo", what).get<std::string>()), &period);
  const bool orient = ctx.space == eda::VtSpace::Orientation;
  if (orient != dmp::is_orientation(demo.space) ||
      (!orient && demo.space != dmp_space_for(ctx.space))) {
    throw ConfigError(what + ": demo space '" + dmp::to_string(demo.space) +
                      "' does not match the module");
  }
  if (!orient && static_cast<int>(demo.y.front().size()) != ctx.dim) {
    throw ConfigError(what + ": demo dimension does not match the module");
  }
  if (p.value("anchor", true)) {
    if (orient) {
      Rotation shift = ctx.initial_rot * demo.R.front().transpose();
      for (auto& R : demo.R) R = Rotation::project((shift * R).matrix());
      for (auto& w : demo.omega) w = shift * w;
    } else {
      VectorXd y0 = demo.y.front();
      for (auto& y : demo.y) y -= y0;
    }
  }
  dmp::LearnOptions opt;
  std::string kind = p.value("kind", period ? "rhythmic" : "discrete");
  opt.kind = dmp::kind_from_string(kind);
  opt.period = period;
  if (p.contains("period")) opt.period = number(p["period"], what + ".period");
  opt.N = p.value("N", 50);
  opt.alpha_z = p.value("alpha_z", 10.0);
  if (p.contains("beta_z")) opt.beta_z = number(p["beta_z"], what + ".beta_z");
  dmp::LearnResult lr;
  try {
    lr = dmp::imitation_learn(demo, opt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(what + ": " + e.what());
  }
  if (!lr.unlearnable.empty()) {
    std::ostringstream os;
    os << what << ": unlearnable orientation coordinates:";
    for (int c : lr.unlearnable) os << ' ' << c;
    throw ConfigError(os.str());
  }
  dmp::DemoCoordinates dc = dmp::demo_coordinates(demo, opt);
  dmp::TransformState x0 = dmp::initial_state(lr.model, dc.y.front(), dc.yd.front());
  const double duration = number(need(p, "duration", what), what + ".duration");
  return eda::DmpRef(lr.model, x0, p.value("t_start", 0.0), duration, p.value("dt", 1e-3));
}

void add_primitive(const json& p, const TargetContext& ctx, std::vector<eda::Primitive>& out,
                   std::optional<Rotation>& dmp_goal) {
  const std::string& w = ctx.where;
  if (!p.is_object() || p.size() != 1) throw ConfigError(w + ": each target entry needs exactly one key");
  const std::string key = p.begin().key();
  const json& v = p.begin().value();
  if (key == "hold") {
    out.push_back(eda::Hold{value_or_initial(v, ctx, w + ".hold")});
  } else if (key == "min_jerk") {
    out.push_back(eda::MinJerk{value_or_initial(need(v, "start", w), ctx, w + ".start"),
                               value_or_initial(need(v, "goal", w), ctx, w + ".goal"),
                               v.value("t0", 0.0), number(need(v, "duration", w), w + ".duration")});
  } else if (key == "oscillation") {
    VectorXd center = v.contains("center") ? parse_vector(v["center"], ctx.dim, w + ".center")
                                           : VectorXd::Zero(ctx.dim);
    out.push_back(eda::Oscillation{center, parse_vector(need(v, "amplitude", w), ctx.dim, w + ".amplitude"),
                                   number(need(v, "period", w), w + ".period"), v.value("phase", 0.0)});
  } else if (key == "circle") {
    // r (cos(wt + phase) u + sin(wt + phase) v) about center
    VectorXd center = v.contains("center") ? parse_vector(v["center"], ctx.dim, w + ".center")
                                           : VectorXd::Zero(ctx.dim);
    VectorXd u = parse_vector(need(v, "u", w), ctx.dim, w + ".u");
    VectorXd vv = parse_vector(need(v, "v", w), ctx.dim, w + ".v");
    const double r = number(need(v, "radius", w), w + ".radius");
    const double T = number(need(v, "period", w), w + ".period");
    const double ph = v.value("phase", 0.0);
    out.push_back(eda::Oscillation{center, r * u, T, ph + std::numbers::pi / 2});
    out.push_back(eda::Oscillation{VectorXd::Zero(ctx.dim), r * vv, T, ph});
  } else if (key == "dmp") {
    eda::DmpRef ref = parse_dmp(v, ctx);
    if (ref.orientation()) {
      if (dmp_goal) throw ConfigError(w + ": at most one orientation DMP per module");
      dmp_goal = ref.goal_rot();
    }
    out.push_back(std::move(ref));
  } else {
    throw ConfigError(w + ": unknown target primitive '" + key + "'");
  }
}

eda::VirtualTrajectory parse_target(const json& spec, TargetContext ctx) {
  std::vector<eda::Primitive> prims;
  std::optional<Rotation> dmp_goal;
  json list = spec.is_array() ? spec : json::array({spec});
  for (std::size_t i = 0; i < list.size(); ++i) {
    TargetContext c = ctx;
    c.where = ctx.where + "[" + std::to_string(i) + "]";
    add_primitive(list[i], c, prims, dmp_goal);
  }
  if (prims.empty()) throw ConfigError(ctx.where + ": empty target");
  return eda::VirtualTrajectory(ctx.space, ctx.dim, std::move(prims), dmp_goal.value_or(ctx.initial_rot));
}

chain::FramePoint parse_point(const json& m, const RobotModel& model, const std::string& where) {
  chain::FramePoint pt;
  try {
    pt.frame = model.frame_index(m.value("frame", std::string("ee")));
  } catch (const std::out_of_range&) {
    throw ConfigError(where + ": unknown frame '" + m.value("frame", std::string("ee")) + "'");
  }
  if (m.contains("offset")) pt.offset = parse_vector(m["offset"], 3, where + ".offset");
  return pt;
}

eda::Module parse_module(const json& m, const RobotModel& model, const JointState& init,
                         const std::string& base_dir, const std::string& where) {
  const std::string type = need(m, "type", where).get<std::string>();
  const int n = model.dof();
  TargetContext ctx{eda::VtSpace::Joint, n, init.q, Rotation::identity(), base_dir, where + ".target"};
  if (type == "joint") {
    return eda::JointModule{parse_gain(need(m, "K", where), n, where + ".K"),
                            parse_gain(need(m, "B", where), n, where + ".B"),
                            parse_target(need(m, "target", where), ctx)};
  }
  if (type == "task_position") {
    chain::FramePoint pt = parse_point(m, model, where);
    ctx.space = eda::VtSpace::TaskPosition;
    ctx.dim = 3;
    ctx.initial_value = chain::fk_position(model, init.q, pt);
    return eda::TaskPosModule{parse_gain(need(m, "K", where), 3, where + ".K"),
                              parse_gain(need(m, "B", where), 3, where + ".B"), pt,
                              parse_target(need(m, "target", where), ctx)};
  }
  if (type == "orientation") {
    chain::FramePoint pt = parse_point(m, model, where);
    ctx.space = eda::VtSpace::Orientation;
    ctx.dim = 3;
    Rotation R_init = chain::fk_rotation(model, init.q, pt.frame);
    ctx.initial_rot = m.contains("reference") ? parse_rotation(m["reference"], R_init, where + ".reference")
                                              : R_init;
    ctx.initial_value = VectorXd::Zero(3);
    // a DMP target anchors at the initial orientation, holds at the reference
    TargetContext c = ctx;
    bool has_dmp = false;
    json tgt = need(m, "target", where);
    for (const auto& p : (tgt.is_array() ? tgt : json::array({tgt}))) {
      if (p.is_object() && p.contains("dmp")) has_dmp = true;
    }
    if (has_dmp) c.initial_rot = R_init;
    eda::VirtualTrajectory vt = parse_target(tgt, c);
    const std::string form = m.value("form", std::string("quaternion"));
    MatrixXd B = parse_gain(need(m, "B", where), 3, where + ".B");
    const bool ff = m.value("omega_feedforward", false);
    if (form == "costiffness") {
      MatrixXd G = m.contains("G") ? parse_gain(m["G"], 3, where + ".G")
                                   : MatrixXd(geom::costiffness(parse_gain(need(m, "K", where), 3, where + ".K")));
      return eda::RotCostiffModule{G, B, pt.frame, vt, ff};
    }
    MatrixXd K = parse_gain(need(m, "K", where), 3, where + ".K");
    if (form == "quaternion") return eda::RotQuatModule{K, B, pt.frame, vt, ff};
    if (form == "log") return eda::RotLogModule{K, B, pt.frame, vt, ff};
    throw ConfigError(where + ": unknown orientation form '" + form + "'");
  }
  throw ConfigError(where + ": unknown module type '" + type + "'");
}

}  // namespace

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (fs::path(base_dir) / p).lexically_normal().string();
}

MatrixXd parse_gain(const json& v, int n, const std::string& what) {
  if (v.is_number()) return v.get<double>() * MatrixXd::Identity(n, n);
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(what + ": expected a number, a list of " + std::to_string(n) + " or an " +
                      std::to_string(n) + "x" + std::to_string(n) + " matrix");
  }
  if (v[0].is_number()) return parse_vector(v, n, what).asDiagonal();
  MatrixXd m(n, n);
  for (int r = 0; r < n; ++r) m.row(r) = parse_vector(v[r], n, what).transpose();
  return m;
}

VectorXd parse_vector(const json& v, int n, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(what + ": expected a list of " + std::to_string(n) + " numbers");
  }
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = number(v[i], what);
  return out;
}

std::shared_ptr<const RobotModel> resolve_model(const std::string& ref, const std::string& base_dir) {
  if (ref == "planar2") return std::make_shared<RobotModel>(RobotModel::planar_2link());
  if (ref == "iiwa14_standin") return std::make_shared<RobotModel>(RobotModel::iiwa14_standin());
  std::string path = resolve_path(base_dir, ref);
  if (!fs::exists(path)) throw ConfigError("model file '" + path + "' not found");
  return std::make_shared<RobotModel>(chain::load_model(path));
}

eda::Controller build_controller(const json& spec, const RobotModel& model, const JointState& initial,
                                 const std::string& base_dir) {
  try {
    std::vector<eda::Module> mods;
    const json& list = need(spec, "modules", "controller");
    if (!list.is_array() || list.empty()) throw ConfigError("controller.modules: expected a non-empty list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      mods.push_back(parse_module(list[i], model, initial, base_dir,
                                  "controller.modules[" + std::to_string(i) + "]"));
    }
    return eda::Controller(std::move(mods), spec.value("gravity_compensation", false), model);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("controller: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("controller: ") + e.what());
  }
}

ScenarioConfig parse_scenario(const json& doc, const std::string& base_dir, const std::string& name) {
  try {
    ScenarioConfig c;
    c.base_dir = base_dir;
    c.scenario = need(doc, "scenario", "config").get<std::string>();
    c.name = doc.value("name", name);
    c.params = doc.value("params", json::object());
    c.output_dir = doc.value("output_dir", std::string("out/") + c.name);
    c.model_ref = need(doc, "model", "config").get<std::string>();
    c.model = resolve_model(c.model_ref, base_dir);
    if (c.scenario == "singular_load" || c.scenario == "singularity_scan") return c;  // no simulation block
    const int n = c.model->dof();
    c.duration = number(need(doc, "duration", "config"), "duration");
    c.dt = doc.contains("dt") ? number(doc["dt"], "dt") : 1e-3;
    if (!(c.duration > 0.0)) throw ConfigError("duration must be positive");
    if (!(c.dt > 0.0 && c.dt <= 1e-2)) throw ConfigError("dt must lie in (0, 1e-2]");
    c.gravity = doc.value("gravity", false) ? dyn::Gravity::On : dyn::Gravity::Off;
    const json& init = need(doc, "initial", "config");
    c.initial.q = parse_vector(need(init, "q", "initial"), n, "initial.q");
    c.initial.qd = init.contains("qd") ? parse_vector(init["qd"], n, "initial.qd") : VectorXd::Zero(n);
    c.controller = need(doc, "controller", "config");
    // build once here so that errors surface at load time
    build_controller(c.controller, *c.model, c.initial, base_dir);
    if (doc.contains("external_wrench")) {
      for (const auto& w : doc["external_wrench"]) {
        WrenchPulse p;
        p.point = parse_point(w, *c.model, "external_wrench");
        p.t0 = number(need(w, "t0", "external_wrench"), "external_wrench.t0");
        p.t1 = number(need(w, "t1", "external_wrench"), "external_wrench.t1");
        if (w.contains("force")) p.force = parse_vector(w["force"], 3, "external_wrench.force");
        if (w.contains("moment")) p.moment = parse_vector(w["moment"], 3, "external_wrench.moment");
        c.wrenches.push_back(p);
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  fs::path p(path);
  return parse_scenario(doc, p.parent_path().string(), p.stem().string());
}

dyn::TorqueLaw wrench_law(const std::vector<WrenchPulse>& pulses, const RobotModel& model) {
  if (pulses.empty()) return {};
  return [pulses, &model](double t, const JointState& s) {
    VectorXd tau = VectorXd::Zero(model.dof());
    for (const auto& p : pulses) {
      if (t < p.t0 || t >= p.t1) continue;
      tau += chain::jacobian_position(model, s.q, p.point).transpose() * p.force;
      tau += chain::spatial_jacobian_rotation(model, s.q, p.point.frame).transpose() * p.moment;
    }
    return tau;
  };
}

}  // namespace motorprim::config
