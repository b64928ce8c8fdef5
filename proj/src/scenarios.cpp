#include "motorprim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "motorprim/csv.hpp"
#include "motorprim/errors.hpp"
#include "motorprim/svg.hpp"

namespace motorprim::scenarios {

namespace fs = std::filesystem;
using Eigen::VectorXd;
using geom::Vec3;

namespace {

constexpr double pi = std::numbers::pi;

double wrap(double a) { return std::remainder(a, 2 * pi); }

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

void prepare_dir(const std::string& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const char* file) { return (fs::path(dir) / file).string(); }

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json passivity_json(const energy::PassivityReport& r) {
  json j;
  j["constant_parameters"] = r.constant;
  j["steps"] = r.steps;
  j["tolerance"] = r.tol;
  j["violations"] = r.violations;
  j["max_step_increase"] = r.max_increase;
  j["negative_margin_steps"] = r.negative_margin_steps;
  j["min_margin"] = r.min_margin;
  j["balance_residual_per_s"] = r.balance_residual_rate;
  j["V_start"] = r.V_start;
  j["V_end"] = r.V_end;
  j["V_span"] = r.V_span;
  return j;
}

json common_metrics(const ScenarioConfig& cfg, const Simulation& sim) {
  json j;
  j["scenario"] = cfg.scenario;
  j["name"] = cfg.name;
  j["model"] = cfg.model->name();
  j["duration"] = cfg.duration;
  j["dt"] = cfg.dt;
  double tau_max = 0.0;
  for (const auto& t : sim.trace.tau_in) tau_max = std::max(tau_max, inf_norm(t));
  j["max_abs_torque"] = tau_max;
  j["final_q"] = vec_json(sim.trace.q.back());
  j["final_qd_norm"] = sim.trace.qd.back().norm();
  j["passivity"] = passivity_json(sim.passivity);
  return j;
}

svg::Series series(const std::string& label, const std::vector<double>& x, std::vector<double> y) {
  return {label, x, std::move(y)};
}

std::vector<double> column(const std::vector<VectorXd>& v, int i) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(x(i));
  return out;
}

void time_series_panels(svg::Figure& fig, const Simulation& sim) {
  const auto& tr = sim.trace;
  const int n = static_cast<int>(tr.q.front().size());
  svg::LinePanel pq{"joint angles", "t (s)", "q (rad)", {}, false};
  svg::LinePanel pt{"commanded torques", "t (s)", "tau (N m)", {}, false};
  for (int i = 0; i < n; ++i) {
    pq.series.push_back(series("q" + std::to_string(i + 1), tr.t, column(tr.q, i)));
    pt.series.push_back(series("tau" + std::to_string(i + 1), tr.t, column(tr.tau_in, i)));
  }
  fig.add(pq);
  fig.add(pt);
  std::vector<double> V, kin;
  for (const auto& e : sim.ledger.rows) {
    V.push_back(e.V);
    kin.push_back(e.T_kin);
  }
  fig.add(svg::LinePanel{"storage function", "t (s)", "energy (J)",
                         {series("V", tr.t, V), series("kinetic", tr.t, kin)}, false});
}

void write_sim_outputs(const Simulation& sim, const std::string& dir) {
  sim.trace.write_csv(join(dir, "trace.csv"));
  sim.ledger.write_csv(join(dir, "ledger.csv"));
}

const eda::TaskPosModule* first_task_module(const eda::Controller& ctl) {
  for (const auto& m : ctl.modules()) {
    if (auto* p = std::get_if<eda::TaskPosModule>(&m)) return p;
  }
  return nullptr;
}

// End-effector (task module point) path and its virtual target, sampled on
// the trace grid.
struct TaskPath {
  std::vector<Vec3> p, p0;
};

TaskPath task_path(const ScenarioConfig& cfg, const eda::Controller& ctl, const dyn::SimTrace& tr) {
  TaskPath out;
  const eda::TaskPosModule* tm = first_task_module(ctl);
  if (!tm) return out;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out.p.push_back(chain::fk_position(*cfg.model, tr.q[k], tm->point));
    out.p0.push_back(tm->vt.eval(tr.t[k]).value);
  }
  return out;
}

void add_path_panel(svg::Figure& fig, const TaskPath& tp, int a, int b, const char* la, const char* lb) {
  if (tp.p.empty()) return;
  svg::Series s{"actual", {}, {}}, s0{"virtual", {}, {}};
  for (std::size_t k = 0; k < tp.p.size(); ++k) {
    s.x.push_back(tp.p[k](a));
    s.y.push_back(tp.p[k](b));
    s0.x.push_back(tp.p0[k](a));
    s0.y.push_back(tp.p0[k](b));
  }
  fig.add(svg::LinePanel{"task-space path", la, lb, {s, s0}, true});
}

// passage of joint `jt` through zero: closest approach, entry into the
// straight band and exit from the singular window afterwards, and the largest
// torque command near the singular set against the largest away from it
struct Passage {
  double min_abs = std::numeric_limits<double>::infinity();
  double t_min = 0.0;
  bool entered = false;
  bool exited = false;
  double near_max = 0.0, away_max = 0.0;
  double spike_ratio() const { return away_max > 0 ? near_max / away_max : 0.0; }
};

Passage passage(const dyn::SimTrace& tr, int jt, double straight_tol, double window) {
  Passage ps;
  std::size_t k_enter = tr.size();
  for (std::size_t k = 0; k < tr.size(); ++k) {
    double a = std::abs(wrap(tr.q[k](jt)));
    if (a < ps.min_abs) {
      ps.min_abs = a;
      ps.t_min = tr.t[k];
    }
    if (a < straight_tol && k_enter == tr.size()) k_enter = k;
    double tau = inf_norm(tr.tau_in[k]);
    if (std::abs(std::sin(tr.q[k](jt))) < std::sin(window)) {
      ps.near_max = std::max(ps.near_max, tau);
    } else {
      ps.away_max = std::max(ps.away_max, tau);
    }
  }
  ps.entered = k_enter < tr.size();
  for (std::size_t k = k_enter; k < tr.size() && !ps.exited; ++k)
    ps.exited = std::abs(wrap(tr.q[k](jt))) > window;
  return ps;
}

// sigma_min over two free joints, for the scan plot
struct SigmaMap {
  const chain::RobotModel& model;
  const energy::ScanSpec& spec;
  const std::vector<std::vector<double>>& axes;

  svg::HeatPanel heat(int i, int j) const {
    const auto rows = spec.rows.empty() ? energy::default_task_rows(model) : spec.rows;
    VectorXd q(model.dof());
    for (int k = 0; k < model.dof(); ++k) q(k) = axes[k].front();
    Eigen::MatrixXd m(axes[i].size(), axes[j].size());
    for (std::size_t a = 0; a < axes[i].size(); ++a) {
      for (std::size_t b = 0; b < axes[j].size(); ++b) {
        q(i) = axes[i][a];
        q(j) = axes[j][b];
        m(a, b) = energy::singularity_sample(model, q, spec.point, rows).sigma_min;
      }
    }
    return svg::HeatPanel{"sigma_min", "q" + std::to_string(i + 1) + " (rad)",
                          "q" + std::to_string(j + 1) + " (rad)", axes[i], axes[j], m, {}};
  }
};

}  // namespace

double angle_distance(const VectorXd& a, const VectorXd& b) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, std::abs(wrap(a(i) - b(i))));
  return d;
}

VectorXd wrench_torque(const chain::RobotModel& model, const VectorXd& q, const chain::FramePoint& pt,
                       const Vec3& force, const Vec3& moment) {
  return chain::jacobian_position(model, q, pt).transpose() * force +
         chain::spatial_jacobian_rotation(model, q, pt.frame).transpose() * moment;
}

Simulation simulate_controller(const ScenarioConfig& cfg, const eda::Controller& ctl) {
  const chain::RobotModel& model = *cfg.model;
  dyn::TorqueLaw law = [&](double t, const chain::JointState& s) { return ctl.compose(model, s, t); };
  Simulation sim;
  sim.trace = dyn::simulate(model, cfg.initial, law, config::wrench_law(cfg.wrenches, model),
                            {cfg.duration, cfg.dt, cfg.gravity});
  sim.ledger = energy::build_ledger(sim.trace, ctl, model, cfg.gravity);
  sim.passivity = energy::passivity_monitor(sim.ledger, energy::constant_parameters(ctl), cfg.dt);
  return sim;
}

Result run_simulate(const ScenarioConfig& cfg, const std::string& out_dir) {
  eda::Controller ctl = config::build_controller(cfg.controller, *cfg.model, cfg.initial, cfg.base_dir);
  Result res;
  res.sim = simulate_controller(cfg, ctl);
  res.report = common_metrics(cfg, res.sim);
  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_sim_outputs(res.sim, out_dir);
    svg::Figure fig(cfg.name);
    time_series_panels(fig, res.sim);
    add_path_panel(fig, task_path(cfg, ctl, res.sim.trace), 0, 1, "x (m)", "y (m)");
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result run_planar_singularity(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  if (model.dof() != 2) throw ConfigError("planar_singularity needs a two-joint model");
  const json& P = cfg.params;
  const double straight_tol = P.value("straight_tol", 0.05);
  const double window = P.value("singular_window", 0.3);
  const int grid_n = P.value("landscape_n", 128);

  eda::Controller ctl = config::build_controller(cfg.controller, model, cfg.initial, cfg.base_dir);
  Result res;
  res.sim = simulate_controller(cfg, ctl);
  const auto& tr = res.sim.trace;
  json j = common_metrics(cfg, res.sim);

  const Passage ps = passage(tr, 1, straight_tol, window);
  const double q2_final = wrap(tr.q.back()(1));

  // global minimum of the final-time potential: grid, then Newton polish
  energy::LandscapeSpec ls;
  ls.n_i = ls.n_j = grid_n;
  ls.t = cfg.duration;
  energy::Landscape L = energy::landscape_grid(ctl, model, ls);
  energy::Minimum gmin = energy::minimize_potential(ctl, model, L.argmin(), cfg.duration);
  energy::Minimum lmin = energy::minimize_potential(ctl, model, tr.q.back(), cfg.duration);

  j["min_abs_q2"] = ps.min_abs;
  j["t_min_abs_q2"] = ps.t_min;
  j["entered_straight"] = ps.entered;
  j["exited_straight"] = ps.exited;
  j["final_q2"] = q2_final;
  j["final_handedness"] = q2_final > 0 ? "left" : "right";
  j["torque_near_singular_max"] = ps.near_max;
  j["torque_quiescent_max"] = ps.away_max;
  j["torque_spike_ratio"] = ps.spike_ratio();
  j["final_grad_norm"] = energy::potential_gradient(ctl, model, tr.q.back(), cfg.duration).norm();
  j["global_min_q"] = vec_json(gmin.q);
  j["global_min_U"] = gmin.U;
  j["final_U"] = energy::potential(ctl, model, tr.q.back(), cfg.duration);
  j["final_to_global_min"] = angle_distance(tr.q.back(), gmin.q);
  j["final_to_local_min"] = angle_distance(tr.q.back(), lmin.q);
  j["landscape_finite"] = L.U.allFinite();
  res.report = j;

  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_sim_outputs(res.sim, out_dir);
    svg::Figure fig(cfg.name);
    time_series_panels(fig, res.sim);
    add_path_panel(fig, task_path(cfg, ctl, tr), 0, 1, "x (m)", "y (m)");
    svg::Series path{"joint path", {}, {}}, mins{"minimum", {wrap(gmin.q(0))}, {wrap(gmin.q(1))}};
    const std::size_t stride = std::max<std::size_t>(1, tr.size() / 400);
    for (std::size_t k = 0; k < tr.size(); k += stride) {
      path.x.push_back(wrap(tr.q[k](0)));
      path.y.push_back(wrap(tr.q[k](1)));
    }
    fig.add(svg::HeatPanel{"potential on the torus (final time)", "q1 (rad)", "q2 (rad)", L.xs, L.ys, L.U,
                           {path, mins}});
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result run_elbow_passage(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  const json& P = cfg.params;
  const int jt = P.value("singular_joint", 4) - 1;
  if (jt < 0 || jt >= model.dof()) throw ConfigError("singular_joint out of range");
  const double straight_tol = P.value("straight_tol", 0.05);
  const double window = P.value("singular_window", 0.3);

  eda::Controller ctl = config::build_controller(cfg.controller, model, cfg.initial, cfg.base_dir);
  Result res;
  res.sim = simulate_controller(cfg, ctl);
  const auto& tr = res.sim.trace;
  json j = common_metrics(cfg, res.sim);
  const Passage ps = passage(tr, jt, straight_tol, window);
  const double qj0 = wrap(tr.q.front()(jt)), qj_final = wrap(tr.q.back()(jt));
  energy::Minimum lmin = energy::minimize_potential(ctl, model, tr.q.back(), cfg.duration);

  j["singular_joint"] = jt + 1;
  j["min_abs_qj"] = ps.min_abs;
  j["t_min_abs_qj"] = ps.t_min;
  j["entered_straight"] = ps.entered;
  j["exited_straight"] = ps.exited;
  j["initial_qj"] = qj0;
  j["final_qj"] = qj_final;
  j["flipped"] = qj0 * qj_final < 0;
  j["torque_near_singular_max"] = ps.near_max;
  j["torque_quiescent_max"] = ps.away_max;
  j["torque_spike_ratio"] = ps.spike_ratio();
  j["final_grad_norm"] = energy::potential_gradient(ctl, model, tr.q.back(), cfg.duration).norm();
  j["final_U"] = energy::potential(ctl, model, tr.q.back(), cfg.duration);
  j["final_to_local_min"] = angle_distance(tr.q.back(), lmin.q);
  j["local_min_U"] = lmin.U;
  res.report = j;

  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_sim_outputs(res.sim, out_dir);
    svg::Figure fig(cfg.name);
    time_series_panels(fig, res.sim);
    add_path_panel(fig, task_path(cfg, ctl, tr), 0, 2, "x (m)", "z (m)");
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result run_redundancy_drift(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  const json& P = cfg.params;
  const double T = P.value("period", 4.0);
  const int steady = P.value("steady_cycles", 3);

  eda::Controller ctl = config::build_controller(cfg.controller, model, cfg.initial, cfg.base_dir);
  Result res;
  res.sim = simulate_controller(cfg, ctl);
  const auto& tr = res.sim.trace;
  json j = common_metrics(cfg, res.sim);

  // joint-space return distance after each full cycle of the target
  const auto per = static_cast<std::size_t>(std::llround(T / cfg.dt));
  std::vector<double> ret;
  for (std::size_t k = per; k < tr.size(); k += per) ret.push_back((tr.q[k] - tr.q[k - per]).norm());
  const int cycles = static_cast<int>(ret.size());
  if (cycles < steady + 1) throw ConfigError("redundancy_drift: duration covers too few cycles");
  double steady_mean = 0.0;
  for (int c = cycles - steady; c < cycles; ++c) steady_mean += ret[c] / steady;

  TaskPath tp = task_path(cfg, ctl, tr);
  double se = 0.0, emax = 0.0;
  std::size_t cnt = 0;
  for (std::size_t k = per; k < tp.p.size(); ++k) {
    double e = (tp.p[k] - tp.p0[k]).norm();
    se += e * e;
    emax = std::max(emax, e);
    ++cnt;
  }
  j["period"] = T;
  j["cycles"] = cycles;
  j["return_distance"] = ret;
  j["return_distance_steady"] = steady_mean;
  j["return_distance_first"] = ret.front();
  j["task_rms_error"] = cnt ? std::sqrt(se / cnt) : 0.0;
  j["task_max_error"] = emax;
  j["joint_displacement_total"] = (tr.q.back() - tr.q.front()).norm();
  res.report = j;

  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_sim_outputs(res.sim, out_dir);
    svg::Figure fig(cfg.name);
    time_series_panels(fig, res.sim);
    add_path_panel(fig, tp, 0, 1, "x (m)", "y (m)");
    std::vector<double> idx;
    for (int c = 1; c <= cycles; ++c) idx.push_back(c);
    fig.add(svg::LinePanel{"per-cycle joint return distance", "cycle", "|q(kT) - q((k-1)T)| (rad)",
                           {series("return", idx, ret)}, false});
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result run_singular_load(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  const json& P = cfg.params;
  const int n = model.dof();
  auto need = [&](const char* key) -> const json& {
    if (!P.contains(key)) throw ConfigError(std::string("singular_load: params.") + key + " missing");
    return P.at(key);
  };
  chain::FramePoint pt;
  try {
    pt.frame = model.frame_index(P.value("frame", std::string("ee")));
  } catch (const std::out_of_range&) {
    throw ConfigError("singular_load: unknown frame");
  }
  if (P.contains("offset")) pt.offset = config::parse_vector(P["offset"], 3, "params.offset");
  const json& w = need("wrench");
  Vec3 f = w.contains("force") ? Vec3(config::parse_vector(w["force"], 3, "wrench.force")) : Vec3::Zero();
  Vec3 m = w.contains("moment") ? Vec3(config::parse_vector(w["moment"], 3, "wrench.moment")) : Vec3::Zero();
  VectorXd limits = P.contains("limits") ? config::parse_vector(P["limits"], n, "params.limits")
                                         : model.tau_max();
  if (!(limits.array() > 0.0).all()) throw ConfigError("singular_load: limits must be positive");
  const double loaded_pct = P.value("loaded_threshold_percent", 0.5);

  struct Posture {
    std::string name;
    VectorXd q, tau, pct;
    double sigma_min;
  };
  std::vector<Posture> ps;
  for (const char* key : {"near_singular_q", "away_q"}) {
    Posture p;
    p.name = key;
    p.q = config::parse_vector(need(key), n, std::string("params.") + key);
    p.tau = wrench_torque(model, p.q, pt, f, m);
    p.pct = 100.0 * p.tau.cwiseAbs().cwiseQuotient(limits);
    p.sigma_min = energy::singularity_sample(model, p.q, pt, energy::default_task_rows(model)).sigma_min;
    ps.push_back(p);
  }
  const Posture& near = ps[0];
  const Posture& away = ps[1];
  std::vector<int> loaded;
  bool ordering = true;
  for (int i = 0; i < n; ++i) {
    if (away.pct(i) > loaded_pct) {
      loaded.push_back(i + 1);
      if (!(near.pct(i) < away.pct(i))) ordering = false;
    }
  }
  json j;
  j["scenario"] = cfg.scenario;
  j["name"] = cfg.name;
  j["model"] = model.name();
  j["force"] = vec_json(f);
  j["moment"] = vec_json(m);
  j["limits"] = vec_json(limits);
  for (const auto& p : ps) {
    j[p.name] = {{"q", vec_json(p.q)},
                 {"torque", vec_json(p.tau)},
                 {"percent_of_limit", vec_json(p.pct)},
                 {"sigma_min", p.sigma_min}};
  }
  j["loaded_joints"] = loaded;
  j["near_below_away_on_loaded"] = ordering;
  Result res;
  res.report = j;

  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    std::ofstream csv(join(out_dir, "torques.csv"));
    if (!csv) throw std::runtime_error("cannot write torques.csv");
    csv << "joint,limit,tau_near,pct_near,tau_away,pct_away\n";
    for (int i = 0; i < n; ++i) {
      write_row(csv, {double(i + 1), limits(i), near.tau(i), near.pct(i), away.tau(i), away.pct(i)});
    }
    std::vector<double> idx;
    for (int i = 1; i <= n; ++i) idx.push_back(i);
    svg::Figure fig(cfg.name);
    fig.add(svg::LinePanel{"torque as percent of limit", "joint", "percent",
                           {series("near-singular", idx, std::vector<double>(near.pct.data(), near.pct.data() + n)),
                            series("away", idx, std::vector<double>(away.pct.data(), away.pct.data() + n))},
                           false});
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result run_modular_imitation(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  const json& P = cfg.params;
  chain::FramePoint tip;
  tip.frame = model.frame_index(P.value("tip_frame", std::string("ee")));
  if (P.contains("tip_offset")) tip.offset = config::parse_vector(P["tip_offset"], 3, "params.tip_offset");

  eda::Controller ctl = config::build_controller(cfg.controller, model, cfg.initial, cfg.base_dir);
  Result res;
  res.sim = simulate_controller(cfg, ctl);
  const auto& tr = res.sim.trace;
  json j = common_metrics(cfg, res.sim);

  std::vector<Vec3> ptip;
  for (const auto& q : tr.q) ptip.push_back(chain::fk_position(model, q, tip));
  // tool-tip excursion from its starting point inside the window
  double w0 = 0.0, w1 = cfg.duration;
  if (P.contains("tip_window")) {
    VectorXd w = config::parse_vector(P["tip_window"], 2, "params.tip_window");
    w0 = w(0);
    w1 = w(1);
  }
  double tip_err = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    if (tr.t[k] >= w0 && tr.t[k] <= w1) tip_err = std::max(tip_err, (ptip[k] - ptip.front()).norm());
  }
  j["tip_error_max"] = tip_err;
  j["tip_window"] = {w0, w1};

  TaskPath tp = task_path(cfg, ctl, tr);
  if (P.contains("closure_period") && !tp.p.empty()) {
    // gap between the last period of the path and the one before it
    const double Pc = P["closure_period"].get<double>();
    const auto per = static_cast<std::size_t>(std::llround(Pc / cfg.dt));
    double gap = 0.0;
    if (tr.size() > 2 * per) {
      for (std::size_t k = tr.size() - per; k < tr.size(); ++k) gap = std::max(gap, (tp.p[k] - tp.p[k - per]).norm());
    }
    j["closure_period"] = Pc;
    j["closure_gap"] = gap;
  }
  if (!tp.p.empty()) {
    double se = 0.0;
    for (std::size_t k = 0; k < tp.p.size(); ++k) se += (tp.p[k] - tp.p0[k]).squaredNorm();
    j["task_rms_error"] = std::sqrt(se / tp.p.size());
  }
  res.report = j;

  if (!out_dir.empty()) {
    prepare_dir(out_dir);
    write_sim_outputs(res.sim, out_dir);
    svg::Figure fig(cfg.name);
    time_series_panels(fig, res.sim);
    const int a = P.value("plot_axes", json::array({0, 1}))[0].get<int>();
    const int b = P.value("plot_axes", json::array({0, 1}))[1].get<int>();
    add_path_panel(fig, tp, a, b, "axis a (m)", "axis b (m)");
    std::vector<double> e;
    for (const auto& p : ptip) e.push_back((p - ptip.front()).norm());
    fig.add(svg::LinePanel{"tool-tip excursion", "t (s)", "|p_tip - p_tip(0)| (m)",
                           {series("tip", tr.t, e)}, false});
    fig.save(join(out_dir, "plot.svg"));
    write_json(res.report, join(out_dir, "report.json"));
  }
  return res;
}

Result scan_and_report(const chain::RobotModel& model, const energy::ScanSpec& spec,
                       const std::string& name, const std::string& out_dir) {
  energy::ScanResult r = energy::singularity_scan(model, spec);
  const auto axes = energy::scan_axes(model, spec);
  json j;
  j["scenario"] = "singularity_scan";
  j["name"] = name;
  j["model"] = model.name();
  j["threshold"] = spec.threshold;
  j["points_per_joint"] = spec.points_per_joint;
  if (spec.offset_seed) j["offset_seed"] = *spec.offset_seed;
  j["states"] = r.states;
  j["flagged"] = r.flagged;
  j["fraction"] = r.fraction;
  j["sigma_floor"] = r.sigma_floor;
  Result res;
  res.report = j;
  if (out_dir.empty()) return res;

  prepare_dir(out_dir);
  r.write_pointcloud_csv(join(out_dir, "pointcloud.csv"));
  svg::Figure fig(name);
  std::vector<double> sig, idx;
  for (const auto& c : r.cloud) sig.push_back(c.sigma_min);
  std::sort(sig.begin(), sig.end());
  for (std::size_t k = 0; k < sig.size(); ++k) idx.push_back(double(k + 1) / r.states);
  fig.add(svg::LinePanel{"flagged states", "fraction of all states", "sigma_min (sorted)",
                         {series("sigma_min", idx, sig)}, false});
  std::vector<int> free;
  for (int i = 0; i < model.dof(); ++i) {
    if (axes[i].size() > 1) free.push_back(i);
  }
  if (free.size() == 2) {
    const SigmaMap view{model, spec, axes};
    fig.add(view.heat(free[0], free[1]));
  }
  fig.save(join(out_dir, "plot.svg"));
  write_json(res.report, join(out_dir, "report.json"));
  return res;
}

Result run_singularity_scan(const ScenarioConfig& cfg, const std::string& out_dir) {
  const chain::RobotModel& model = *cfg.model;
  const json& P = cfg.params;
  const int n = model.dof();
  energy::ScanSpec spec;
  spec.threshold = P.value("threshold", spec.threshold);
  spec.points_per_joint = P.value("points_per_joint", spec.points_per_joint);
  if (P.contains("offset_seed")) spec.offset_seed = P["offset_seed"].get<std::uint64_t>();
  if (P.contains("fixed")) {
    const json& f = P["fixed"];
    if (!f.is_array() || static_cast<int>(f.size()) != n) {
      throw ConfigError("singularity_scan: params.fixed needs one entry (number or null) per joint");
    }
    for (const auto& v : f) spec.fixed.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  }
  try {
    spec.point.frame = model.frame_index(P.value("frame", std::string("ee")));
  } catch (const std::out_of_range&) {
    throw ConfigError("singularity_scan: unknown frame");
  }
  if (P.contains("offset")) spec.point.offset = config::parse_vector(P["offset"], 3, "params.offset");
  if (P.contains("rows")) spec.rows = P["rows"].get<std::vector<int>>();
  try {
    return scan_and_report(model, spec, cfg.name, out_dir);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("singularity_scan: ") + e.what());
  }
}

Result run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (cfg.scenario == "planar_singularity") return run_planar_singularity(cfg, out_dir);
  if (cfg.scenario == "elbow_passage") return run_elbow_passage(cfg, out_dir);
  if (cfg.scenario == "redundancy_drift") return run_redundancy_drift(cfg, out_dir);
  if (cfg.scenario == "singular_load") return run_singular_load(cfg, out_dir);
  if (cfg.scenario == "modular_imitation") return run_modular_imitation(cfg, out_dir);
  if (cfg.scenario == "singularity_scan") return run_singularity_scan(cfg, out_dir);
  if (cfg.scenario == "simulate") return run_simulate(cfg, out_dir);
  throw ConfigError("unknown scenario '" + cfg.scenario + "'");
}

}  // namespace motorprim::scenarios
