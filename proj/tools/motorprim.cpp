// motorprim command line: scenario runner, singularity scan, DMP learning,
// rollout and CSV plotting.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include "motorprim/csv.hpp"
#include "motorprim/dmp.hpp"
#include "motorprim/errors.hpp"
#include "motorprim/scenarios.hpp"
#include "motorprim/svg.hpp"
#include "motorprim/synthetic.hpp"

namespace fs = std::filesystem;
using namespace motorprim;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUsage = 64;

const char* kUsage =
    "usage: motorprim <command> [options]\n"
    "\n"
    "commands:\n"
    "  run <config> [--out DIR]                 run a scenario file\n"
    "  scan-singularity <model> <threshold>     grid scan of sigma_min of the task inertia inverse\n"
    "      [--points N] [--seed S] [--fix J=V]... [--frame F] [--out DIR]\n"
    "  learn <demo> <space> <out>               fit a DMP to a demonstration CSV\n"
    "      [--kind discrete|rhythmic] [--N 50] [--period T] [--alpha-z 10]\n"
    "  rollout <model-file> [--duration T] [--dt 1e-3] [--out rollout.csv]\n"
    "  plot <csv> [--out plot.svg] [--x t]     plot the columns of a trace or ledger\n"
    "  make-demos <dir>                         write the synthetic demonstration set\n"
    "\n"
    "exit status: 0 ok, 2 configuration error, 3 numerical abort, 64 usage\n";

std::shared_ptr<const chain::RobotModel> model_arg(const std::string& ref) {
  if (ref == "planar") return config::resolve_model("planar2", "");
  if (ref == "iiwa" || ref == "iiwa14") return config::resolve_model("iiwa14_standin", "");
  return config::resolve_model(ref, "");
}

void print_report(const config::json& j) { std::cout << j.dump(2) << "\n"; }

int cmd_run(const std::string& path, const std::string& out) {
  config::ScenarioConfig cfg = config::load_scenario(path);
  const std::string dir = out.empty() ? cfg.output_dir : out;
  scenarios::Result r = scenarios::run_scenario(cfg, dir);
  if (!r.sim.ledger.rows.empty()) std::cout << r.sim.passivity.summary() << "\n";
  print_report(r.report);
  std::cout << "outputs in " << dir << "\n";
  return 0;
}

int cmd_scan(const std::string& model_ref, double threshold, int points, std::optional<std::uint64_t> seed,
             const std::vector<std::string>& fixes, const std::string& frame, const std::string& out) {
  auto model = model_arg(model_ref);
  energy::ScanSpec spec;
  spec.threshold = threshold;
  spec.points_per_joint = points;
  spec.offset_seed = seed;
  if (!fixes.empty()) {
    spec.fixed.assign(model->dof(), std::nullopt);
    for (const auto& f : fixes) {
      auto eq = f.find('=');
      int j = 0;
      double v = 0.0;
      try {
        if (eq == std::string::npos) throw std::invalid_argument("no '='");
        j = std::stoi(f.substr(0, eq));
        v = std::stod(f.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("--fix expects J=VALUE with a 1-based joint index, got '" + f + "'");
      }
      if (j < 1 || j > model->dof()) throw ConfigError("--fix: joint index out of range in '" + f + "'");
      spec.fixed[j - 1] = v;
    }
  }
  try {
    spec.point.frame = model->frame_index(frame);
  } catch (const std::out_of_range&) {
    throw ConfigError("unknown frame '" + frame + "'");
  }
  scenarios::Result r;
  try {
    r = scenarios::scan_and_report(*model, spec, "scan_" + model->name(), out);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::printf("fraction %.6f (%zu of %zu states with sigma_min <= %g)\n", r.report["fraction"].get<double>(),
              r.report["flagged"].get<std::size_t>(), r.report["states"].get<std::size_t>(), threshold);
  std::cout << "point cloud: " << (fs::path(out) / "pointcloud.csv").string() << "\n";
  return 0;
}

int cmd_learn(const std::string& demo_path, const std::string& space, const std::string& out,
              const std::string& kind, int N, std::optional<double> period, double alpha_z) {
  std::optional<double> file_period;
  dmp::Demonstration demo = dmp::load_demo(demo_path, &file_period);
  dmp::Space want;
  try {
    want = dmp::space_from_string(space);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (want != demo.space) {
    throw ConfigError("demo '" + demo_path + "' is in space '" + dmp::to_string(demo.space) + "', not '" +
                      space + "'");
  }
  dmp::LearnOptions opt;
  opt.N = N;
  opt.alpha_z = alpha_z;
  opt.period = period ? period : file_period;
  try {
    opt.kind = dmp::kind_from_string(kind.empty() ? (opt.period ? "rhythmic" : "discrete") : kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  dmp::LearnResult lr;
  try {
    lr = dmp::imitation_learn(demo, opt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  for (const auto& w : lr.warnings) std::cerr << "warning: " << w << "\n";
  if (!lr.unlearnable.empty()) {
    std::string s;
    for (int c : lr.unlearnable) s += " " + std::to_string(c);
    throw ConfigError("unlearnable orientation coordinates:" + s);
  }
  dmp::save_model(lr.model, out);
  dmp::Reproduction rep = dmp::reproduction_error(demo, dmp::replay(lr.model, demo, opt));
  std::printf("learned %s %s DMP, N = %d, reproduction rmse %.3g (%.3g%% of amplitude)%s\n",
              dmp::to_string(opt.kind).c_str(), dmp::to_string(demo.space).c_str(), N, rep.rmse,
              100.0 * rep.relative(), lr.regularized ? ", ridge added" : "");
  std::cout << "model: " << out << "\n";
  return 0;
}

int cmd_rollout(const std::string& path, std::optional<double> duration, double dt, const std::string& out) {
  dmp::DmpModel m;
  try {
    m = dmp::load_model(path);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  const bool rhythmic = m.canonical.kind == dmp::Kind::Rhythmic;
  const double T = duration.value_or(rhythmic ? m.period() : m.canonical.tau);
  if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("duration and dt must be positive");
  dmp::TransformState x0 = dmp::initial_state(m, m.demo_start, Eigen::VectorXd::Zero(m.dim()));
  dmp::Rollout r = dmp::rollout(m, T, dt, x0);
  dmp::save_rollout(r, out, rhythmic ? std::optional<double>(m.period()) : std::nullopt);
  std::printf("rollout of %zu samples over %g s written to %s\n", r.t.size(), T, out.c_str());
  return 0;
}

// one panel per column family (q1, q2, ... share a panel); unsuffixed columns
// share a panel of their own
int cmd_plot(const std::string& path, const std::string& out, const std::string& xname) {
  CsvTable tab;
  try {
    tab = read_csv(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (tab.header.empty() || tab.rows.empty()) throw ConfigError(path + ": no data");
  const std::string xcol = xname.empty() ? tab.header.front() : xname;
  if (tab.column(xcol) < 0) throw ConfigError(path + ": no column '" + xcol + "'");
  std::vector<double> x = tab.col(xcol);
  std::vector<std::string> order;
  std::map<std::string, std::vector<svg::Series>> groups;
  for (const auto& h : tab.header) {
    if (h == xcol) continue;
    std::string fam = h;
    while (!fam.empty() && std::isdigit(static_cast<unsigned char>(fam.back()))) fam.pop_back();
    if (fam == h || fam.empty()) fam = "";
    if (!groups.count(fam)) order.push_back(fam);
    groups[fam].push_back({h, x, tab.col(h)});
  }
  svg::Figure fig(fs::path(path).filename().string());
  for (const auto& fam : order) {
    fig.add(svg::LinePanel{fam.empty() ? "columns" : fam, xcol, fam, groups[fam], false});
  }
  fig.save(out);
  std::cout << "plot: " << out << "\n";
  return 0;
}

int cmd_make_demos(const std::string& dir) {
  using geom::Rotation;
  using geom::Vec3;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir + "'");
  auto at = [&](const char* f) { return (fs::path(dir) / f).string(); };
  const Vec3 ey = Vec3::UnitY(), ez = Vec3::UnitZ(), ex = Vec3::UnitX();
  dmp::save_demo(synthetic::figure_eight(Vec3::Zero(), 0.10, 0.05, ey, ez, 4.0, 401), at("figure_eight.csv"), 4.0);
  dmp::save_demo(synthetic::circle(Vec3::Zero(), 0.04, ey, ez, 2.0, 201), at("circle.csv"), 2.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(3), b(3);
  b << 0.20, -0.10, 0.15;
  dmp::save_demo(synthetic::min_jerk(dmp::Space::TaskPosition, a, b, 2.0, 201), at("reach_min_jerk.csv"));
  dmp::save_demo(synthetic::shaking(dmp::Space::SO3, Rotation::identity(), ex, 0.25, ey, 0.12, 0.0, 1.0, 201),
                 at("shaking.csv"), 1.0);
  // tilted axis so that no goal coordinate is zero (all three learnable)
  const Vec3 pour_axis = Vec3(1.0, 0.25, 0.15).normalized();
  dmp::save_demo(synthetic::orientation_arc(dmp::Space::SO3, Rotation::identity(), pour_axis, 1.6, 0.1, 3.0, 301),
                 at("pouring.csv"));
  std::cout << "demos written to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  static const std::set<std::string> commands = {"run", "scan-singularity", "learn", "rollout", "plot",
                                                 "make-demos"};
  if (argc < 2) {
    std::cerr << kUsage;
    return kExitUsage;
  }
  const std::string first = argv[1];
  if (first == "-h" || first == "--help" || first == "help") {
    std::cout << kUsage;
    return 0;
  }
  if (!commands.count(first)) {
    std::cerr << "unknown command '" << first << "'\n\n" << kUsage;
    return kExitUsage;
  }

  CLI::App app{"motorprim"};
  app.require_subcommand(1);
  std::string out, path, space, kind, frame = "ee", xname;
  double threshold = 0.03, alpha_z = 10.0, dt = 1e-3;
  int points = 30, N = 50;
  std::optional<std::uint64_t> seed;
  std::optional<double> period, duration;
  std::vector<std::string> fixes;

  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("config", path)->required();
  run->add_option("--out", out, "output directory (default: the config's output_dir)");

  auto* scan = app.add_subcommand("scan-singularity", "grid singularity scan");
  scan->add_option("model", path, "planar, iiwa14_standin or a model file")->required();
  scan->add_option("threshold", threshold)->required();
  scan->add_option("--points", points, "grid points per free joint");
  scan->add_option("--seed", seed, "random grid offset seed");
  scan->add_option("--fix", fixes, "hold joint J at VALUE (J=VALUE, 1-based)");
  scan->add_option("--frame", frame);
  scan->add_option("--out", out)->default_val("out/scan");

  auto* learn = app.add_subcommand("learn", "fit a DMP");
  learn->add_option("demo", path)->required();
  learn->add_option("space", space, "joint, task_pos, so3 or h1")->required();
  learn->add_option("out", out)->required();
  learn->add_option("--kind", kind);
  learn->add_option("--N", N);
  learn->add_option("--period", period);
  learn->add_option("--alpha-z", alpha_z);

  auto* roll = app.add_subcommand("rollout", "integrate a saved DMP");
  roll->add_option("model", path)->required();
  roll->add_option("--duration", duration);
  roll->add_option("--dt", dt);
  roll->add_option("--out", out)->default_val("rollout.csv");

  auto* plot = app.add_subcommand("plot", "plot a CSV");
  plot->add_option("csv", path)->required();
  plot->add_option("--out", out)->default_val("plot.svg");
  plot->add_option("--x", xname, "abscissa column (default: the first)");

  auto* demos = app.add_subcommand("make-demos", "write synthetic demonstrations");
  demos->add_option("dir", path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(path, out);
    if (scan->parsed()) return cmd_scan(path, threshold, points, seed, fixes, frame, out);
    if (learn->parsed()) return cmd_learn(path, space, out, kind, N, period, alpha_z);
    if (roll->parsed()) return cmd_rollout(path, duration, dt, out);
    if (plot->parsed()) return cmd_plot(path, out, xname);
    if (demos->parsed()) return cmd_make_demos(path);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
