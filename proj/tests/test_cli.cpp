#include <doctest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "motorprim/dmp.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kSource = MOTORPRIM_SOURCE_DIR;

struct Outcome {
  int status;
  std::string out;
};

// runs the CLI with stdout and stderr captured to a file
Outcome cli(const std::string& args, const fs::path& dir) {
  fs::path log = dir / "cli.log";
  std::string cmd = std::string("\"") + MOTORPRIM_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "motorprim_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("cli: usage and exit codes") {
  fs::path d = scratch("usage");
  Outcome o = cli("frobnicate", d);
  CHECK(o.status == 64);
  CHECK(o.out.find("usage: motorprim") != std::string::npos);
  CHECK(cli("", d).status == 64);
  CHECK(cli("run", d).status == 64);
  CHECK(cli("--help", d).status == 0);

  CHECK(cli("run " + q(d / "absent.json"), d).status == 2);
  std::ofstream(d / "bad.json") << R"({"scenario": "simulate", "model": "planar2", "duration": 1, "dt": 0.5,
    "initial": {"q": [0, 1]}, "controller": {"modules": []}})";
  CHECK(cli("run " + q(d / "bad.json"), d).status == 2);

  std::ofstream(d / "boom.json") << R"({"scenario": "simulate", "model": "planar2", "duration": 1, "dt": 0.01,
    "initial": {"q": [0.3, 1.2]},
    "controller": {"modules": [{"type": "joint", "K": 1e9, "B": 0, "target": {"hold": [0, 0]}}]}})";
  Outcome boom = cli("run " + q(d / "boom.json") + " --out " + q(d / "boom"), d);
  CHECK(boom.status == 3);
  CHECK(boom.out.find("numerical abort") != std::string::npos);
}

TEST_CASE("cli: run writes trace, ledger and plot") {
  fs::path d = scratch("run");
  Outcome o = cli("run " + q(kSource / "data/configs/fig2_left.json") + " --out " + q(d / "fig2"), d);
  CHECK(o.status == 0);
  CHECK(o.out.find("passivity") != std::string::npos);
  for (const char* f : {"trace.csv", "ledger.csv", "plot.svg", "report.json"}) CHECK(fs::exists(d / "fig2" / f));
}

TEST_CASE("cli: learn, reload, rollout") {
  fs::path d = scratch("learn");
  fs::path model = d / "f8.json";
  Outcome o = cli("learn " + q(kSource / "data/demos/figure_eight.csv") + " task_pos " + q(model), d);
  REQUIRE(o.status == 0);
  motorprim::dmp::DmpModel m = motorprim::dmp::load_model(model.string());
  std::ifstream in(model);
  std::stringstream text;
  text << in.rdbuf();
  CHECK(motorprim::dmp::model_to_json_text(m) == text.str());

  CHECK(cli("learn " + q(kSource / "data/demos/figure_eight.csv") + " so3 " + q(d / "x.json"), d).status == 2);
  CHECK(cli("learn " + q(kSource / "data/demos/figure_eight.csv") + " quaternionic " + q(d / "x.json"), d).status == 2);

  CHECK(cli("rollout " + q(model) + " --out " + q(d / "roll.csv"), d).status == 0);
  std::optional<double> period;
  motorprim::dmp::Demonstration r = motorprim::dmp::load_demo((d / "roll.csv").string(), &period);
  CHECK(r.space == motorprim::dmp::Space::TaskPosition);
  REQUIRE(period);
  CHECK(*period == doctest::Approx(4.0));
  CHECK(cli("rollout " + q(d / "nothing.json"), d).status != 0);

  CHECK(cli("plot " + q(d / "roll.csv") + " --out " + q(d / "roll.svg"), d).status == 0);
  CHECK(fs::exists(d / "roll.svg"));
  CHECK(cli("plot " + q(d / "roll.csv") + " --x nope --out " + q(d / "x.svg"), d).status == 2);
}

TEST_CASE("cli: scan-singularity planar") {
  fs::path d = scratch("scan");
  Outcome o = cli("scan-singularity planar 0.03 --points 91 --out " + q(d), d);
  CHECK(o.status == 0);
  CHECK(o.out.find("fraction") != std::string::npos);
  CHECK(fs::exists(d / "pointcloud.csv"));
  CHECK(cli("scan-singularity planar -1 --out " + q(d), d).status == 2);
  CHECK(cli("scan-singularity planar 0.03 --fix 9=0 --out " + q(d), d).status == 2);
}
