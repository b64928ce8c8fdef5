#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motorprim/csv.hpp"
#include "motorprim/dmp.hpp"
#include "motorprim/errors.hpp"

namespace motorprim::dmp {

using json = nlohmann::ordered_json;

namespace {

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

VectorXd json_vec(const json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

MatrixXd json_mat(const json& rows, Eigen::Index cols_if_empty = 0) {
  if (rows.empty()) return MatrixXd(0, cols_if_empty);
  MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(m.cols())) throw ConfigError("ragged matrix");
    m.row(r) = json_vec(rows[r]).transpose();
  }
  return m;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string model_to_json_text(const DmpModel& m) {
  json doc;
  doc["space"] = to_string(m.space);
  doc["kind"] = to_string(m.canonical.kind);
  doc["alpha_s"] = m.canonical.alpha_s;
  doc["tau"] = m.canonical.tau;
  doc["alpha_z"] = m.alpha_z;
  doc["beta_z"] = m.beta_z;
  doc["centers"] = vec_json(m.basis.c);
  doc["widths"] = vec_json(m.basis.h);
  doc["goal"] = vec_json(m.goal);
  doc["goal_rot"] = mat_json(m.goal_rot.matrix());
  doc["scaling"] = mat_json(m.scaling);
  doc["demo_start"] = vec_json(m.demo_start);
  doc["demo_goal"] = vec_json(m.demo_goal);
  doc["W"] = mat_json(m.W);
  return doc.dump(1) + "\n";
}

DmpModel model_from_json_text(const std::string& text) {
  try {
    json doc = json::parse(text);
    DmpModel m;
    m.space = space_from_string(doc.at("space").get<std::string>());
    Kind kind = kind_from_string(doc.at("kind").get<std::string>());
    m.canonical = {kind, doc.at("alpha_s").get<double>(), doc.at("tau").get<double>()};
    m.alpha_z = doc.at("alpha_z").get<double>();
    m.beta_z = doc.at("beta_z").get<double>();
    m.basis.kind = kind;
    m.basis.c = json_vec(doc.at("centers"));
    m.basis.h = json_vec(doc.at("widths"));
    m.goal = json_vec(doc.at("goal"));
    m.goal_rot = geom::Rotation::from_matrix(json_mat(doc.at("goal_rot")));
    m.scaling = json_mat(doc.at("scaling"));
    m.demo_start = json_vec(doc.at("demo_start"));
    m.demo_goal = json_vec(doc.at("demo_goal"));
    m.W = json_mat(doc.at("W"), m.basis.c.size());
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("dmp model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dmp model: ") + e.what());
  }
}

void save_model(const DmpModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << model_to_json_text(m);
}

DmpModel load_model(const std::string& path) { return model_from_json_text(slurp(path)); }

Demonstration load_demo(const std::string& path, std::optional<double>* period) {
  CsvTable tab = read_csv(path);
  Demonstration d;
  bool have_space = false;
  for (const auto& c : tab.comments) {
    auto colon = c.find(':');
    if (colon == std::string::npos) continue;
    std::string key = c.substr(0, colon);
    std::string val = c.substr(colon + 1);
    val.erase(0, val.find_first_not_of(' '));
    if (key == "space") {
      d.space = space_from_string(val);
      have_space = true;
    } else if (key == "period" && period) {
      try {
        *period = std::stod(val);
      } catch (const std::exception&) {
        throw ConfigError(path + ": bad period '" + val + "'");
      }
    }
  }
  if (!have_space) throw ConfigError(path + ": missing '# space: ...' header line");
  d.t = tab.col("t");
  const std::size_t P = tab.rows.size();

  if (is_orientation(d.space)) {
    auto qw = tab.col("qw"), qx = tab.col("qx"), qy = tab.col("qy"), qz = tab.col("qz");
    for (std::size_t i = 0; i < P; ++i) {
      d.R.push_back(geom::quat_to_rotm(geom::UnitQuat(qw[i], Vec3(qx[i], qy[i], qz[i]))));
    }
    if (tab.column("wx") >= 0) {
      auto wx = tab.col("wx"), wy = tab.col("wy"), wz = tab.col("wz");
      for (std::size_t i = 0; i < P; ++i) d.omega.emplace_back(wx[i], wy[i], wz[i]);
    }
  } else {
    int n = 0;
    while (tab.column("y" + std::to_string(n + 1)) >= 0) ++n;
    if (n == 0) throw ConfigError(path + ": no y1.. columns");
    bool rates = tab.column("yd1") >= 0;
    bool accels = tab.column("ydd1") >= 0;
    auto grab = [&](const std::string& prefix) {
      std::vector<VectorXd> out(P, VectorXd(n));
      for (int j = 0; j < n; ++j) {
        auto col = tab.col(prefix + std::to_string(j + 1));
        for (std::size_t i = 0; i < P; ++i) out[i](j) = col[i];
      }
      return out;
    };
    d.y = grab("y");
    if (rates) d.yd = grab("yd");
    if (accels) d.ydd = grab("ydd");
  }
  d.validate();
  return d;
}

void save_demo(const Demonstration& d, const std::string& path, std::optional<double> period) {
  d.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "# space: " << to_string(d.space) << "\n";
  if (period) out << "# period: " << format_double(*period) << "\n";
  std::vector<double> row;
  if (is_orientation(d.space)) {
    out << "t,qw,qx,qy,qz" << (d.omega.empty() ? "" : ",wx,wy,wz") << "\n";
    geom::UnitQuat prev;
    for (std::size_t i = 0; i < d.size(); ++i) {
      // keep the quaternion sign continuous along the file
      geom::UnitQuat q = geom::rotm_to_quat(d.R[i]);
      if (i > 0 && q.coeffs().dot(prev.coeffs()) < 0.0) q = -q;
      prev = q;
      row = {d.t[i], q.eta(), q.eps()(0), q.eps()(1), q.eps()(2)};
      if (!d.omega.empty()) {
        for (int k = 0; k < 3; ++k) row.push_back(d.omega[i](k));
      }
      write_row(out, row);
    }
    return;
  }
  const auto n = d.y.front().size();
  out << "t";
  for (Eigen::Index j = 1; j <= n; ++j) out << ",y" << j;
  if (!d.yd.empty()) {
    for (Eigen::Index j = 1; j <= n; ++j) out << ",yd" << j;
  }
  if (!d.ydd.empty()) {
    for (Eigen::Index j = 1; j <= n; ++j) out << ",ydd" << j;
  }
  out << "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    row = {d.t[i]};
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(d.y[i](j));
    if (!d.yd.empty()) {
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(d.yd[i](j));
    }
    if (!d.ydd.empty()) {
      for (Eigen::Index j = 0; j < n; ++j) row.push_back(d.ydd[i](j));
    }
    write_row(out, row);
  }
}

Demonstration as_demonstration(const Rollout& r) {
  Demonstration d;
  d.space = r.space;
  d.t = r.t;
  if (is_orientation(r.space)) {
    d.R = r.R;
    for (std::size_t i = 0; i < r.R.size(); ++i) d.omega.push_back(r.R[i] * r.omega_body[i]);
  } else {
    d.y = r.y;
    d.yd = r.yd;
    d.ydd = r.ydd;
  }
  return d;
}

void save_rollout(const Rollout& r, const std::string& path, std::optional<double> period) {
  save_demo(as_demonstration(r), path, period);
}

}  // namespace motorprim::dmp
