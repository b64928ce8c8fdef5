#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "motorprim/chain.hpp"
#include "motorprim/errors.hpp"

namespace motorprim::chain {

using json = nlohmann::ordered_json;

namespace {

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Mat3 mat3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3x3 matrix (rows)");
  Mat3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3(j[r]).transpose();
  return m;
}

json to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

json to_json(const Mat3& m) {
  json rows = json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(to_json(Vec3(m.row(r).transpose())));
  return rows;
}

}  // namespace

RobotModel model_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  try {
    const json& joints = doc.at("joints");
    const auto n = static_cast<Eigen::Index>(joints.size());
    std::vector<Vec6> screws;
    std::vector<LinkInertia> links;
    Eigen::VectorXd qmin(n), qmax(n), tmax(n), arm(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& jt = joints[i];
      Vec6 s;
      if (jt.contains("screw")) {
        const json& a = jt["screw"];
        if (a.size() != 6) throw ConfigError("screw must have 6 entries");
        for (int k = 0; k < 6; ++k) s(k) = a[k].get<double>();
      } else {
        Vec3 w = vec3(jt.at("axis"));
        Vec3 p = vec3(jt.at("point"));
        s << w, -w.cross(p);
      }
      screws.push_back(s);
      qmin(i) = jt.at("q_min").get<double>();
      qmax(i) = jt.at("q_max").get<double>();
      tmax(i) = jt.at("tau_max").get<double>();
      arm(i) = jt.value("armature", 0.0);
      const json& l = jt.at("link");
      links.push_back({l.at("mass").get<double>(), vec3(l.at("com")), mat3(l.at("inertia"))});
    }
    std::vector<AttachedFrame> frames;
    for (const json& f : doc.at("frames")) {
      AttachedFrame af;
      af.name = f.at("name").get<std::string>();
      af.link = f.at("link").get<int>();
      af.home.linear() = f.contains("rotation") ? mat3(f["rotation"]) : Mat3::Identity();
      af.home.translation() = vec3(f.at("position"));
      geom::Rotation::from_matrix(af.home.linear());
      frames.push_back(af);
    }
    return RobotModel(doc.at("name").get<std::string>(), std::move(screws), std::move(links),
                      std::move(frames), qmin, qmax, tmax, vec3(doc.at("gravity")), arm);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
}

std::string model_to_json_text(const RobotModel& model) {
  json doc;
  doc["name"] = model.name();
  doc["gravity"] = to_json(model.gravity());
  json joints = json::array();
  for (int i = 0; i < model.dof(); ++i) {
    json jt;
    const Vec6& s = model.screws()[i];
    jt["screw"] = json::array({s(0), s(1), s(2), s(3), s(4), s(5)});
    jt["q_min"] = model.q_min()(i);
    jt["q_max"] = model.q_max()(i);
    jt["tau_max"] = model.tau_max()(i);
    jt["armature"] = model.armature()(i);
    const LinkInertia& l = model.links()[i];
    jt["link"] = {{"mass", l.mass}, {"com", to_json(l.com)}, {"inertia", to_json(l.inertia)}};
    joints.push_back(jt);
  }
  doc["joints"] = joints;
  json frames = json::array();
  for (const auto& f : model.frames()) {
    frames.push_back({{"name", f.name},
                      {"link", f.link},
                      {"position", to_json(Vec3(f.home.translation()))},
                      {"rotation", to_json(Mat3(f.home.linear()))}});
  }
  doc["frames"] = frames;
  return doc.dump(2) + "\n";
}

RobotModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

void save_model(const RobotModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << model_to_json_text(model);
}

}  // namespace motorprim::chain
