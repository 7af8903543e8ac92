#include "eikf/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace eikf {

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const Json& j, const char* key) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ConfigError, std::string(key) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

std::string cost_name(CostForm c) { return c == CostForm::Printed ? "printed" : "map"; }

CostForm cost_from_name(const std::string& s) {
  if (s == "printed") return CostForm::Printed;
  if (s == "map") return CostForm::Map;
  throw Error(ErrorCode::ConfigError, "update.cost must be 'printed' or 'map'");
}

SweepAxis sweep_from_name(const std::string& s) {
  for (auto a : {SweepAxis::None, SweepAxis::Landmarks, SweepAxis::Noise, SweepAxis::InitScale}) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::ConfigError, "unknown sweep axis '" + s + "'");
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Rejects keys absent from the defaults and values of the wrong JSON type.
void check_against(const Json& user, const Json& defaults, const std::string& prefix) {
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!defaults.contains(it.key())) throw Error(ErrorCode::ConfigError, "unknown key " + path);
    const Json& d = defaults.at(it.key());
    if (!same_kind(it.value(), d)) throw Error(ErrorCode::ConfigError, "wrong type for " + path);
    if (d.is_object()) check_against(it.value(), d, path);
  }
}

}  // namespace

Json to_json(const ScenarioConfig& c) {
  Json j;
  j["name"] = c.name;
  j["sensor"] = to_string(c.sensor);
  j["duration"] = c.duration;
  j["imu_rate"] = c.imu_rate;
  j["cam_rate"] = c.cam_rate;
  j["lidar_rate"] = c.lidar_rate;
  j["trajectory"] = {{"amplitude", vec_json(c.trajectory.amplitude)},
                     {"freq_xy", c.trajectory.freq_xy},
                     {"freq_z", c.trajectory.freq_z},
                     {"y_uses_sin", c.trajectory.y_uses_sin},
                     {"body_rate", vec_json(c.trajectory.body_rate)}};
  j["landmarks"] = c.landmarks;
  j["landmark_box"] = {{"lo", vec_json(c.landmark_box.lo)}, {"hi", vec_json(c.landmark_box.hi)}};
  j["planes"] = {{"room_half_extent", vec_json(c.planes.room_half_extent)},
                 {"patch_min_range", c.planes.patch_min_range},
                 {"patch_max_range", c.planes.patch_max_range},
                 {"patch_half_size", c.planes.patch_half_size}};
  j["min_depth"] = c.min_depth;
  j["noise"] = {{"sigma_g", c.noise.sigma_g},         {"sigma_a", c.noise.sigma_a},
                {"sigma_bg", c.noise.sigma_bg},       {"sigma_ba", c.noise.sigma_ba},
                {"sigma_camera", c.noise.sigma_camera}, {"sigma_lidar", c.noise.sigma_lidar}};
  j["init"] = {{"position_dev", vec_json(c.init_position_dev)},
               {"rpy_dev", vec_json(c.init_rpy_dev)},
               {"deviation_scale", c.deviation_scale},
               {"sigma_theta", c.init_sigma_theta},
               {"sigma_p", c.init_sigma_p},
               {"sigma_v", c.init_sigma_v},
               {"sigma_bg", c.init_sigma_bg},
               {"sigma_ba", c.init_sigma_ba}};
  Json filters = Json::array();
  for (auto v : c.filters) filters.push_back(to_string(v));
  j["filters"] = filters;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["sweep"] = {{"axis", to_string(c.sweep)}, {"values", c.sweep_values}};
  j["update"] = {{"l_max", c.update.l_max},
                 {"tau", c.update.tau},
                 {"N_threshold", c.update.N_threshold},
                 {"cost", cost_name(c.update.cost)},
                 {"use_configured_sigma", c.update.use_configured_sigma},
                 {"sigma_floor", c.update.sigma_floor}};
  j["gravity"] = vec_json(c.gravity);
  j["intrinsics"] = {{"fx", c.intrinsics.fx}, {"fy", c.intrinsics.fy},
                     {"u0", c.intrinsics.u0}, {"v0", c.intrinsics.v0},
                     {"width", c.intrinsics.width}, {"height", c.intrinsics.height}};
  j["divergence_threshold"] = c.divergence_threshold;
  return j;
}

ScenarioConfig config_from_json(const Json& user) {
  if (!user.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  Json j = to_json(ScenarioConfig{});
  check_against(user, j, "");
  j.merge_patch(user);
  try {
    ScenarioConfig c;
    c.name = j["name"].get<std::string>();
    const auto sensor = j["sensor"].get<std::string>();
    if (sensor != "camera" && sensor != "lidar") {
      throw Error(ErrorCode::ConfigError, "sensor must be 'camera' or 'lidar'");
    }
    c.sensor = sensor == "camera" ? SensorKind::Camera : SensorKind::Lidar;
    c.duration = j["duration"].get<double>();
    c.imu_rate = j["imu_rate"].get<double>();
    c.cam_rate = j["cam_rate"].get<double>();
    c.lidar_rate = j["lidar_rate"].get<double>();
    const Json& tr = j["trajectory"];
    c.trajectory.amplitude = vec_from(tr["amplitude"], "trajectory.amplitude");
    c.trajectory.freq_xy = tr["freq_xy"].get<double>();
    c.trajectory.freq_z = tr["freq_z"].get<double>();
    c.trajectory.y_uses_sin = tr["y_uses_sin"].get<bool>();
    c.trajectory.body_rate = vec_from(tr["body_rate"], "trajectory.body_rate");
    c.landmarks = j["landmarks"].get<int>();
    c.landmark_box.lo = vec_from(j["landmark_box"]["lo"], "landmark_box.lo");
    c.landmark_box.hi = vec_from(j["landmark_box"]["hi"], "landmark_box.hi");
    const Json& pl = j["planes"];
    c.planes.room_half_extent = vec_from(pl["room_half_extent"], "planes.room_half_extent");
    c.planes.patch_min_range = pl["patch_min_range"].get<double>();
    c.planes.patch_max_range = pl["patch_max_range"].get<double>();
    c.planes.patch_half_size = pl["patch_half_size"].get<double>();
    c.min_depth = j["min_depth"].get<double>();
    const Json& n = j["noise"];
    c.noise.sigma_g = n["sigma_g"].get<double>();
    c.noise.sigma_a = n["sigma_a"].get<double>();
    c.noise.sigma_bg = n["sigma_bg"].get<double>();
    c.noise.sigma_ba = n["sigma_ba"].get<double>();
    c.noise.sigma_camera = n["sigma_camera"].get<double>();
    c.noise.sigma_lidar = n["sigma_lidar"].get<double>();
    const Json& in = j["init"];
    c.init_position_dev = vec_from(in["position_dev"], "init.position_dev");
    c.init_rpy_dev = vec_from(in["rpy_dev"], "init.rpy_dev");
    c.deviation_scale = in["deviation_scale"].get<double>();
    c.init_sigma_theta = in["sigma_theta"].get<double>();
    c.init_sigma_p = in["sigma_p"].get<double>();
    c.init_sigma_v = in["sigma_v"].get<double>();
    c.init_sigma_bg = in["sigma_bg"].get<double>();
    c.init_sigma_ba = in["sigma_ba"].get<double>();
    c.filters.clear();
    for (const auto& f : j["filters"]) c.filters.push_back(filter_variant_from_string(f.get<std::string>()));
    c.trials = j["trials"].get<int>();
    c.seed = j["seed"].get<std::uint64_t>();
    c.sweep = sweep_from_name(j["sweep"]["axis"].get<std::string>());
    c.sweep_values = j["sweep"]["values"].get<std::vector<double>>();
    const Json& u = j["update"];
    c.update.l_max = u["l_max"].get<int>();
    c.update.tau = u["tau"].get<double>();
    c.update.N_threshold = u["N_threshold"].get<int>();
    c.update.cost = cost_from_name(u["cost"].get<std::string>());
    c.update.use_configured_sigma = u["use_configured_sigma"].get<bool>();
    c.update.sigma_floor = u["sigma_floor"].get<double>();
    c.gravity = vec_from(j["gravity"], "gravity");
    const Json& k = j["intrinsics"];
    c.intrinsics.fx = k["fx"].get<double>();
    c.intrinsics.fy = k["fy"].get<double>();
    c.intrinsics.u0 = k["u0"].get<double>();
    c.intrinsics.v0 = k["v0"].get<double>();
    c.intrinsics.width = k["width"].get<int>();
    c.intrinsics.height = k["height"].get<int>();
    c.divergence_threshold = j["divergence_threshold"].get<double>();
    validate(c);
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

Json load_config_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ConfigError, "cannot parse '" + path + "': " + e.what());
  }
  if (j.is_object() && j.contains("config") && j.contains("config_hash")) return j["config"];
  return j;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(ErrorCode::ConfigError, "override must look like key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &j;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) throw Error(ErrorCode::ConfigError, "override path not an object: " + path);
    node = &(*node)[keys[i]];
  }
  (*node)[keys.back()] = value;
}

std::string canonical_dump(const Json& j) { return j.dump(); }

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_dump(j)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace eikf
