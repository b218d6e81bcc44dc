#include "reactsim/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "reactsim/errors.hpp"

namespace reactsim::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Json parse_json(std::string_view text, std::string_view origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw IoError(std::string(origin) + ": " + e.what());
  }
}

void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed, std::string_view path) {
  if (!object.is_object()) throw IoError(std::string(path) + ": expected an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw IoError("unknown key '" + std::string(path) + "." + key + "'");
    }
  }
}

namespace {

const Json& require(const Json& obj, const char* key, std::string_view path) {
  if (!obj.is_object() || !obj.contains(key)) throw IoError(std::string(path) + ": missing key '" + key + "'");
  return obj.at(key);
}

template <typename T>
T get_as(const Json& value, std::string_view path) {
  try {
    return value.get<T>();
  } catch (const Json::exception&) {
    throw IoError(std::string(path) + ": wrong type");
  }
}

template <typename T>
T field(const Json& obj, const char* key, std::string_view path) {
  return get_as<T>(require(obj, key, path), std::string(path) + "." + key);
}

template <typename T>
T field_or(const Json& obj, const char* key, T fallback, std::string_view path) {
  if (!obj.contains(key)) return fallback;
  return get_as<T>(obj.at(key), std::string(path) + "." + key);
}

std::vector<Vec2> points_from(const Json& arr, const std::string& path) {
  if (!arr.is_array()) throw IoError(path + ": expected an array of [x, y]");
  std::vector<Vec2> pts;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto xy = get_as<std::vector<double>>(arr[i], path + "[" + std::to_string(i) + "]");
    if (xy.size() != 2) throw IoError(path + "[" + std::to_string(i) + "]: expected [x, y]");
    pts.push_back({xy[0], xy[1]});
  }
  return pts;
}

Json points_to(std::span<const Vec2> pts) {
  Json arr = Json::array();
  for (const Vec2& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::string color_name(LightColor c) { return c == LightColor::red ? "red" : "green"; }

LightColor color_from(const std::string& name, const std::string& path) {
  if (name == "red") return LightColor::red;
  if (name == "green") return LightColor::green;
  throw IoError(path + ": unknown light color '" + name + "'");
}

}  // namespace

Json map_to_json(const SemanticMap& map) {
  Json doc;
  doc["id"] = map.id();
  Json lanes = Json::array();
  for (const Lane& lane : map.lanes()) {
    Json l;
    l["id"] = lane.id;
    l["centerline"] = points_to(lane.centerline.points());
    l["width"] = lane.width;
    l["successors"] = lane.successors;
    l["light_id"] = lane.light_id ? Json(*lane.light_id) : Json(nullptr);
    l["speed_limit"] = lane.speed_limit;
    lanes.push_back(std::move(l));
  }
  doc["lanes"] = std::move(lanes);
  Json crosswalks = Json::array();
  for (const Crosswalk& c : map.crosswalks()) crosswalks.push_back(points_to(c.polygon));
  doc["crosswalks"] = std::move(crosswalks);
  Json lights = Json::array();
  for (const TrafficLight& light : map.lights()) {
    Json schedule = Json::array();
    for (const LightPhase& p : light.schedule) {
      schedule.push_back(Json{{"start", p.start}, {"end", p.end}, {"color", color_name(p.color)}});
    }
    lights.push_back(Json{{"id", light.id}, {"schedule", std::move(schedule)}});
  }
  doc["lights"] = std::move(lights);
  return doc;
}

SemanticMap map_from_json(const Json& doc, std::string default_id) {
  reject_unknown_keys(doc, {"id", "lanes", "crosswalks", "lights"}, "map");
  std::vector<Lane> lanes;
  const Json& lanes_json = require(doc, "lanes", "map");
  if (!lanes_json.is_array()) throw IoError("map.lanes: expected an array");
  for (std::size_t i = 0; i < lanes_json.size(); ++i) {
    const std::string path = "map.lanes[" + std::to_string(i) + "]";
    const Json& l = lanes_json[i];
    reject_unknown_keys(l, {"id", "centerline", "width", "successors", "light_id", "speed_limit"}, path);
    Lane lane;
    lane.id = field<LaneId>(l, "id", path);
    auto pts = points_from(require(l, "centerline", path), path + ".centerline");
    if (pts.size() < 2) throw DomainError(path + ".centerline: needs at least 2 points");
    lane.centerline = Polyline(std::move(pts));
    lane.width = field_or<double>(l, "width", lane.width, path);
    lane.successors = field_or<std::vector<LaneId>>(l, "successors", {}, path);
    if (l.contains("light_id") && !l.at("light_id").is_null()) lane.light_id = field<LightId>(l, "light_id", path);
    lane.speed_limit = field_or<double>(l, "speed_limit", lane.speed_limit, path);
    if (!(lane.width > 0.0) || !(lane.speed_limit > 0.0)) throw DomainError(path + ": width and speed_limit must be > 0");
    lanes.push_back(std::move(lane));
  }
  std::vector<Crosswalk> crosswalks;
  if (doc.contains("crosswalks")) {
    const Json& arr = doc.at("crosswalks");
    if (!arr.is_array()) throw IoError("map.crosswalks: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      crosswalks.push_back({points_from(arr[i], "map.crosswalks[" + std::to_string(i) + "]")});
    }
  }
  std::vector<TrafficLight> lights;
  if (doc.contains("lights")) {
    const Json& arr = doc.at("lights");
    if (!arr.is_array()) throw IoError("map.lights: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "map.lights[" + std::to_string(i) + "]";
      reject_unknown_keys(arr[i], {"id", "schedule"}, path);
      TrafficLight light;
      light.id = field<LightId>(arr[i], "id", path);
      const Json& sched = require(arr[i], "schedule", path);
      if (!sched.is_array()) throw IoError(path + ".schedule: expected an array");
      for (std::size_t j = 0; j < sched.size(); ++j) {
        const std::string ppath = path + ".schedule[" + std::to_string(j) + "]";
        reject_unknown_keys(sched[j], {"start", "end", "color"}, ppath);
        light.schedule.push_back({field<double>(sched[j], "start", ppath), field<double>(sched[j], "end", ppath),
                                  color_from(field<std::string>(sched[j], "color", ppath), ppath)});
      }
      lights.push_back(std::move(light));
    }
  }
  return SemanticMap(field_or<std::string>(doc, "id", std::move(default_id), "map"), std::move(lanes),
                     std::move(crosswalks), std::move(lights));
}

SemanticMap load_map(const fs::path& path) {
  return map_from_json(parse_json(read_text(path), path.string()), path.stem().string());
}

void save_map(const fs::path& path, const SemanticMap& map) { write_text(path, map_to_json(map).dump(2) + "\n"); }

namespace {

Json agent_to_json(const AgentState& a) {
  return Json{{"id", a.id},
              {"x", a.pose.x},
              {"y", a.pose.y},
              {"yaw", a.pose.yaw},
              {"length", a.extent.length},
              {"width", a.extent.width},
              {"v", a.speed},
              {"kind", std::string(to_string(a.kind))},
              {"active", a.active}};
}

AgentState agent_from_json(const Json& j, const std::string& path) {
  reject_unknown_keys(j, {"id", "x", "y", "yaw", "length", "width", "v", "kind", "active"}, path);
  AgentState a;
  a.id = field<AgentId>(j, "id", path);
  a.pose = {field<double>(j, "x", path), field<double>(j, "y", path), field<double>(j, "yaw", path)};
  a.extent = {field<double>(j, "length", path), field<double>(j, "width", path)};
  a.speed = field<double>(j, "v", path);
  a.kind = agent_kind_from_string(field_or<std::string>(j, "kind", "vehicle", path));
  a.active = field_or<bool>(j, "active", true, path);
  return a;
}

Json agents_to_json(const SimState& s) {
  Json agents = Json::array();
  for (const AgentState& a : s.agents) agents.push_back(agent_to_json(a));
  return agents;
}

std::vector<AgentState> agents_from_json(const Json& arr, const std::string& path) {
  if (!arr.is_array()) throw IoError(path + ": expected an array");
  std::vector<AgentState> out;
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(agent_from_json(arr[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

Json state_to_json(const SimState& state) {
  return Json{{"t", state.step_index}, {"ego_id", state.ego_id}, {"agents", agents_to_json(state)}};
}

SimState state_from_json(const Json& doc, std::string_view path) {
  const std::string p(path);
  reject_unknown_keys(doc, {"t", "ego_id", "agents"}, p);
  SimState s;
  s.step_index = field_or<std::int64_t>(doc, "t", 0, p);
  s.ego_id = field<AgentId>(doc, "ego_id", p);
  s.agents = agents_from_json(require(doc, "agents", p), p + ".agents");
  validate(s);
  return s;
}

std::string episode_to_jsonl(const Episode& e) {
  validate(e);
  const AgentId ego = e.states.front().ego_id;
  for (const SimState& s : e.states) {
    if (s.ego_id != ego) throw DomainError("episode log needs a single ego id");
  }
  std::string out;
  Json header{{"dt", e.dt},
              {"map_id", e.map_id},
              {"ego_id", ego},
              {"version", kEpisodeLogVersion},
              {"termination", std::string(to_string(e.termination))}};
  out += header.dump() + "\n";
  for (const SimState& s : e.states) {
    out += Json{{"t", s.step_index}, {"agents", agents_to_json(s)}}.dump() + "\n";
  }
  return out;
}

Episode episode_from_jsonl(std::string_view text, std::string_view origin) {
  Episode e;
  AgentId ego = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    const Json rec = parse_json(line, where);
    if (!have_header) {
      reject_unknown_keys(rec, {"dt", "map_id", "ego_id", "version", "termination"}, where + " header");
      const int version = field<int>(rec, "version", where);
      if (version != kEpisodeLogVersion) throw IoError(where + ": unsupported log version " + std::to_string(version));
      e.dt = field<double>(rec, "dt", where);
      e.map_id = field<std::string>(rec, "map_id", where);
      ego = field<AgentId>(rec, "ego_id", where);
      e.termination = termination_from_string(field_or<std::string>(rec, "termination", "completed", where));
      if (!(e.dt > 0.0)) throw DomainError(where + ": dt must be > 0");
      have_header = true;
      continue;
    }
    reject_unknown_keys(rec, {"t", "agents"}, where);
    SimState s;
    s.step_index = field<std::int64_t>(rec, "t", where);
    s.ego_id = ego;
    s.agents = agents_from_json(require(rec, "agents", where), where + ".agents");
    e.states.push_back(std::move(s));
  }
  if (!have_header) throw IoError(std::string(origin) + ": missing header");
  validate(e);
  return e;
}

Episode load_episode(const fs::path& path) { return episode_from_jsonl(read_text(path), path.string()); }

void save_episode(const fs::path& path, const Episode& episode) { write_text(path, episode_to_jsonl(episode)); }

std::vector<Episode> load_episode_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Episode> out;
  for (const fs::path& f : files) out.push_back(load_episode(f));
  return out;
}

Json mlp_to_json(const Mlp& model) {
  model.validate();
  Json layers = Json::array();
  for (const DenseLayer& l : model.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    }
    layers.push_back(Json{{"rows", l.weights.rows()},
                          {"cols", l.weights.cols()},
                          {"weights", w},
                          {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return Json{{"layers", std::move(layers)}, {"phi_max", model.phi_max}, {"v_max", model.v_max}};
}

Mlp mlp_from_json(const Json& doc) {
  reject_unknown_keys(doc, {"layers", "phi_max", "v_max"}, "weights");
  Mlp m;
  m.phi_max = field_or<double>(doc, "phi_max", m.phi_max, "weights");
  m.v_max = field_or<double>(doc, "v_max", m.v_max, "weights");
  const Json& layers = require(doc, "layers", "weights");
  if (!layers.is_array() || layers.empty()) throw IoError("weights.layers: expected a non-empty array");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string path = "weights.layers[" + std::to_string(i) + "]";
    reject_unknown_keys(layers[i], {"rows", "cols", "weights", "bias"}, path);
    const auto rows = field<Eigen::Index>(layers[i], "rows", path);
    const auto cols = field<Eigen::Index>(layers[i], "cols", path);
    const auto w = field<std::vector<double>>(layers[i], "weights", path);
    const auto b = field<std::vector<double>>(layers[i], "bias", path);
    if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
        static_cast<Eigen::Index>(b.size()) != rows) {
      throw DomainError(path + ": shape mismatch");
    }
    DenseLayer l{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) l.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      l.bias(r) = b[static_cast<std::size_t>(r)];
    }
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

Mlp load_mlp(const fs::path& path) { return mlp_from_json(parse_json(read_text(path), path.string())); }

void save_mlp(const fs::path& path, const Mlp& model) { write_text(path, mlp_to_json(model).dump(2) + "\n"); }

std::string format_double(double value) {
  // 17 significant digits always round-trip; try shorter ones first.
  char buf[32];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

const std::array<std::pair<const char*, int PlannerReport::*>, 6> kPlannerRows = {{
    {"front_collisions", &PlannerReport::front_collisions},
    {"side_collisions", &PlannerReport::side_collisions},
    {"rear_collisions", &PlannerReport::rear_collisions},
    {"displacement_errors", &PlannerReport::displacement_errors},
    {"passiveness", &PlannerReport::passiveness},
    {"distance_to_reference", &PlannerReport::distance_to_reference},
}};

}  // namespace

Json to_json(const RealismReport& r) {
  return Json{{"metric", "realism"},
              {"horizons", r.horizons},
              {"mean_l2", r.mean_l2},
              {"n_agents", r.n_agents},
              {"n_scenes", r.n_scenes}};
}

Json to_json(const ReactivityReport& r) {
  return Json{{"metric", "reactivity"},
              {"scenes_total", r.scenes_total},
              {"scenes_without_collision", r.scenes_without_collision},
              {"reactivity", r.reactivity}};
}

Json to_json(const PlannerReport& r) {
  Json doc{{"metric", "planner"}, {"scenes", r.scenes}};
  for (const auto& [name, member] : kPlannerRows) doc[name] = r.*member;
  return doc;
}

std::string to_csv(const RealismReport& r) {
  std::string out = "horizon_s,mean_l2_m\n";
  for (std::size_t i = 0; i < r.horizons.size(); ++i) {
    out += format_double(r.horizons[i]) + "," + format_double(r.mean_l2[i]) + "\n";
  }
  return out;
}

std::string to_csv(const ReactivityReport& r) {
  return "metric,value\nscenes_total," + std::to_string(r.scenes_total) + "\nscenes_without_collision," +
         std::to_string(r.scenes_without_collision) + "\nreactivity," + format_double(r.reactivity) + "\n";
}

std::string to_csv(const PlannerReport& r) {
  std::string out = "category,count\n";
  for (const auto& [name, member] : kPlannerRows) out += std::string(name) + "," + std::to_string(r.*member) + "\n";
  return out;
}

std::string summary_table(const RealismReport& r) {
  std::string head = "horizon [s]";
  std::string body = "mean L2 [m]";
  for (std::size_t i = 0; i < r.horizons.size(); ++i) {
    head += pad_left(fixed(r.horizons[i], 1), 7);
    body += pad_left(fixed(r.mean_l2[i], 2), 7);
  }
  return head + "\n" + body + "\n" + "scenes " + std::to_string(r.n_scenes) + ", agents " +
         std::to_string(r.n_agents) + "\n";
}

std::string summary_table(const ReactivityReport& r) {
  return "reactivity " + fixed(r.reactivity, 3) + " (" + std::to_string(r.scenes_without_collision) + "/" +
         std::to_string(r.scenes_total) + " scenes without collision)\n";
}

std::string summary_table(const PlannerReport& r) {
  std::string out;
  for (const auto& [name, member] : kPlannerRows) {
    std::string label = name;
    label.resize(24, ' ');
    out += label + pad_left(std::to_string(r.*member), 6) + "\n";
  }
  return out + "scenes" + std::string(18, ' ') + pad_left(std::to_string(r.scenes), 6) + "\n";
}

}  // namespace reactsim::io
