#include "objattn/simworld/task.hpp"

#include <cmath>

#include "objattn/core/error.hpp"

namespace objattn::sim {

const char* to_string(TaskKind k) { return k == TaskKind::Pour ? "pour" : "sweep"; }

const char* to_string(ObjectRole r) {
  switch (r) {
    case ObjectRole::Target: return "target";
    case ObjectRole::Swept: return "swept";
    case ObjectRole::Dustpan: return "dustpan";
    case ObjectRole::Distractor: return "distractor";
  }
  return "distractor";
}

namespace {

bool in_unit(const Vec2& p) { return p.allFinite() && (p.array() >= 0.0).all() && (p.array() <= 1.0).all(); }

ObjectRole parse_role(const std::string& s, const std::string& path) {
  if (s == "target") return ObjectRole::Target;
  if (s == "swept") return ObjectRole::Swept;
  if (s == "dustpan") return ObjectRole::Dustpan;
  if (s == "distractor") return ObjectRole::Distractor;
  throw SchemaError(path, "unknown role \"" + s + "\"");
}

}  // namespace

void TaskSpec::validate() const {
  if (horizon < 2) throw ConfigError("task.horizon must be >= 2");
  if (!(a_max > 0.0)) throw ConfigError("task.a_max must be > 0");
  if (!(tool_radius > 0.0)) throw ConfigError("task.tool_radius must be > 0");
  if (!in_unit(robot_start)) throw ConfigError("task.robot_start must lie in [0,1]^2");
  if (!(pour_radius > 0.0)) throw ConfigError("task.pour_radius must be > 0");
  if (!(demo_noise >= 0.0)) throw ConfigError("task.demo_noise must be >= 0");
  if (dwell_steps < 1) throw ConfigError("task.dwell_steps must be >= 1");
  if (!(expert_gain > 0.0)) throw ConfigError("task.expert_gain must be > 0");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string p = "task.objects[" + std::to_string(i) + "]";
    if (!in_unit(o.position)) throw ConfigError(p + ".position must lie in [0,1]^2");
    if (!(o.radius > 0.0)) throw ConfigError(p + ".radius must be > 0");
    if ((o.jitter.array() < 0.0).any()) throw ConfigError(p + ".jitter must be >= 0");
  }
  if (kind == TaskKind::Pour && find_role(ObjectRole::Target) < 0) {
    throw ConfigError("pour task needs an object with role \"target\"");
  }
  if (kind == TaskKind::Sweep && (find_role(ObjectRole::Swept) < 0 || find_role(ObjectRole::Dustpan) < 0)) {
    throw ConfigError("sweep task needs objects with roles \"swept\" and \"dustpan\"");
  }
}

int TaskSpec::find_role(ObjectRole role) const {
  for (std::size_t i = 0; i < objects.size(); ++i)
    if (objects[i].role == role) return static_cast<int>(i);
  return -1;
}

std::vector<std::string> TaskSpec::relevant_classes() const {
  std::vector<std::string> out;
  for (const auto& o : objects)
    if (o.role != ObjectRole::Distractor) out.push_back(o.class_id);
  return out;
}

Json encode_placement(const ObjectPlacement& o) {
  return Json{{"class_id", o.class_id},
              {"instance_seed", o.instance_seed},
              {"position", json_io::from_vector(o.position)},
              {"radius", o.radius},
              {"role", to_string(o.role)},
              {"jitter", json_io::from_vector(o.jitter)},
              {"visible", o.visible}};
}

ObjectPlacement decode_placement(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  ObjectPlacement o;
  o.class_id = json_io::string(j, "class_id", path);
  o.instance_seed = json_io::value_or<std::uint64_t>(j, "instance_seed", 0);
  o.position = json_io::vec2(json_io::require(j, "position", path), path + ".position");
  o.radius = json_io::value_or(j, "radius", o.radius);
  o.role = parse_role(json_io::value_or<std::string>(j, "role", "distractor"), path + ".role");
  if (auto it = j.find("jitter"); it != j.end()) o.jitter = json_io::vec2(*it, path + ".jitter");
  o.visible = json_io::value_or(j, "visible", o.visible);
  return o;
}

Json encode_task(const TaskSpec& t) {
  Json objects = Json::array();
  for (const auto& o : t.objects) objects.push_back(encode_placement(o));
  return Json{{"task_kind", to_string(t.kind)},
              {"objects", std::move(objects)},
              {"horizon", t.horizon},
              {"a_max", t.a_max},
              {"tool_radius", t.tool_radius},
              {"robot_start", json_io::from_vector(t.robot_start)},
              {"robot_start_jitter", json_io::from_vector(t.robot_start_jitter)},
              {"pour_radius", t.pour_radius},
              {"dwell_steps", t.dwell_steps},
              {"dustpan_half_extent", json_io::from_vector(t.dustpan_half_extent)},
              {"expert_gain", t.expert_gain},
              {"placement_clearance", t.placement_clearance},
              {"demo_noise", t.demo_noise}};
}

TaskSpec decode_task(const Json& j, const std::string& path) {
  TaskSpec t;
  const std::string kind = json_io::string(j, "task_kind", path);
  if (kind == "pour") {
    t.kind = TaskKind::Pour;
  } else if (kind == "sweep") {
    t.kind = TaskKind::Sweep;
  } else {
    throw SchemaError(path + ".task_kind", "expected \"pour\" or \"sweep\"");
  }
  const Json& objects = json_io::require(j, "objects", path);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    t.objects.push_back(decode_placement(objects[i], path + ".objects[" + std::to_string(i) + "]"));
  }
  t.horizon = json_io::value_or(j, "horizon", t.horizon);
  t.a_max = json_io::value_or(j, "a_max", t.a_max);
  t.tool_radius = json_io::value_or(j, "tool_radius", t.tool_radius);
  if (auto it = j.find("robot_start"); it != j.end()) t.robot_start = json_io::vec2(*it, path + ".robot_start");
  if (auto it = j.find("robot_start_jitter"); it != j.end()) {
    t.robot_start_jitter = json_io::vec2(*it, path + ".robot_start_jitter");
  }
  t.pour_radius = json_io::value_or(j, "pour_radius", t.pour_radius);
  t.dwell_steps = json_io::value_or(j, "dwell_steps", t.dwell_steps);
  if (auto it = j.find("dustpan_half_extent"); it != j.end()) {
    t.dustpan_half_extent = json_io::vec2(*it, path + ".dustpan_half_extent");
  }
  t.expert_gain = json_io::value_or(j, "expert_gain", t.expert_gain);
  t.placement_clearance = json_io::value_or(j, "placement_clearance", t.placement_clearance);
  t.demo_noise = json_io::value_or(j, "demo_noise", t.demo_noise);
  t.validate();
  return t;
}

}  // namespace objattn::sim
