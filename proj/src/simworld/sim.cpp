#include "objattn/simworld/sim.hpp"

#include <algorithm>
#include <cmath>

namespace objattn::sim {

namespace {

Vec2 clamp_unit(const Vec2& p) { return p.cwiseMax(0.0).cwiseMin(1.0); }

bool pushable(const TaskSpec& task, const SimObject& o) {
  return task.kind == TaskKind::Sweep && o.role != ObjectRole::Dustpan;
}

bool placement_ok(const TaskSpec& task, const SimState& s) {
  for (std::size_t a = 0; a < s.objects.size(); ++a) {
    for (std::size_t b = a + 1; b < s.objects.size(); ++b) {
      const double gap = (s.objects[a].position - s.objects[b].position).norm();
      if (gap < s.objects[a].radius + s.objects[b].radius + task.placement_clearance) return false;
    }
    if (pushable(task, s.objects[a]) &&
        (s.objects[a].position - s.robot.position).norm() < s.objects[a].radius + task.tool_radius) {
      return false;
    }
  }
  return true;
}

}  // namespace

Action clamp_action(const Action& a, double a_max) {
  return {a.velocity.cwiseMax(-a_max).cwiseMin(a_max)};
}

SimState reset(const TaskSpec& task, std::uint64_t condition_seed) {
  task.validate();
  Rng rng = Rng::derive(condition_seed, 0x5e7);
  const bool jittered = (task.robot_start_jitter.array() > 0.0).any() ||
                        std::any_of(task.objects.begin(), task.objects.end(),
                                    [](const ObjectPlacement& o) { return (o.jitter.array() > 0.0).any(); });
  constexpr int kAttempts = 500;
  for (int attempt = 0; attempt < (jittered ? kAttempts : 1); ++attempt) {
    SimState s;
    const Vec2 rj(rng.uniform(-1.0, 1.0) * task.robot_start_jitter.x(),
                  rng.uniform(-1.0, 1.0) * task.robot_start_jitter.y());
    s.robot.position = clamp_unit(task.robot_start + rj);
    for (const auto& p : task.objects) {
      Vec2 offset(rng.uniform(-1.0, 1.0) * p.jitter.x(), rng.uniform(-1.0, 1.0) * p.jitter.y());
      Vec2 pos = p.position + offset;
      if ((p.jitter.array() > 0.0).any()) {
        pos = pos.cwiseMax(p.radius).cwiseMin(1.0 - p.radius);
      }
      s.objects.push_back({p.class_id, p.instance_seed, clamp_unit(pos), p.radius, p.role, p.visible});
    }
    if (placement_ok(task, s)) return s;
  }
  throw PlacementError("cannot place task objects without overlapping footprints (condition " +
                       std::to_string(condition_seed) + ")");
}

SimState step(const TaskSpec& task, const SimState& state, const Action& action) {
  SimState next = state;
  next.t = state.t + 1;
  const Action a = clamp_action(action, task.a_max);
  Vec2 robot = clamp_unit(state.robot.position + a.velocity);

  for (auto& obj : next.objects) {
    if (!pushable(task, obj)) continue;
    const double reach = task.tool_radius + obj.radius;
    Vec2 diff = obj.position - robot;
    double dist = diff.norm();
    if (dist >= reach) continue;
    Vec2 normal;
    if (dist > 1e-12) {
      normal = diff / dist;
    } else if (a.velocity.norm() > 0.0) {
      normal = a.velocity.normalized();
    } else {
      normal = Vec2(1.0, 0.0);
    }
    obj.position = clamp_unit(obj.position + normal * (reach - dist));
    // A wall can stop the object; the tool then backs off instead.
    diff = obj.position - robot;
    dist = diff.norm();
    if (dist < reach) {
      const Vec2 n = dist > 1e-12 ? Vec2(diff / dist) : normal;
      robot = clamp_unit(obj.position - n * reach);
    }
  }
  next.robot.velocity = robot - state.robot.position;
  next.robot.position = robot;
  return next;
}

Scene observe(const SimState& state, const meta::FeatureBank& bank, const meta::ProposerConfig& proposer, Rng& rng) {
  std::vector<meta::TrueObject> truth;
  truth.reserve(state.objects.size());
  for (const auto& o : state.objects) {
    if (!o.visible) continue;
    truth.push_back({o.class_id, o.instance_seed, BoundingBox::around(o.position, o.radius)});
  }
  return meta::propose(truth, bank, proposer, rng, "t" + std::to_string(state.t));
}

const SimObject& object_with_role(const SimState& state, ObjectRole role) {
  for (const auto& o : state.objects)
    if (o.role == role) return o;
  throw LookupError(std::string("no object with role \"") + to_string(role) + "\"");
}

bool success(const TaskSpec& task, std::span<const SimState> trajectory) {
  if (trajectory.empty()) return false;
  if (task.kind == TaskKind::Pour) {
    int run = 0;
    for (const auto& s : trajectory) {
      const Vec2 target = object_with_role(s, ObjectRole::Target).position;
      run = (s.robot.position - target).norm() <= task.pour_radius ? run + 1 : 0;
      if (run >= task.dwell_steps) return true;
    }
    return false;
  }
  const SimState& last = trajectory.back();
  const Vec2 swept = object_with_role(last, ObjectRole::Swept).position;
  const Vec2 pan = object_with_role(last, ObjectRole::Dustpan).position;
  return ((swept - pan).cwiseAbs().array() <= task.dustpan_half_extent.array()).all();
}

double task_distance(const TaskSpec& task, const SimState& state, double robot_weight) {
  if (task.kind == TaskKind::Pour) {
    return (state.robot.position - object_with_role(state, ObjectRole::Target).position).norm();
  }
  const Vec2 swept = object_with_role(state, ObjectRole::Swept).position;
  const Vec2 pan = object_with_role(state, ObjectRole::Dustpan).position;
  return (swept - pan).norm() + robot_weight * (state.robot.position - swept).norm();
}

}  // namespace objattn::sim
