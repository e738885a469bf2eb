#include "objattn/simworld/expert.hpp"

#include <algorithm>
#include <cmath>

namespace objattn::sim {

namespace {

Vec2 cap_norm(const Vec2& v, double limit) {
  const double n = v.norm();
  return n > limit ? Vec2(v * (limit / n)) : v;
}

constexpr double kApproachMargin = 0.02;
constexpr double kLateralGain = 2.0;

Action sweep_expert(const TaskSpec& task, const SimState& state) {
  const SimObject& swept = object_with_role(state, ObjectRole::Swept);
  const Vec2 pan = object_with_role(state, ObjectRole::Dustpan).position;
  const Vec2 o = swept.position;
  const Vec2 robot = state.robot.position;
  const Vec2 to_goal = pan - o;
  const double remaining = to_goal.norm();
  if (remaining < 1e-9) return {};

  const double reach = task.tool_radius + swept.radius;
  const double clear = reach + kApproachMargin;
  const Vec2 u = to_goal / remaining;
  const Vec2 n(-u.y(), u.x());
  const Vec2 e = robot - o;
  const double s = e.dot(u);      // along the push line, negative = behind
  const double l = e.dot(n);      // signed lateral offset
  const double side = l >= 0.0 ? 1.0 : -1.0;

  if (s < -0.5 * reach && std::abs(l) < 0.3 * reach) {
    // Push, steering back onto the line through the object center.
    const Vec2 dir = (u - kLateralGain * (l / reach) * n).normalized();
    const double speed = std::min(task.a_max, task.expert_gain * remaining);
    return {cap_norm(dir * speed, task.a_max)};
  }
  Vec2 waypoint;
  if (s < -0.5 * reach) {
    // Behind but off the line: back off to the clearance distance, then slide in.
    waypoint = s <= -0.9 * clear ? Vec2(o - clear * u) : Vec2(o - clear * u + l * n);
  } else if (std::abs(l) < 0.9 * clear) {
    // Beside or in front: step sideways first so the route never crosses the object.
    waypoint = o + s * u + side * clear * n;
  } else {
    waypoint = o - clear * u + side * clear * n;
  }
  return {cap_norm(waypoint - robot, task.a_max)};
}

}  // namespace

Action scripted_expert(const TaskSpec& task, const SimState& state) {
  if (task.kind == TaskKind::Pour) {
    const Vec2 target = object_with_role(state, ObjectRole::Target).position;
    return {cap_norm(task.expert_gain * (target - state.robot.position), task.a_max)};
  }
  return sweep_expert(task, state);
}

}  // namespace objattn::sim
