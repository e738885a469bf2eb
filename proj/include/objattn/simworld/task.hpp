#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "objattn/core/serialization.hpp"
#include "objattn/core/types.hpp"

namespace objattn::sim {

enum class TaskKind { Pour, Sweep };

/// What an object means to the task. Evaluation-only ground truth.
enum class ObjectRole { Target, Swept, Dustpan, Distractor };

const char* to_string(TaskKind k);
const char* to_string(ObjectRole r);

struct ObjectPlacement {
  std::string class_id;
  std::uint64_t instance_seed = 0;
  Vec2 position{0.5, 0.5};
  double radius = 0.04;
  ObjectRole role = ObjectRole::Distractor;
  // Per-condition uniform jitter half-range, per axis.
  Vec2 jitter = Vec2::Zero();
  // Hidden objects are simulated but never proposed (detector failure).
  bool visible = true;
};

struct TaskSpec {
  TaskKind kind = TaskKind::Pour;
  std::vector<ObjectPlacement> objects;
  int horizon = 100;
  double a_max = 0.05;
  double tool_radius = 0.03;
  Vec2 robot_start{0.5, 0.1};
  Vec2 robot_start_jitter = Vec2::Zero();
  // pour
  double pour_radius = 0.05;
  int dwell_steps = 5;
  // sweep: success region is the dustpan position +- this half extent
  Vec2 dustpan_half_extent{0.06, 0.06};
  double expert_gain = 0.5;
  // Std of Gaussian execution noise added to each expert action while
  // demonstrations are recorded (imprecise demonstrator). The recorded
  // action target is the expert's command before the noise.
  double demo_noise = 0.0;
  // Minimum gap between object footprints at reset.
  double placement_clearance = 0.0;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  /// Index of the first placement with `role`, or -1.
  int find_role(ObjectRole role) const;
  /// Ground-truth relevant classes (target, swept, dustpan).
  std::vector<std::string> relevant_classes() const;
};

Json encode_placement(const ObjectPlacement& o);
ObjectPlacement decode_placement(const Json& j, const std::string& path);
Json encode_task(const TaskSpec& t);
TaskSpec decode_task(const Json& j, const std::string& path);

}  // namespace objattn::sim
