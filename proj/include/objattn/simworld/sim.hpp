#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "objattn/core/error.hpp"
#include "objattn/core/rng.hpp"
#include "objattn/core/types.hpp"
#include "objattn/metaattention/feature_bank.hpp"
#include "objattn/metaattention/proposer.hpp"
#include "objattn/simworld/task.hpp"

namespace objattn::sim {

class PlacementError : public Error {
 public:
  using Error::Error;
};

struct SimObject {
  std::string class_id;
  std::uint64_t instance_seed = 0;
  Vec2 position = Vec2::Zero();
  double radius = 0.04;
  ObjectRole role = ObjectRole::Distractor;
  bool visible = true;
};

struct SimState {
  RobotState robot;
  std::vector<SimObject> objects;
  int t = 0;
};

struct Action {
  Vec2 velocity = Vec2::Zero();
};

/// Component-wise clamp to [-a_max, a_max].
Action clamp_action(const Action& a, double a_max);

/// Places objects with condition-seeded uniform jitter, resampling on
/// footprint overlap. Throws PlacementError when no valid placement is found.
SimState reset(const TaskSpec& task, std::uint64_t condition_seed);

/// Point-mass step. In sweep tasks, objects other than the dustpan that the
/// tool circle overlaps are pushed out along the center-to-center normal.
SimState step(const TaskSpec& task, const SimState& state, const Action& action);

/// Proposals for the current state: true boxes are object footprints.
Scene observe(const SimState& state, const meta::FeatureBank& bank, const meta::ProposerConfig& proposer, Rng& rng);

/// Pour: within pour_radius of the target for dwell_steps consecutive
/// states. Sweep: the swept object's final center lies in the dustpan region.
bool success(const TaskSpec& task, std::span<const SimState> trajectory);

/// Task-relevant distance used for reward shaping.
double task_distance(const TaskSpec& task, const SimState& state, double robot_weight = 0.5);

const SimObject& object_with_role(const SimState& state, ObjectRole role);

}  // namespace objattn::sim
