#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "objattn/attention/model.hpp"
#include "objattn/policy/policy.hpp"

namespace objattn::policy {

struct RewardShaping {
  double distance_weight = 1.0;
  // Sweep only: weight of the tool-to-object distance inside task_distance.
  double robot_weight = 0.5;
  double success_bonus = 10.0;
};

struct RolloutResult {
  std::vector<sim::SimState> trajectory;  // horizon + 1 states
  bool success = false;
  double reward = 0.0;
  // Per step, the proposal index each attention row selected.
  std::vector<std::vector<std::size_t>> attended;
  // Evaluation labels of those proposals ("" when unlabeled).
  std::vector<std::vector<std::string>> attended_labels;
  std::vector<std::size_t> proposal_counts;
  // Per step: some task-relevant class had no proposal in the scene.
  std::vector<bool> relevant_missing;
  // Scenes are only kept on request (for expert relabeling).
  std::vector<Scene> scenes;
};

/// Closed loop: observe -> hard attention -> policy -> step, for the task
/// horizon. W is only read.
RolloutResult rollout(const Policy& policy, const attention::AttentionModel& attention, const sim::TaskSpec& task,
                      std::uint64_t condition_seed, const meta::FeatureBank& bank,
                      const meta::ProposerConfig& proposer, std::uint64_t observation_seed = 0,
                      const RewardShaping& shaping = {}, bool keep_scenes = false);

}  // namespace objattn::policy
