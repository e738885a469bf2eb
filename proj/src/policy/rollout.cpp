#include "objattn/policy/rollout.hpp"

#include <algorithm>

#include "objattn/simworld/demos.hpp"

namespace objattn::policy {

RolloutResult rollout(const Policy& policy, const attention::AttentionModel& attention, const sim::TaskSpec& task,
                      std::uint64_t condition_seed, const meta::FeatureBank& bank,
                      const meta::ProposerConfig& proposer, std::uint64_t observation_seed,
                      const RewardShaping& shaping, bool keep_scenes) {
  RolloutResult out;
  Rng obs_rng = sim::observation_stream(observation_seed, condition_seed);
  sim::SimState state = sim::reset(task, condition_seed);
  out.trajectory.push_back(state);
  const double eps = attention.train_config.eps_norm;
  const std::vector<std::string> relevant = task.relevant_classes();
  for (int t = 0; t < task.horizon; ++t) {
    Scene scene = sim::observe(state, bank, proposer, obs_rng);
    const auto hard = attention::hard_observation(attention.W, scene, eps);
    std::vector<std::string> labels;
    for (std::size_t idx : hard.indices) labels.push_back(scene.proposals[idx].label.value_or(""));
    out.attended.push_back(hard.indices);
    out.attended_labels.push_back(std::move(labels));
    out.proposal_counts.push_back(scene.size());
    bool missing = false;
    for (const auto& cls : relevant) {
      missing = missing || std::none_of(scene.proposals.begin(), scene.proposals.end(),
                                        [&](const ObjectProposal& p) { return p.label == cls; });
    }
    out.relevant_missing.push_back(missing);
    const sim::Action action = policy.act(state.robot, hard.observation);
    state = sim::step(task, state, action);
    out.reward -= shaping.distance_weight * sim::task_distance(task, state, shaping.robot_weight);
    out.trajectory.push_back(state);
    if (keep_scenes) out.scenes.push_back(std::move(scene));
  }
  out.success = sim::success(task, out.trajectory);
  if (out.success) out.reward += shaping.success_bonus;
  return out;
}

}  // namespace objattn::policy
