#include "objattn/simworld/demos.hpp"

namespace objattn::sim {

Rng observation_stream(std::uint64_t observation_seed, std::uint64_t condition_seed) {
  return Rng::derive(hash_combine(observation_seed, condition_seed), 0x0b5);
}

ExpertEpisode run_expert_episode(const TaskSpec& task, std::uint64_t condition_seed, const meta::FeatureBank& bank,
                                 const meta::ProposerConfig& proposer, TargetConvention convention,
                                 std::uint64_t observation_seed) {
  ExpertEpisode ep;
  ep.demo.episode_id = "condition-" + std::to_string(condition_seed);
  ep.demo.target_convention = convention;
  Rng obs_rng = observation_stream(observation_seed, condition_seed);
  Rng noise_rng = Rng::derive(hash_combine(observation_seed, condition_seed), 0xde70);
  SimState state = reset(task, condition_seed);
  ep.trajectory.push_back(state);
  for (int t = 0; t < task.horizon; ++t) {
    DemoStep rec;
    rec.state = state.robot;
    rec.scene = observe(state, bank, proposer, obs_rng);
    const Action action = clamp_action(scripted_expert(task, state), task.a_max);
    Action executed = action;
    if (task.demo_noise > 0.0) {
      executed.velocity += task.demo_noise * Vec2(noise_rng.normal(), noise_rng.normal());
    }
    SimState next = step(task, state, executed);
    rec.target = convention == TargetConvention::Action ? action.velocity
                                                        : Vec2(next.robot.position - state.robot.position);
    ep.demo.steps.push_back(std::move(rec));
    ep.trajectory.push_back(next);
    state = std::move(next);
  }
  ep.success = success(task, ep.trajectory);
  return ep;
}

std::vector<Demonstration> collect_demonstrations(const TaskSpec& task, int n_episodes,
                                                  std::span<const std::uint64_t> condition_seeds,
                                                  const meta::FeatureBank& bank, const meta::ProposerConfig& proposer,
                                                  TargetConvention convention, std::uint64_t observation_seed) {
  if (n_episodes < 0) throw ConfigError("n_episodes must be >= 0");
  if (static_cast<std::size_t>(n_episodes) > condition_seeds.size()) {
    throw ConfigError("requested " + std::to_string(n_episodes) + " demonstrations but only " +
                      std::to_string(condition_seeds.size()) + " condition seeds");
  }
  std::vector<Demonstration> demos;
  for (int k = 0; k < n_episodes; ++k) {
    const std::uint64_t seed = condition_seeds[static_cast<std::size_t>(k)];
    ExpertEpisode ep = run_expert_episode(task, seed, bank, proposer, convention, observation_seed);
    if (!ep.success) throw ExpertFailure("scripted expert failed on condition " + std::to_string(seed));
    demos.push_back(std::move(ep.demo));
  }
  return demos;
}

}  // namespace objattn::sim
