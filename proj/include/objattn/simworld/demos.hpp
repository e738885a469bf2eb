#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "objattn/simworld/expert.hpp"

namespace objattn::sim {

class ExpertFailure : public Error {
 public:
  using Error::Error;
};

/// Observation stream for one episode; keyed by both seeds so episodes with
/// different conditions see independent proposal noise.
Rng observation_stream(std::uint64_t observation_seed, std::uint64_t condition_seed);

struct ExpertEpisode {
  Demonstration demo;
  std::vector<SimState> trajectory;  // horizon + 1 states, starting at reset
  bool success = false;
};

ExpertEpisode run_expert_episode(const TaskSpec& task, std::uint64_t condition_seed, const meta::FeatureBank& bank,
                                 const meta::ProposerConfig& proposer, TargetConvention convention,
                                 std::uint64_t observation_seed);

/// Expert demonstrations on the first n_episodes condition seeds. Throws
/// ExpertFailure naming the condition if the expert fails on any of them.
std::vector<Demonstration> collect_demonstrations(const TaskSpec& task, int n_episodes,
                                                  std::span<const std::uint64_t> condition_seeds,
                                                  const meta::FeatureBank& bank, const meta::ProposerConfig& proposer,
                                                  TargetConvention convention, std::uint64_t observation_seed = 0);

}  // namespace objattn::sim
