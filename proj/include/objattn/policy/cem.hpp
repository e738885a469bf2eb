#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "objattn/policy/rollout.hpp"

namespace objattn::policy {

struct RLConfig {
  int population = 32;
  double elite_fraction = 0.25;
  int iterations = 20;
  double init_noise = 0.05;
  double min_noise = 1e-3;
  // Training conditions evaluated per candidate (cycled through the list).
  int episodes_per_candidate = 8;
  std::uint64_t seed = 0;
  RewardShaping reward;

  int elite_count() const;
  void validate() const;
};

Json encode_rl(const RLConfig& c);
RLConfig decode_rl(const Json& j, const std::string& path);

/// Diagonal Gaussian search distribution over flat policy parameters.
struct SearchDistribution {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

/// Refit to the top elite_fraction of samples by reward (ties keep the
/// earlier sample). The stddev is floored at min_noise.
SearchDistribution cem_update(const std::vector<Eigen::VectorXd>& samples, const std::vector<double>& rewards,
                              double elite_fraction, double min_noise);

/// Mean episodic reward of `policy` over the given conditions.
double evaluate_policy(const Policy& policy, const attention::AttentionModel& attention, const sim::TaskSpec& task,
                       std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                       const meta::ProposerConfig& proposer, std::uint64_t observation_seed,
                       const RewardShaping& shaping);

/// Cross-entropy episodic search over policy parameters, starting from
/// `init` (or a fresh network). After every iteration the distribution mean
/// is scored on all conditions; the best-scoring mean is returned and
/// loss_log records the running best (negated reward). Deterministic given
/// config.seed. W is read only.
Policy train_rl(const sim::TaskSpec& task, const attention::AttentionModel& attention, const RLConfig& config,
                bool vision, std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                const meta::ProposerConfig& proposer, const PolicyArch& arch, const Policy* init = nullptr);

}  // namespace objattn::policy
