#include "objattn/policy/cem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace objattn::policy {

int RLConfig::elite_count() const {
  return std::clamp(static_cast<int>(std::ceil(elite_fraction * population - 1e-9)), 1, population);
}

void RLConfig::validate() const {
  if (population < 1) throw ConfigError("rl.population must be >= 1");
  if (!(elite_fraction > 0.0 && elite_fraction <= 1.0)) throw ConfigError("rl.elite_fraction must be in (0, 1]");
  if (iterations < 0) throw ConfigError("rl.iterations must be >= 0");
  if (!(init_noise >= 0.0) || !(min_noise >= 0.0)) throw ConfigError("rl noise scales must be >= 0");
  if (episodes_per_candidate < 1) throw ConfigError("rl.episodes_per_candidate must be >= 1");
}

Json encode_rl(const RLConfig& c) {
  return Json{{"population", c.population},
              {"elite_fraction", c.elite_fraction},
              {"iterations", c.iterations},
              {"init_noise", c.init_noise},
              {"min_noise", c.min_noise},
              {"episodes_per_candidate", c.episodes_per_candidate},
              {"seed", c.seed},
              {"reward",
               {{"distance_weight", c.reward.distance_weight},
                {"robot_weight", c.reward.robot_weight},
                {"success_bonus", c.reward.success_bonus}}}};
}

RLConfig decode_rl(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  RLConfig c;
  c.population = json_io::value_or(j, "population", c.population);
  c.elite_fraction = json_io::value_or(j, "elite_fraction", c.elite_fraction);
  c.iterations = json_io::value_or(j, "iterations", c.iterations);
  c.init_noise = json_io::value_or(j, "init_noise", c.init_noise);
  c.min_noise = json_io::value_or(j, "min_noise", c.min_noise);
  c.episodes_per_candidate = json_io::value_or(j, "episodes_per_candidate", c.episodes_per_candidate);
  c.seed = json_io::value_or<std::uint64_t>(j, "seed", c.seed);
  if (auto it = j.find("reward"); it != j.end()) {
    c.reward.distance_weight = json_io::value_or(*it, "distance_weight", c.reward.distance_weight);
    c.reward.robot_weight = json_io::value_or(*it, "robot_weight", c.reward.robot_weight);
    c.reward.success_bonus = json_io::value_or(*it, "success_bonus", c.reward.success_bonus);
  }
  c.validate();
  return c;
}

SearchDistribution cem_update(const std::vector<Eigen::VectorXd>& samples, const std::vector<double>& rewards,
                              double elite_fraction, double min_noise) {
  if (samples.empty() || samples.size() != rewards.size()) throw InvariantError("cem_update: bad population");
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rewards[a] > rewards[b]; });
  const auto n = static_cast<double>(samples.size());
  const std::size_t elites =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::ceil(elite_fraction * n - 1e-9)), 1, samples.size());
  SearchDistribution out{Eigen::VectorXd::Zero(samples.front().size()), Eigen::VectorXd::Zero(samples.front().size())};
  for (std::size_t k = 0; k < elites; ++k) out.mean += samples[order[k]];
  out.mean /= static_cast<double>(elites);
  for (std::size_t k = 0; k < elites; ++k) out.stddev.array() += (samples[order[k]] - out.mean).array().square();
  out.stddev = (out.stddev / static_cast<double>(elites)).cwiseSqrt().cwiseMax(min_noise);
  return out;
}

double evaluate_policy(const Policy& policy, const attention::AttentionModel& attention, const sim::TaskSpec& task,
                       std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                       const meta::ProposerConfig& proposer, std::uint64_t observation_seed,
                       const RewardShaping& shaping) {
  double total = 0.0;
  for (std::uint64_t c : conditions) {
    total += rollout(policy, attention, task, c, bank, proposer, observation_seed, shaping).reward;
  }
  return conditions.empty() ? 0.0 : total / static_cast<double>(conditions.size());
}

Policy train_rl(const sim::TaskSpec& task, const attention::AttentionModel& attention, const RLConfig& config,
                bool vision, std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                const meta::ProposerConfig& proposer, const PolicyArch& arch, const Policy* init) {
  config.validate();
  if (conditions.empty()) throw ConfigError("train_rl needs at least one training condition");
  Rng rng(config.seed);
  Policy base;
  if (init != nullptr) {
    base = *init;
    base.vision = vision;
  } else {
    Rng init_rng = Rng::derive(config.seed, 0xce);
    base = make_policy(attention.rows(), arch, vision, init_rng);
  }
  base.config_kind = "rl_config";
  base.training_config = encode_rl(config);

  SearchDistribution dist{base.net.flatten(), Eigen::VectorXd::Constant(base.net.parameter_count(), config.init_noise)};
  Policy candidate = base;
  // Each mean is scored on every training condition with one fixed
  // observation stream; the best-scoring mean is returned.
  const std::uint64_t score_seed = hash_combine(config.seed, 0x5c0e);
  Policy best = base;
  double best_score = evaluate_policy(base, attention, task, conditions, bank, proposer, score_seed, config.reward);
  best.loss_log.push_back(-best_score);
  std::size_t cursor = 0;

  for (int it = 0; it < config.iterations; ++it) {
    // Common conditions and observation noise for every candidate this round.
    std::vector<std::uint64_t> batch;
    for (int k = 0; k < config.episodes_per_candidate; ++k) batch.push_back(conditions[cursor++ % conditions.size()]);
    const std::uint64_t obs_seed = hash_combine(config.seed, 0x0b5 + static_cast<std::uint64_t>(it));

    std::vector<Eigen::VectorXd> samples;
    std::vector<double> rewards;
    for (int p = 0; p < config.population; ++p) {
      Eigen::VectorXd theta = dist.mean;
      for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += dist.stddev[i] * rng.normal();
      candidate.net.assign(theta);
      rewards.push_back(evaluate_policy(candidate, attention, task, batch, bank, proposer, obs_seed, config.reward));
      samples.push_back(std::move(theta));
    }
    dist = cem_update(samples, rewards, config.elite_fraction, config.min_noise);

    candidate.net.assign(dist.mean);
    const double score = evaluate_policy(candidate, attention, task, conditions, bank, proposer, score_seed, config.reward);
    if (score > best_score) {
      best_score = score;
      best.net = candidate.net;
    }
    best.loss_log.push_back(-best_score);
  }
  return best;
}

}  // namespace objattn::policy
