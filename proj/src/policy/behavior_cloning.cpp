#include "objattn/policy/behavior_cloning.hpp"

#include <numeric>

#include "objattn/policy/rollout.hpp"

namespace objattn::policy {

void BcConfig::validate() const {
  adam.validate();
  if (epochs < 0 || relabel_epochs < 0) throw ConfigError("bc epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("bc batch_size must be >= 1");
  if (relabel_rounds < 0) throw ConfigError("bc relabel_rounds must be >= 0");
}

Json encode_bc(const BcConfig& c) {
  return Json{{"adam", encode_adam(c.adam)},          {"epochs", c.epochs},
              {"batch_size", c.batch_size},           {"seed", c.seed},
              {"relabel_rounds", c.relabel_rounds},   {"relabel_epochs", c.relabel_epochs}};
}

BcConfig decode_bc(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  BcConfig c;
  if (auto it = j.find("adam"); it != j.end()) c.adam = decode_adam(*it, path + ".adam");
  c.epochs = json_io::value_or(j, "epochs", c.epochs);
  c.batch_size = json_io::value_or(j, "batch_size", c.batch_size);
  c.seed = json_io::value_or<std::uint64_t>(j, "seed", c.seed);
  c.relabel_rounds = json_io::value_or(j, "relabel_rounds", c.relabel_rounds);
  c.relabel_epochs = json_io::value_or(j, "relabel_epochs", c.relabel_epochs);
  c.validate();
  return c;
}

std::vector<BcSample> make_bc_samples(std::span<const Demonstration> demos, const attention::AttentionModel& attention,
                                      const Policy& shape) {
  std::vector<BcSample> out;
  const double eps = attention.train_config.eps_norm;
  for (const auto& demo : demos) {
    for (const auto& s : demo.steps) {
      const auto hard = attention::hard_observation(attention.W, s.scene, eps);
      out.push_back({shape.input(s.state, hard.observation), s.target});
    }
  }
  return out;
}

void fit_policy(Policy& policy, const std::vector<BcSample>& samples, const AdamConfig& adam, int epochs,
                int batch_size, std::uint64_t seed) {
  if (epochs == 0) return;
  if (samples.empty()) throw InvariantError("behavior cloning needs at least one sample");
  Rng rng(seed);
  Adam opt(policy.net.parameter_count(), adam);
  Eigen::VectorXd params = policy.net.flatten();
  Mlp grad = policy.net.zeros_like();
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const double scale_out = policy.arch.output_scale;
  Mlp::BatchTape tape;
  Eigen::MatrixXd x, target;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(batch_size), order.size() - start);
      x.resize(policy.net.input_size(), static_cast<Eigen::Index>(count));
      target.resize(2, static_cast<Eigen::Index>(count));
      for (std::size_t k = 0; k < count; ++k) {
        x.col(static_cast<Eigen::Index>(k)) = samples[order[start + k]].input;
        target.col(static_cast<Eigen::Index>(k)) = samples[order[start + k]].target;
      }
      grad.set_zero();
      const Eigen::MatrixXd residual = scale_out * policy.net.forward_batch(x, tape) - target;
      loss_sum += residual.squaredNorm();
      policy.net.backward_batch(tape, (2.0 * scale_out / static_cast<double>(count)) * residual, grad);
      opt.step(params, grad.flatten());
      policy.net.assign(params);
    }
    policy.loss_log.push_back(loss_sum / static_cast<double>(samples.size()));
  }
  if (!policy.net.all_finite()) throw Error("behavior cloning diverged (non-finite parameters)");
}

Policy behavior_clone(std::span<const Demonstration> demos, const attention::AttentionModel& attention,
                      const PolicyArch& arch, const BcConfig& config, bool vision) {
  config.validate();
  if (demos.empty()) throw InvariantError("behavior_clone needs at least one demonstration");
  Rng init = Rng::derive(config.seed, 0xbc);
  Policy policy = make_policy(attention.rows(), arch, vision, init);
  policy.config_kind = "bc_config";
  policy.training_config = encode_bc(config);
  fit_policy(policy, make_bc_samples(demos, attention, policy), config.adam, config.epochs, config.batch_size,
             config.seed);
  return policy;
}

Policy train_supervised(const sim::TaskSpec& task, const attention::AttentionModel& attention,
                        std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                        const meta::ProposerConfig& proposer, const PolicyArch& arch, const BcConfig& config,
                        bool vision, std::uint64_t observation_seed) {
  config.validate();
  const auto demos = sim::collect_demonstrations(task, static_cast<int>(conditions.size()), conditions, bank, proposer,
                                                 TargetConvention::Action, observation_seed);
  Policy policy = behavior_clone(demos, attention, arch, config, vision);
  std::vector<BcSample> samples = make_bc_samples(demos, attention, policy);
  for (int round = 0; round < config.relabel_rounds; ++round) {
    const std::uint64_t round_seed = hash_combine(observation_seed, 0x7e1ab + static_cast<std::uint64_t>(round));
    for (std::uint64_t condition : conditions) {
      const RolloutResult r = rollout(policy, attention, task, condition, bank, proposer, round_seed, {}, true);
      for (std::size_t t = 0; t < r.scenes.size(); ++t) {
        const sim::SimState& s = r.trajectory[t];
        const auto hard = attention::hard_observation(attention.W, r.scenes[t], attention.train_config.eps_norm);
        const sim::Action label = sim::clamp_action(sim::scripted_expert(task, s), task.a_max);
        samples.push_back({policy.input(s.robot, hard.observation), label.velocity});
      }
    }
    fit_policy(policy, samples, config.adam, config.relabel_epochs, config.batch_size,
               hash_combine(config.seed, static_cast<std::uint64_t>(round) + 1));
  }
  return policy;
}

}  // namespace objattn::policy
