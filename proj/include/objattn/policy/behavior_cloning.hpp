#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "objattn/attention/model.hpp"
#include "objattn/core/adam.hpp"
#include "objattn/policy/policy.hpp"
#include "objattn/simworld/demos.hpp"

namespace objattn::policy {

struct BcConfig {
  AdamConfig adam;
  int epochs = 200;
  int batch_size = 64;
  std::uint64_t seed = 0;
  // Expert-relabeling rounds: roll out the current policy on the training
  // conditions, label visited states with the scripted expert, refit on the
  // aggregate. Zero means plain cloning.
  int relabel_rounds = 0;
  int relabel_epochs = 100;

  void validate() const;
};

Json encode_bc(const BcConfig& c);
BcConfig decode_bc(const Json& j, const std::string& path);

struct BcSample {
  Eigen::VectorXd input;
  Vec2 target;
};

/// Policy inputs for every demonstration step, using hard attention on the
/// step's scene. W is read only.
std::vector<BcSample> make_bc_samples(std::span<const Demonstration> demos, const attention::AttentionModel& attention,
                                      const Policy& shape);

/// Minimizes mean ||policy(x) - target||^2 with Adam; appends per-epoch
/// training loss to policy.loss_log.
void fit_policy(Policy& policy, const std::vector<BcSample>& samples, const AdamConfig& adam, int epochs,
                int batch_size, std::uint64_t seed);

/// Supervised cloning of demonstration targets on hard-attention inputs.
Policy behavior_clone(std::span<const Demonstration> demos, const attention::AttentionModel& attention,
                      const PolicyArch& arch, const BcConfig& config, bool vision = true);

/// Cloning from scripted-expert episodes on `conditions`, followed by
/// config.relabel_rounds rounds of on-policy expert relabeling.
Policy train_supervised(const sim::TaskSpec& task, const attention::AttentionModel& attention,
                        std::span<const std::uint64_t> conditions, const meta::FeatureBank& bank,
                        const meta::ProposerConfig& proposer, const PolicyArch& arch, const BcConfig& config,
                        bool vision, std::uint64_t observation_seed);

}  // namespace objattn::policy
