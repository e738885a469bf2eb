#pragma once

#include <optional>
#include <span>
#include <vector>

#include "objattn/attention/model.hpp"

namespace objattn::attention {

/// Attention row scale * normalize(crop). Throws InvariantError for a zero
/// or non-finite crop.
Eigen::VectorXd init_from_crop(const FeatureVector& crop_feature, double scale, double eps_norm = kDefaultEpsNorm);

/// Learns W and the motion predictor from demonstrations with Adam over
/// shuffled minibatches of pooled steps. Rows with a crop are initialized
/// from it; the rest are random. Deterministic given config.seed.
AttentionModel train_attention(std::span<const Demonstration> demos, const TrainConfig& config, int rows,
                               const std::vector<std::optional<FeatureVector>>& crops = {});

/// Continues training from `model` on new_demos (plus prior_demos when
/// config.finetune_include_prior is set). Adam state starts fresh.
AttentionModel finetune_attention(const AttentionModel& model, std::span<const Demonstration> new_demos,
                                  const TrainConfig& config, std::span<const Demonstration> prior_demos = {});

}  // namespace objattn::attention
