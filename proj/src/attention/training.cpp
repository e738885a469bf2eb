#include "objattn/attention/training.hpp"

#include <numeric>

#include "objattn/core/error.hpp"

namespace objattn::attention {

Eigen::VectorXd init_from_crop(const FeatureVector& crop_feature, double scale, double eps_norm) {
  if (!crop_feature.allFinite()) throw InvariantError("crop feature is not finite");
  if (crop_feature.norm() < eps_norm) throw InvariantError("crop feature is zero");
  return scale * normalize_feature(crop_feature, eps_norm);
}

namespace {

void check_conventions(std::span<const Demonstration> a, std::span<const Demonstration> b = {}) {
  std::optional<TargetConvention> seen;
  for (auto demos : {a, b}) {
    for (const auto& d : demos) {
      if (seen && *seen != d.target_convention) {
        throw InvariantError("demonstrations mix target conventions (\"" + std::string(to_string(*seen)) +
                             "\" and \"" + to_string(d.target_convention) + "\")");
      }
      seen = d.target_convention;
    }
  }
}

std::vector<PreparedStep> pool(std::span<const Demonstration> demos, const TrainConfig& config, Eigen::Index d,
                               std::vector<PreparedStep> out = {}) {
  for (const auto& demo : demos) {
    demo.validate();
    for (const auto& s : demo.steps) out.push_back(prepare_step(s, config.eps_norm, d));
  }
  return out;
}

void fit(AttentionModel& model, const std::vector<PreparedStep>& steps, const TrainConfig& config) {
  if (config.epochs == 0) return;
  if (steps.empty()) throw InvariantError("no demonstration steps to train on");
  Rng rng(config.seed);
  Adam adam(model.parameter_count(), config.adam);
  Eigen::VectorXd params = model.parameters();
  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int first_epoch = model.training_log.empty() ? 0 : model.training_log.back().epoch + 1;
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    double entropy_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      std::span<const std::size_t> idx(order.data() + start, count);
      LossBreakdown loss;
      const AttentionGradient g = gradients(model, steps, idx, config.entropy_weight, &loss);
      adam.step(params, g.flatten());
      model.set_parameters(params);
      loss_sum += loss.total * static_cast<double>(count);
      entropy_sum += loss.entropy * static_cast<double>(count);
    }
    const double n = static_cast<double>(order.size());
    model.training_log.push_back({first_epoch + epoch, loss_sum / n, entropy_sum / n, adam.steps()});
  }
  if (!model.all_finite()) throw Error("attention training diverged (non-finite parameters)");
}

}  // namespace

AttentionModel train_attention(std::span<const Demonstration> demos, const TrainConfig& config, int rows,
                               const std::vector<std::optional<FeatureVector>>& crops) {
  config.validate();
  if (demos.empty()) throw InvariantError("train_attention needs at least one demonstration");
  if (!crops.empty() && static_cast<int>(crops.size()) != rows) {
    throw DimensionError("crop list must have one entry per attention row");
  }
  check_conventions(demos);
  demos.front().validate();
  const int d = static_cast<int>(demos.front().steps.front().scene.dimension());

  Rng init_rng = Rng::derive(config.seed, 0x1a7);
  AttentionModel model = make_attention_model(rows, d, config.hidden, init_rng, config.w_init_std);
  for (int j = 0; j < static_cast<int>(crops.size()); ++j) {
    if (!crops[static_cast<std::size_t>(j)]) continue;
    const FeatureVector& crop = *crops[static_cast<std::size_t>(j)];
    if (crop.size() != d) throw DimensionError("crop feature dimension does not match demonstrations");
    model.W.row(j) = init_from_crop(crop, config.crop_scale, config.eps_norm).transpose();
  }
  model.train_config = config;
  fit(model, pool(demos, config, d), config);
  return model;
}

AttentionModel finetune_attention(const AttentionModel& model, std::span<const Demonstration> new_demos,
                                  const TrainConfig& config, std::span<const Demonstration> prior_demos) {
  config.validate();
  if (new_demos.empty()) throw InvariantError("finetune_attention needs at least one demonstration");
  const auto replay = config.finetune_include_prior ? prior_demos : std::span<const Demonstration>{};
  check_conventions(new_demos, replay);
  AttentionModel out = model;
  if (out.predictor.input_size() != 4 * out.W.rows() + 4) {
    throw DimensionError("attention model predictor does not match its row count");
  }
  auto steps = pool(new_demos, config, out.W.cols());
  steps = pool(replay, config, out.W.cols(), std::move(steps));
  out.train_config = config;
  out.train_config.hidden = model.hidden();
  fit(out, steps, config);
  return out;
}

}  // namespace objattn::attention
