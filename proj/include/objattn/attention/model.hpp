#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "objattn/attention/attention.hpp"
#include "objattn/core/adam.hpp"
#include "objattn/core/mlp.hpp"
#include "objattn/core/rng.hpp"
#include "objattn/core/serialization.hpp"
#include "objattn/core/types.hpp"

namespace objattn::attention {

struct TrainConfig {
  double entropy_weight = 0.1;  // lambda_ent
  AdamConfig adam;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double eps_norm = kDefaultEpsNorm;
  double crop_scale = 5.0;
  int hidden = 80;
  // Std of the Gaussian used for W rows that have no crop initialization.
  double w_init_std = 0.1;
  // Finetuning: also replay the prior demonstrations.
  bool finetune_include_prior = false;

  void validate() const;
};

Json encode_train_config(const TrainConfig& c);
TrainConfig decode_train_config(const Json& j, const std::string& path);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double entropy = 0.0;  // mean entropy_loss per step
  long adam_steps = 0;
};

/// Task-specific attention W plus the motion predictor used to train it.
struct AttentionModel {
  Eigen::MatrixXd W;  // M x d, unconstrained norm
  Mlp predictor;      // [nu_soft (4M), position (2), velocity (2)] -> 2
  TrainConfig train_config;
  std::vector<EpochLog> training_log;

  int rows() const { return static_cast<int>(W.rows()); }
  int dimension() const { return static_cast<int>(W.cols()); }
  int hidden() const;

  Eigen::Index parameter_count() const { return W.size() + predictor.parameter_count(); }
  /// W (column-major) followed by the predictor parameters.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::Ref<const Eigen::VectorXd>& params);
  bool all_finite() const { return W.allFinite() && predictor.all_finite(); }
};

/// Random W rows (std w_init_std) and a fan-in-uniform predictor.
AttentionModel make_attention_model(int rows, int dimension, int hidden, Rng& rng, double w_init_std = 0.1);

/// One demonstration step with features pre-normalized, for training loops.
struct PreparedStep {
  Eigen::MatrixXd features;  // d x N, normalized
  Eigen::MatrixXd boxes;     // 4 x N
  Eigen::Vector4d state;     // position, velocity
  Vec2 target;
};

PreparedStep prepare_step(const DemoStep& step, double eps_norm, Eigen::Index expected_dimension = -1);
std::vector<PreparedStep> prepare_steps(std::span<const DemoStep> steps, double eps_norm,
                                        Eigen::Index expected_dimension = -1);

Eigen::VectorXd predictor_input(const ObservationVector& nu_soft, const RobotState& state);
Vec2 predict_motion(const AttentionModel& model, const ObservationVector& nu_soft, const RobotState& state);

struct AttentionGradient {
  Eigen::MatrixXd W;
  Mlp predictor;
  Eigen::VectorXd flatten() const;
};

struct LossBreakdown {
  double total = 0.0;
  double mse = 0.0;      // (1/B) sum ||pred - target||^2
  double entropy = 0.0;  // (1/B) sum entropy_loss
};

/// mse + entropy_weight * entropy over the batch. Throws on an empty batch.
LossBreakdown total_loss(const AttentionModel& model, std::span<const PreparedStep> batch, double entropy_weight);
LossBreakdown total_loss(const AttentionModel& model, std::span<const DemoStep> batch, double entropy_weight,
                         double eps_norm);

/// Analytic gradient of total_loss w.r.t. W and the predictor.
AttentionGradient gradients(const AttentionModel& model, std::span<const PreparedStep> batch, double entropy_weight,
                            LossBreakdown* loss = nullptr);
AttentionGradient gradients(const AttentionModel& model, std::span<const DemoStep> batch, double entropy_weight,
                            double eps_norm);
/// Minibatch given by indices into `steps`.
AttentionGradient gradients(const AttentionModel& model, std::span<const PreparedStep> steps,
                            std::span<const std::size_t> indices, double entropy_weight, LossBreakdown* loss);

}  // namespace objattn::attention

namespace objattn {
template <>
struct ArtifactCodec<attention::AttentionModel> {
  static Json encode(const attention::AttentionModel& model);
  static attention::AttentionModel decode(const Json& j, const std::filesystem::path& base_dir,
                                          const std::string& path = "");
};
}  // namespace objattn
