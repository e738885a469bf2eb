#include "objattn/attention/model.hpp"

#include <cmath>
#include <numeric>

#include "objattn/core/error.hpp"

namespace objattn::attention {

void TrainConfig::validate() const {
  if (!(entropy_weight >= 0.0) || !std::isfinite(entropy_weight)) throw ConfigError("entropy_weight must be >= 0");
  adam.validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(eps_norm > 0.0)) throw ConfigError("eps_norm must be > 0");
  if (!std::isfinite(crop_scale)) throw ConfigError("crop_scale must be finite");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  if (!(w_init_std >= 0.0)) throw ConfigError("w_init_std must be >= 0");
}

Json encode_train_config(const TrainConfig& c) {
  return Json{{"entropy_weight", c.entropy_weight}, {"adam", encode_adam(c.adam)},
              {"epochs", c.epochs},                 {"batch_size", c.batch_size},
              {"seed", c.seed},                     {"eps_norm", c.eps_norm},
              {"crop_scale", c.crop_scale},         {"hidden", c.hidden},
              {"w_init_std", c.w_init_std},         {"finetune_include_prior", c.finetune_include_prior}};
}

TrainConfig decode_train_config(const Json& j, const std::string& path) {
  TrainConfig c;
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  c.entropy_weight = json_io::value_or(j, "entropy_weight", c.entropy_weight);
  if (auto it = j.find("adam"); it != j.end()) c.adam = decode_adam(*it, path + ".adam");
  c.epochs = json_io::value_or(j, "epochs", c.epochs);
  c.batch_size = json_io::value_or(j, "batch_size", c.batch_size);
  c.seed = json_io::value_or<std::uint64_t>(j, "seed", c.seed);
  c.eps_norm = json_io::value_or(j, "eps_norm", c.eps_norm);
  c.crop_scale = json_io::value_or(j, "crop_scale", c.crop_scale);
  c.hidden = json_io::value_or(j, "hidden", c.hidden);
  c.w_init_std = json_io::value_or(j, "w_init_std", c.w_init_std);
  c.finetune_include_prior = json_io::value_or(j, "finetune_include_prior", c.finetune_include_prior);
  c.validate();
  return c;
}

int AttentionModel::hidden() const {
  const auto sizes = predictor.hidden_sizes();
  return sizes.empty() ? 0 : sizes.front();
}

Eigen::VectorXd AttentionModel::parameters() const {
  Eigen::VectorXd out(parameter_count());
  out.head(W.size()) = Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
  out.tail(predictor.parameter_count()) = predictor.flatten();
  return out;
}

void AttentionModel::set_parameters(const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (params.size() != parameter_count()) throw DimensionError("attention parameter vector size mismatch");
  Eigen::Map<Eigen::VectorXd>(W.data(), W.size()) = params.head(W.size());
  predictor.assign(params.tail(predictor.parameter_count()));
}

AttentionModel make_attention_model(int rows, int dimension, int hidden, Rng& rng, double w_init_std) {
  if (rows < 1) throw ConfigError("attention needs at least one row");
  if (dimension < 1) throw ConfigError("feature dimension must be >= 1");
  AttentionModel model;
  model.W.resize(rows, dimension);
  for (Eigen::Index c = 0; c < model.W.cols(); ++c)
    for (Eigen::Index r = 0; r < model.W.rows(); ++r) model.W(r, c) = rng.normal(0.0, w_init_std);
  model.predictor = Mlp::fan_in_uniform(4 * rows + 4, {hidden, hidden}, 2, rng);
  model.train_config.hidden = hidden;
  model.train_config.w_init_std = w_init_std;
  return model;
}

PreparedStep prepare_step(const DemoStep& step, double eps_norm, Eigen::Index expected_dimension) {
  PreparedStep out;
  out.features = normalized_features(step.scene, eps_norm, expected_dimension);
  out.boxes = box_matrix(step.scene);
  out.state << step.state.position, step.state.velocity;
  out.target = step.target;
  return out;
}

std::vector<PreparedStep> prepare_steps(std::span<const DemoStep> steps, double eps_norm,
                                        Eigen::Index expected_dimension) {
  std::vector<PreparedStep> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(prepare_step(s, eps_norm, expected_dimension));
  return out;
}

Eigen::VectorXd predictor_input(const ObservationVector& nu_soft, const RobotState& state) {
  Eigen::VectorXd x(nu_soft.size() + 4);
  x << nu_soft, state.position, state.velocity;
  return x;
}

Vec2 predict_motion(const AttentionModel& model, const ObservationVector& nu_soft, const RobotState& state) {
  if (nu_soft.size() != 4 * model.W.rows()) {
    throw DimensionError("soft observation has size " + std::to_string(nu_soft.size()) + ", expected " +
                         std::to_string(4 * model.W.rows()));
  }
  const Eigen::VectorXd y = model.predictor.forward(predictor_input(nu_soft, state));
  return {y[0], y[1]};
}

Eigen::VectorXd AttentionGradient::flatten() const {
  Eigen::VectorXd out(W.size() + predictor.parameter_count());
  out.head(W.size()) = Eigen::Map<const Eigen::VectorXd>(W.data(), W.size());
  out.tail(predictor.parameter_count()) = predictor.flatten();
  return out;
}

namespace {

void check_step(const AttentionModel& model, const PreparedStep& s) {
  if (s.features.rows() != model.W.cols()) {
    throw DimensionError("step feature dimension " + std::to_string(s.features.rows()) +
                         " does not match attention dimension " + std::to_string(model.W.cols()));
  }
}

/// Adds one step's contribution (weighted by `scale`) to the gradient and
/// returns (squared error, entropy) for the step.
std::pair<double, double> accumulate_step(const AttentionModel& model, const PreparedStep& s, double scale,
                                          double entropy_weight, AttentionGradient* grad) {
  check_step(model, s);
  const Eigen::Index rows = model.W.rows();
  const Eigen::MatrixXd Z = model.W * s.features;
  Eigen::MatrixXd logp(rows, Z.cols());
  Eigen::MatrixXd P(rows, Z.cols());
  Eigen::VectorXd x(4 * rows + 4);
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < rows; ++j) {
    logp.row(j) = log_softmax(Z.row(j).transpose()).transpose();
    P.row(j) = logp.row(j).array().exp();
    entropy -= (P.row(j).array() * logp.row(j).array()).sum();
    x.segment<4>(4 * j) = s.boxes * P.row(j).transpose();
  }
  x.tail<4>() = s.state;

  Mlp::Tape tape;
  const Eigen::VectorXd y = model.predictor.forward(x, tape);
  const Eigen::VectorXd residual = y - s.target;
  const double sq_err = residual.squaredNorm();

  if (grad != nullptr) {
    const Eigen::VectorXd gx = model.predictor.backward(tape, (2.0 * scale) * residual, grad->predictor);
    for (Eigen::Index j = 0; j < rows; ++j) {
      // dL/dp_i from the observation path plus the entropy term -(log p_i + 1).
      Eigen::VectorXd gp = s.boxes.transpose() * gx.segment<4>(4 * j);
      gp.array() -= (scale * entropy_weight) * (logp.row(j).transpose().array() + 1.0);
      // Softmax Jacobian: dz_i = p_i (g_i - sum_k p_k g_k).
      const Eigen::VectorXd p = P.row(j).transpose();
      const Eigen::VectorXd gz = p.cwiseProduct((gp.array() - p.dot(gp)).matrix());
      grad->W.row(j) += (s.features * gz).transpose();
    }
  }
  return {sq_err, entropy};
}

AttentionGradient zero_gradient(const AttentionModel& model) {
  return {Eigen::MatrixXd::Zero(model.W.rows(), model.W.cols()), model.predictor.zeros_like()};
}

}  // namespace

LossBreakdown total_loss(const AttentionModel& model, std::span<const PreparedStep> batch, double entropy_weight) {
  if (batch.empty()) throw InvariantError("total_loss: empty batch");
  LossBreakdown out;
  for (const auto& s : batch) {
    const auto [sq, h] = accumulate_step(model, s, 0.0, entropy_weight, nullptr);
    out.mse += sq;
    out.entropy += h;
  }
  const double b = static_cast<double>(batch.size());
  out.mse /= b;
  out.entropy /= b;
  out.total = out.mse + entropy_weight * out.entropy;
  return out;
}

LossBreakdown total_loss(const AttentionModel& model, std::span<const DemoStep> batch, double entropy_weight,
                         double eps_norm) {
  if (batch.empty()) throw InvariantError("total_loss: empty batch");
  const auto prepared = prepare_steps(batch, eps_norm, model.W.cols());
  return total_loss(model, std::span<const PreparedStep>(prepared), entropy_weight);
}

AttentionGradient gradients(const AttentionModel& model, std::span<const PreparedStep> steps,
                            std::span<const std::size_t> indices, double entropy_weight, LossBreakdown* loss) {
  if (indices.empty()) throw InvariantError("gradients: empty batch");
  AttentionGradient grad = zero_gradient(model);
  const double scale = 1.0 / static_cast<double>(indices.size());
  LossBreakdown acc;
  for (std::size_t idx : indices) {
    const auto [sq, h] = accumulate_step(model, steps[idx], scale, entropy_weight, &grad);
    acc.mse += sq;
    acc.entropy += h;
  }
  if (loss != nullptr) {
    acc.mse *= scale;
    acc.entropy *= scale;
    acc.total = acc.mse + entropy_weight * acc.entropy;
    *loss = acc;
  }
  return grad;
}

AttentionGradient gradients(const AttentionModel& model, std::span<const PreparedStep> batch, double entropy_weight,
                            LossBreakdown* loss) {
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return gradients(model, batch, all, entropy_weight, loss);
}

AttentionGradient gradients(const AttentionModel& model, std::span<const DemoStep> batch, double entropy_weight,
                            double eps_norm) {
  const auto prepared = prepare_steps(batch, eps_norm, model.W.cols());
  return gradients(model, std::span<const PreparedStep>(prepared), entropy_weight, nullptr);
}

}  // namespace objattn::attention

namespace objattn {

Json ArtifactCodec<attention::AttentionModel>::encode(const attention::AttentionModel& model) {
  Json log = Json::array();
  for (const auto& e : model.training_log) {
    log.push_back(Json{{"epoch", e.epoch}, {"loss", e.loss}, {"entropy", e.entropy}, {"adam_steps", e.adam_steps}});
  }
  return Json{{"M", model.rows()},
              {"d", model.dimension()},
              {"H", model.hidden()},
              {"W", json_io::from_matrix(model.W)},
              {"predictor", encode_mlp(model.predictor)},
              {"train_config", attention::encode_train_config(model.train_config)},
              {"training_log", std::move(log)}};
}

attention::AttentionModel ArtifactCodec<attention::AttentionModel>::decode(const Json& j,
                                                                           const std::filesystem::path&,
                                                                           const std::string& path) {
  attention::AttentionModel model;
  const auto M = json_io::integer(j, "M", path);
  const auto d = json_io::integer(j, "d", path);
  const auto H = json_io::integer(j, "H", path);
  model.W = json_io::matrix(json_io::require(j, "W", path), "W");
  if (model.W.rows() != M || model.W.cols() != d) throw SchemaError("W", "shape does not match M x d");
  if (!model.W.allFinite()) throw SchemaError("W", "non-finite entry");
  model.predictor = decode_mlp(json_io::require(j, "predictor", path), "predictor");
  if (model.predictor.input_size() != 4 * M + 4 || model.predictor.output_size() != 2 || model.hidden() != H) {
    throw SchemaError("predictor", "layer shapes do not match M and H");
  }
  model.train_config = attention::decode_train_config(json_io::require(j, "train_config", path), "train_config");
  const Json& log = json_io::require(j, "training_log", path);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const std::string lp = "training_log[" + std::to_string(i) + "]";
    model.training_log.push_back({static_cast<int>(json_io::integer(log[i], "epoch", lp)),
                                  json_io::number(log[i], "loss", lp), json_io::number(log[i], "entropy", lp),
                                  static_cast<long>(json_io::integer(log[i], "adam_steps", lp))});
  }
  return model;
}

}  // namespace objattn
