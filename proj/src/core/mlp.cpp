#include "objattn/core/mlp.hpp"

#include <cmath>

#include "objattn/core/error.hpp"

namespace objattn {

Mlp::Mlp(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs) {
  Eigen::Index fan_in = inputs;
  for (int width : hidden) {
    if (width <= 0) throw ConfigError("hidden layer width must be positive");
    layers_.push_back({Eigen::MatrixXd::Zero(width, fan_in), Eigen::VectorXd::Zero(width)});
    fan_in = width;
  }
  layers_.push_back({Eigen::MatrixXd::Zero(outputs, fan_in), Eigen::VectorXd::Zero(outputs)});
}

Mlp Mlp::fan_in_uniform(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs, Rng& rng) {
  Mlp net(inputs, hidden, outputs);
  for (auto& layer : net.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = rng.uniform(-bound, bound);
  }
  return net;
}

Eigen::Index Mlp::input_size() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
Eigen::Index Mlp::output_size() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

std::vector<int> Mlp::hidden_sizes() const {
  std::vector<int> out;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) out.push_back(static_cast<int>(layers_[i].bias.size()));
  return out;
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  Tape tape;
  return forward(x, tape);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, Tape& tape) const {
  if (x.size() != input_size()) {
    throw DimensionError("network input has size " + std::to_string(x.size()) + ", expected " +
                         std::to_string(input_size()));
  }
  tape.activations.resize(layers_.size() + 1);
  tape.activations[0] = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::VectorXd a = layers_[k].weight * tape.activations[k] + layers_[k].bias;
    if (k + 1 < layers_.size()) a = a.array().tanh().matrix();
    tape.activations[k + 1] = std::move(a);
  }
  return tape.activations.back();
}

Eigen::VectorXd Mlp::backward(const Tape& tape, const Eigen::VectorXd& grad_output, Mlp& grad) const {
  Eigen::VectorXd delta = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) {
      // tanh'(a) = 1 - tanh(a)^2, and tape holds tanh(a).
      delta.array() *= 1.0 - tape.activations[k + 1].array().square();
    }
    grad.layers_[k].weight.noalias() += delta * tape.activations[k].transpose();
    grad.layers_[k].bias += delta;
    delta = layers_[k].weight.transpose() * delta;
  }
  return delta;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x, BatchTape& tape) const {
  if (x.rows() != input_size()) {
    throw DimensionError("network input has size " + std::to_string(x.rows()) + ", expected " +
                         std::to_string(input_size()));
  }
  tape.activations.resize(layers_.size() + 1);
  tape.activations[0] = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd a = layers_[k].weight * tape.activations[k];
    a.colwise() += layers_[k].bias;
    if (k + 1 < layers_.size()) a = a.array().tanh().matrix();
    tape.activations[k + 1] = std::move(a);
  }
  return tape.activations.back();
}

Eigen::MatrixXd Mlp::backward_batch(const BatchTape& tape, const Eigen::MatrixXd& grad_output, Mlp& grad) const {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) delta.array() *= 1.0 - tape.activations[k + 1].array().square();
    grad.layers_[k].weight.noalias() += delta * tape.activations[k].transpose();
    grad.layers_[k].bias += delta.rowwise().sum();
    delta = layers_[k].weight.transpose() * delta;
  }
  return delta;
}

Mlp Mlp::zeros_like() const {
  Mlp out = *this;
  out.set_zero();
  return out;
}

void Mlp::set_zero() {
  for (auto& layer : layers_) {
    layer.weight.setZero();
    layer.bias.setZero();
  }
}

Eigen::Index Mlp::parameter_count() const {
  Eigen::Index n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd out(parameter_count());
  Eigen::Index offset = 0;
  for (const auto& layer : layers_) {
    out.segment(offset, layer.weight.size()) = Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    offset += layer.weight.size();
    out.segment(offset, layer.bias.size()) = layer.bias;
    offset += layer.bias.size();
  }
  return out;
}

void Mlp::assign(const Eigen::Ref<const Eigen::VectorXd>& params) {
  if (params.size() != parameter_count()) throw DimensionError("parameter vector size mismatch");
  Eigen::Index offset = 0;
  for (auto& layer : layers_) {
    Eigen::Map<Eigen::VectorXd>(layer.weight.data(), layer.weight.size()) = params.segment(offset, layer.weight.size());
    offset += layer.weight.size();
    layer.bias = params.segment(offset, layer.bias.size());
    offset += layer.bias.size();
  }
}

bool Mlp::all_finite() const {
  for (const auto& layer : layers_)
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) return false;
  return true;
}

bool Mlp::operator==(const Mlp& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& a = layers_[k];
    const auto& b = other.layers_[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() || a.weight != b.weight ||
        a.bias != b.bias)
      return false;
  }
  return true;
}

Json encode_mlp(const Mlp& mlp) {
  Json layers = Json::array();
  for (const auto& layer : mlp.layers()) {
    layers.push_back(Json{{"weight", json_io::from_matrix(layer.weight)}, {"bias", json_io::from_vector(layer.bias)}});
  }
  return Json{{"activation", "tanh"}, {"layers", std::move(layers)}};
}

Mlp decode_mlp(const Json& j, const std::string& path) {
  const std::string activation = json_io::string(j, "activation", path);
  if (activation != "tanh") throw SchemaError(path + ".activation", "unsupported activation \"" + activation + "\"");
  const Json& layers = json_io::require(j, "layers", path);
  if (!layers.is_array() || layers.empty()) throw SchemaError(path + ".layers", "expected a non-empty array");
  Mlp mlp;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string lp = path + ".layers[" + std::to_string(k) + "]";
    DenseLayer layer{json_io::matrix(json_io::require(layers[k], "weight", lp), lp + ".weight"),
                     json_io::vector(json_io::require(layers[k], "bias", lp), lp + ".bias")};
    if (layer.bias.size() != layer.weight.rows()) throw SchemaError(lp + ".bias", "size does not match weight rows");
    if (!mlp.layers().empty() && mlp.layers().back().weight.rows() != layer.weight.cols()) {
      throw SchemaError(lp + ".weight", "input size does not match previous layer");
    }
    mlp.layers().push_back(std::move(layer));
  }
  if (!mlp.all_finite()) throw SchemaError(path, "non-finite parameter");
  return mlp;
}

}  // namespace objattn
