#include "objattn/core/adam.hpp"

#include <cmath>

namespace objattn {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
}

Json encode_adam(const AdamConfig& c) {
  return Json{{"learning_rate", c.learning_rate}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"epsilon", c.epsilon}};
}

AdamConfig decode_adam(const Json& j, const std::string&) {
  AdamConfig c;
  c.learning_rate = json_io::value_or(j, "learning_rate", c.learning_rate);
  c.beta1 = json_io::value_or(j, "beta1", c.beta1);
  c.beta2 = json_io::value_or(j, "beta2", c.beta2);
  c.epsilon = json_io::value_or(j, "epsilon", c.epsilon);
  c.validate();
  return c;
}

Adam::Adam(Eigen::Index parameters, AdamConfig config)
    : config_(config), m_(Eigen::VectorXd::Zero(parameters)), v_(Eigen::VectorXd::Zero(parameters)) {
  config_.validate();
}

void Adam::step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad) {
  ++t_;
  m_ = config_.beta1 * m_ + (1.0 - config_.beta1) * grad;
  v_ = config_.beta2 * v_ + (1.0 - config_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  params.array() -= config_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + config_.epsilon);
}

}  // namespace objattn
