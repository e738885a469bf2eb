#pragma once

#include <Eigen/Dense>

#include "objattn/core/serialization.hpp"

namespace objattn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

Json encode_adam(const AdamConfig& c);
AdamConfig decode_adam(const Json& j, const std::string& path);

/// Adam over a flat parameter vector, with bias-corrected moments.
class Adam {
 public:
  Adam(Eigen::Index parameters, AdamConfig config);

  void step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grad);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

}  // namespace objattn
