#pragma once

#include <vector>

#include <Eigen/Dense>

#include "objattn/core/rng.hpp"
#include "objattn/core/serialization.hpp"

namespace objattn {

struct DenseLayer {
  Eigen::MatrixXd weight;  // outputs x inputs
  Eigen::VectorXd bias;
};

/// Fully connected network: tanh hidden layers, linear output layer.
/// Hand-written forward and reverse passes, double precision throughout.
class Mlp {
 public:
  /// Activations recorded by forward() for a later backward().
  struct Tape {
    std::vector<Eigen::VectorXd> activations;
  };

  /// Column-per-sample activations for the batched passes.
  struct BatchTape {
    std::vector<Eigen::MatrixXd> activations;
  };

  Mlp() = default;
  /// All-zero parameters.
  Mlp(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs);
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  static Mlp fan_in_uniform(Eigen::Index inputs, const std::vector<int>& hidden, Eigen::Index outputs,
                            Rng& rng);

  Eigen::Index input_size() const;
  Eigen::Index output_size() const;
  std::vector<int> hidden_sizes() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x, Tape& tape) const;
  /// Adds dL/dparameters into `grad` (same shape as *this) and returns dL/dx.
  Eigen::VectorXd backward(const Tape& tape, const Eigen::VectorXd& grad_output, Mlp& grad) const;

  /// Batched passes: one column per sample. backward_batch adds the summed
  /// parameter gradient into `grad` and returns dL/dX.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x, BatchTape& tape) const;
  Eigen::MatrixXd backward_batch(const BatchTape& tape, const Eigen::MatrixXd& grad_output, Mlp& grad) const;

  Mlp zeros_like() const;
  Eigen::Index parameter_count() const;
  Eigen::VectorXd flatten() const;
  void assign(const Eigen::Ref<const Eigen::VectorXd>& params);
  void set_zero();
  bool all_finite() const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  bool operator==(const Mlp& other) const;

 private:
  std::vector<DenseLayer> layers_;
};

Json encode_mlp(const Mlp& mlp);
Mlp decode_mlp(const Json& j, const std::string& path);

}  // namespace objattn
