#include "objattn/attention/attention.hpp"

#include <algorithm>
#include <cmath>

#include "objattn/core/error.hpp"

namespace objattn::attention {

FeatureVector normalize_feature(const FeatureVector& f, double eps_norm) {
  return f / std::max(f.norm(), eps_norm);
}

Eigen::MatrixXd normalized_features(const Scene& scene, double eps_norm, Eigen::Index expected_dimension) {
  if (scene.proposals.empty()) throw InvariantError("scene \"" + scene.scene_id + "\": N >= 1 violated");
  const Eigen::Index d = scene.dimension();
  if (expected_dimension >= 0 && d != expected_dimension) {
    throw DimensionError("scene feature dimension " + std::to_string(d) + " does not match attention dimension " +
                         std::to_string(expected_dimension));
  }
  Eigen::MatrixXd F(d, static_cast<Eigen::Index>(scene.size()));
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& f = scene.proposals[i].feature;
    if (f.size() != d) throw DimensionError("scene \"" + scene.scene_id + "\": mixed feature dimensions");
    F.col(static_cast<Eigen::Index>(i)) = normalize_feature(f, eps_norm);
  }
  return F;
}

Eigen::MatrixXd box_matrix(const Scene& scene) {
  Eigen::MatrixXd B(4, static_cast<Eigen::Index>(scene.size()));
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& b = scene.proposals[i].box;
    B.col(static_cast<Eigen::Index>(i)) << b.x_min, b.y_min, b.x_max, b.y_max;
  }
  return B;
}

Eigen::VectorXd stable_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

Eigen::MatrixXd attention_logits(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm) {
  return W * normalized_features(scene, eps_norm, W.cols());
}

Eigen::MatrixXd attention_probs(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm) {
  Eigen::MatrixXd Z = attention_logits(W, scene, eps_norm);
  for (Eigen::Index j = 0; j < Z.rows(); ++j) Z.row(j) = stable_softmax(Z.row(j).transpose()).transpose();
  return Z;
}

ObservationVector soft_observation(const Eigen::MatrixXd& probs, const Scene& scene) {
  if (probs.cols() != static_cast<Eigen::Index>(scene.size())) {
    throw DimensionError("probability matrix has " + std::to_string(probs.cols()) + " columns for " +
                         std::to_string(scene.size()) + " proposals");
  }
  const Eigen::MatrixXd B = box_matrix(scene);
  ObservationVector nu(4 * probs.rows());
  for (Eigen::Index j = 0; j < probs.rows(); ++j) nu.segment<4>(4 * j) = B * probs.row(j).transpose();
  return nu;
}

std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& logits) {
  std::vector<std::size_t> out(static_cast<std::size_t>(logits.rows()), 0);
  for (Eigen::Index j = 0; j < logits.rows(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.cols(); ++i)
      if (logits(j, i) > logits(j, best)) best = i;  // strict: ties keep the lower index
    out[static_cast<std::size_t>(j)] = static_cast<std::size_t>(best);
  }
  return out;
}

HardObservation hard_observation(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm) {
  HardObservation out;
  out.indices = argmax_rows(attention_logits(W, scene, eps_norm));
  out.observation.resize(4 * W.rows());
  for (std::size_t j = 0; j < out.indices.size(); ++j) {
    const auto c = scene.proposals[out.indices[j]].box.coords();
    out.observation.segment<4>(4 * static_cast<Eigen::Index>(j)) << c[0], c[1], c[2], c[3];
  }
  return out;
}

double entropy_loss(const Eigen::MatrixXd& probs) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < probs.rows(); ++j)
    for (Eigen::Index i = 0; i < probs.cols(); ++i) {
      const double p = probs(j, i);
      if (p > 0.0) h -= p * std::log(p);
    }
  return h;
}

}  // namespace objattn::attention
