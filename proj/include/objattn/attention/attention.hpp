#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "objattn/core/types.hpp"

namespace objattn::attention {

inline constexpr double kDefaultEpsNorm = 1e-8;

/// f / max(||f||, eps_norm).
FeatureVector normalize_feature(const FeatureVector& f, double eps_norm = kDefaultEpsNorm);

/// Normalized features as columns (d x N). Throws DimensionError if the
/// scene dimension differs from `expected_dimension` (when >= 0).
Eigen::MatrixXd normalized_features(const Scene& scene, double eps_norm, Eigen::Index expected_dimension = -1);
/// Box coordinates as columns (4 x N).
Eigen::MatrixXd box_matrix(const Scene& scene);

/// Softmax with the row max subtracted first.
Eigen::VectorXd stable_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);
/// log-softmax, finite even where the softmax underflows.
Eigen::VectorXd log_softmax(const Eigen::Ref<const Eigen::VectorXd>& logits);

/// Logits z_ji = w_j . normalize(f_i), M x N.
Eigen::MatrixXd attention_logits(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm = kDefaultEpsNorm);
/// Row-wise softmax of the logits, M x N.
Eigen::MatrixXd attention_probs(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm = kDefaultEpsNorm);

/// Block j = sum_i probs(j, i) * box_i.
ObservationVector soft_observation(const Eigen::MatrixXd& probs, const Scene& scene);

struct HardObservation {
  ObservationVector observation;
  std::vector<std::size_t> indices;  // one selected proposal per row
};

/// Block j = box of argmax_i z_ji; ties go to the lowest index.
HardObservation hard_observation(const Eigen::MatrixXd& W, const Scene& scene, double eps_norm = kDefaultEpsNorm);
/// Same selection rule applied to precomputed logits.
std::vector<std::size_t> argmax_rows(const Eigen::MatrixXd& logits);

/// sum_j sum_i -p log p, with 0 log 0 = 0.
double entropy_loss(const Eigen::MatrixXd& probs);

}  // namespace objattn::attention
