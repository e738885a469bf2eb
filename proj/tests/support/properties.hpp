#pragma once

// Randomized property checks of the attention math, shared by the unit
// tests and the acceptance binary. Each returns an empty string on success
// and a description of the first violation otherwise.

#include <numeric>
#include <string>

#include "objattn/attention/attention.hpp"
#include "objattn/attention/model.hpp"
#include "oracles.hpp"

namespace props {

using objattn::Rng;
using objattn::Scene;
namespace att = objattn::attention;

struct Instance {
  Eigen::MatrixXd W;
  Scene scene;
};

/// M in {1,2}, N in [1,32], d in {2,32}; W entries ~ N(0, 3^2).
inline Instance random_instance(Rng& rng) {
  const int m = 1 + static_cast<int>(rng.uniform_index(2));
  const int n = 1 + static_cast<int>(rng.uniform_index(32));
  const int d = rng.uniform() < 0.5 ? 2 : 32;
  Instance in;
  in.W = Eigen::MatrixXd(m, d);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < d; ++k) in.W(j, k) = 3.0 * rng.normal();
  in.scene = oracle::random_scene(rng, n, d);
  return in;
}

inline std::string row_sums(const Instance& in) {
  const Eigen::MatrixXd p = att::attention_probs(in.W, in.scene);
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    if (std::abs(p.row(j).sum() - 1.0) > 1e-9) return "row does not sum to 1";
    if (p.row(j).minCoeff() < 0.0 || p.row(j).maxCoeff() > 1.0) return "probability outside [0,1]";
    const auto ref = oracle::probs_row(in.W, static_cast<int>(j), in.scene);
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (std::abs(ref[i] - p(j, static_cast<Eigen::Index>(i))) > 1e-12) return "probs differ from the definition";
  }
  return "";
}

inline std::string entropy_bounds(const Instance& in) {
  const Eigen::MatrixXd p = att::attention_probs(in.W, in.scene);
  const double h = att::entropy_loss(p);
  const double cap = static_cast<double>(p.rows()) * std::log(static_cast<double>(p.cols()));
  if (h < -1e-12 || h > cap + 1e-12) return "entropy outside [0, M log N]";
  double ref = 0.0;
  for (int j = 0; j < in.W.rows(); ++j) ref += oracle::entropy(oracle::probs_row(in.W, j, in.scene));
  if (std::abs(ref - h) > 1e-10) return "entropy differs from the definition";
  return "";
}

inline std::string hull_bound(const Instance& in) {
  const Eigen::MatrixXd p = att::attention_probs(in.W, in.scene);
  const Eigen::VectorXd nu = att::soft_observation(p, in.scene);
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    for (int c = 0; c < 4; ++c) {
      double lo = 2.0, hi = -1.0;
      for (const auto& prop : in.scene.proposals) {
        lo = std::min(lo, prop.box.coords()[c]);
        hi = std::max(hi, prop.box.coords()[c]);
      }
      const double v = nu[4 * j + c];
      if (v < lo - 1e-12 || v > hi + 1e-12) return "soft observation outside the box hull";
    }
  }
  return "";
}

inline std::string permutation_invariance(const Instance& in, Rng& rng) {
  std::vector<std::size_t> perm(in.scene.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Scene shuffled;
  for (auto i : perm) shuffled.proposals.push_back(in.scene.proposals[i]);
  const Eigen::MatrixXd p = att::attention_probs(in.W, in.scene);
  const Eigen::MatrixXd q = att::attention_probs(in.W, shuffled);
  for (Eigen::Index j = 0; j < p.rows(); ++j)
    for (std::size_t k = 0; k < perm.size(); ++k)
      if (std::abs(q(j, static_cast<Eigen::Index>(k)) - p(j, static_cast<Eigen::Index>(perm[k]))) > 1e-12)
        return "probs columns do not follow the permutation";
  const Eigen::VectorXd a = att::soft_observation(p, in.scene);
  const Eigen::VectorXd b = att::soft_observation(q, shuffled);
  if ((a - b).cwiseAbs().maxCoeff() > 1e-12) return "soft observation changed under permutation";
  // Hard observation is only pinned down when every row's argmax is unique.
  const Eigen::MatrixXd z = att::attention_logits(in.W, in.scene);
  for (Eigen::Index j = 0; j < z.rows(); ++j) {
    Eigen::Index best;
    const double top = z.row(j).maxCoeff(&best);
    for (Eigen::Index i = 0; i < z.cols(); ++i)
      if (i != best && z(j, i) == top) return "";
  }
  if ((att::hard_observation(in.W, in.scene).observation - att::hard_observation(in.W, shuffled).observation)
          .cwiseAbs()
          .maxCoeff() != 0.0) {
    return "hard observation changed under permutation";
  }
  return "";
}

inline std::string temperature_monotone(const Instance& in) {
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double h = att::entropy_loss(att::attention_probs(t * in.W, in.scene));
    if (h > prev + 1e-10) return "entropy increased with temperature scale";
    prev = h;
  }
  return "";
}

inline std::string soft_hard_consistency(const Instance& in) {
  const Eigen::MatrixXd p = att::attention_probs(in.W, in.scene);
  const Eigen::VectorXd soft = att::soft_observation(p, in.scene);
  const Eigen::VectorXd hard = att::hard_observation(in.W, in.scene).observation;
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    const double delta = 1.0 - p.row(j).maxCoeff();
    if ((soft.segment(4 * j, 4) - hard.segment(4 * j, 4)).cwiseAbs().maxCoeff() > delta + 1e-12)
      return "soft block further than 1 - max p from the hard block";
  }
  return "";
}

inline std::string shift_invariance(Rng& rng) {
  Eigen::VectorXd z(6);
  for (int i = 0; i < 6; ++i) z[i] = 10.0 * rng.normal();
  const double c = 1000.0 * rng.normal();
  if ((att::stable_softmax(z) - att::stable_softmax(z.array() + c).matrix()).cwiseAbs().maxCoeff() > 1e-12)
    return "softmax changed under a logit shift";
  return "";
}

/// All properties on one random instance.
inline std::string check_all(Rng& rng) {
  const Instance in = random_instance(rng);
  for (const std::string& r : {row_sums(in), entropy_bounds(in), hull_bound(in), permutation_invariance(in, rng),
                               temperature_monotone(in), soft_hard_consistency(in), shift_invariance(rng)}) {
    if (!r.empty()) return r;
  }
  return "";
}

/// Random small gradient instance: M in {1,2}, N in [3,5], d = 4, batch 2.
struct GradientCase {
  att::AttentionModel model;
  std::vector<objattn::DemoStep> batch;
  double lambda = 0.0;
};

inline GradientCase gradient_case(Rng& rng) {
  GradientCase g;
  const int m = 1 + static_cast<int>(rng.uniform_index(2));
  g.model = att::make_attention_model(m, 4, 6, rng, 1.0);
  g.lambda = rng.uniform(0.0, 0.5);
  for (int b = 0; b < 2; ++b) {
    objattn::DemoStep s;
    s.scene = oracle::random_scene(rng, 3 + static_cast<int>(rng.uniform_index(3)), 4);
    s.state.position = objattn::Vec2(rng.uniform(), rng.uniform());
    s.state.velocity = objattn::Vec2(rng.normal(0.0, 0.05), rng.normal(0.0, 0.05));
    s.target = objattn::Vec2(rng.normal(0.0, 0.5), rng.normal(0.0, 0.5));
    g.batch.push_back(std::move(s));
  }
  return g;
}

/// Relative error between the analytic gradient and central differences of
/// the library loss (step 1e-5).
inline double gradient_error(const GradientCase& g) {
  const Eigen::VectorXd analytic =
      att::gradients(g.model, std::span<const objattn::DemoStep>(g.batch), g.lambda, att::kDefaultEpsNorm).flatten();
  auto f = [&](const Eigen::VectorXd& p) {
    att::AttentionModel m = g.model;
    m.set_parameters(p);
    return att::total_loss(m, std::span<const objattn::DemoStep>(g.batch), g.lambda, att::kDefaultEpsNorm).total;
  };
  return oracle::relative_error(analytic, oracle::finite_difference(f, g.model.parameters(), 1e-5));
}

}  // namespace props
