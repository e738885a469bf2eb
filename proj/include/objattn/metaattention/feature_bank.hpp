#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "objattn/core/rng.hpp"
#include "objattn/core/serialization.hpp"
#include "objattn/core/types.hpp"

namespace objattn::meta {

struct ClassPrototype {
  std::string class_id;
  FeatureVector prototype;  // unit norm
  double instance_noise = 0.0;
  double nuisance_noise = 0.0;
};

/// Synthetic stand-in for pretrained convolutional features. Each class has
/// a unit prototype on the (d-1)-sphere; an instance is the prototype plus a
/// fixed per-instance offset, and each observation adds a fresh nuisance
/// offset before renormalizing.
class FeatureBank {
 public:
  FeatureBank(int dimension, std::vector<ClassPrototype> classes, double min_separation);

  int dimension() const { return dimension_; }
  double min_separation() const { return min_separation_; }
  const std::vector<ClassPrototype>& classes() const { return classes_; }

  bool contains(const std::string& class_id) const;
  /// Throws LookupError for unknown ids.
  const ClassPrototype& find(const std::string& class_id) const;

  /// Adds a class at exactly `angle` radians from `parent`, rotated toward a
  /// random direction orthogonal to the parent. min_separation is lowered to
  /// the new minimum pairwise angle if needed.
  void add_related_class(const std::string& class_id, const std::string& parent, double angle, Rng& rng,
                         double instance_noise, double nuisance_noise);

  /// Smallest pairwise angle between prototypes (pi when fewer than 2).
  double pairwise_min_angle() const;

 private:
  int dimension_;
  std::vector<ClassPrototype> classes_;
  double min_separation_;
};

double angle_between(const FeatureVector& a, const FeatureVector& b);
double cosine_similarity(const FeatureVector& a, const FeatureVector& b);
FeatureVector random_unit_vector(int dimension, Rng& rng);

/// Rejection-samples K unit prototypes with pairwise angle >= min_separation.
/// Throws ConfigError when `attempt_cap` draws cannot place a class.
FeatureBank make_feature_bank(int dimension, const std::vector<std::string>& class_ids, double instance_noise,
                              double nuisance_noise, double min_separation, Rng& rng, int attempt_cap = 20000);

/// Stream that fixes the appearance of one object instance.
Rng instance_stream(const std::string& class_id, std::uint64_t instance_seed);

/// prototype + instance offset + nuisance offset, renormalized. Offsets are
/// isotropic Gaussians scaled so their expected norm is ~noise.
FeatureVector sample_instance_feature(const FeatureBank& bank, const std::string& class_id, Rng& instance_rng,
                                      Rng& nuisance_rng);

}  // namespace objattn::meta

namespace objattn {
template <>
struct ArtifactCodec<meta::FeatureBank> {
  static Json encode(const meta::FeatureBank& bank);
  static meta::FeatureBank decode(const Json& j, const std::filesystem::path& base_dir, const std::string& path = "");
};
}  // namespace objattn
