#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "objattn/core/rng.hpp"
#include "objattn/core/types.hpp"
#include "objattn/metaattention/feature_bank.hpp"

namespace objattn::meta {

enum class ClutterFeatureMode { RandomUnit, NearClass };

/// Noise model of the region proposer.
struct ProposerConfig {
  double box_jitter = 0.0;  // std of each corner perturbation
  int clutter_count = 0;
  ClutterFeatureMode clutter_feature_mode = ClutterFeatureMode::RandomUnit;
  double miss_rate = 0.0;  // in [0, 1)
  // Offset scale for "near-class" clutter (prototype + large offset).
  double near_class_noise = 1.0;
  double clutter_min_half_size = 0.02;
  double clutter_max_half_size = 0.08;

  void validate() const;
};

Json encode_proposer(const ProposerConfig& c);
ProposerConfig decode_proposer(const Json& j, const std::string& path);

struct TrueObject {
  std::string class_id;
  std::uint64_t instance_seed = 0;
  BoundingBox box;
};

inline constexpr const char* kClutterLabel = "clutter";

/// One scene of object hypotheses: jittered boxes and instance features for
/// the retained true objects, plus clutter, in rng-shuffled order. Labels
/// are attached for evaluation. Throws InvariantError if nothing remains.
Scene propose(const std::vector<TrueObject>& true_objects, const FeatureBank& bank, const ProposerConfig& config,
              Rng& rng, const std::string& scene_id = "");

/// Externally computed proposals. Features need not be unit norm.
Scene load_external_scene(const std::filesystem::path& path);
void save_scene(const std::filesystem::path& path, const Scene& scene);

}  // namespace objattn::meta
