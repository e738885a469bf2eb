#include "objattn/metaattention/proposer.hpp"

#include <algorithm>
#include <cmath>

#include "objattn/core/error.hpp"
#include "objattn/core/serialization.hpp"

namespace objattn::meta {

void ProposerConfig::validate() const {
  if (!std::isfinite(box_jitter) || box_jitter < 0.0) throw ConfigError("proposer.box_jitter must be >= 0");
  if (clutter_count < 0) throw ConfigError("proposer.clutter_count must be >= 0");
  if (!(miss_rate >= 0.0 && miss_rate < 1.0)) throw ConfigError("proposer.miss_rate must be in [0, 1)");
  if (!std::isfinite(near_class_noise) || near_class_noise < 0.0) {
    throw ConfigError("proposer.near_class_noise must be >= 0");
  }
  if (!(clutter_min_half_size > 0.0 && clutter_min_half_size <= clutter_max_half_size &&
        clutter_max_half_size < 0.5)) {
    throw ConfigError("proposer clutter box sizes must satisfy 0 < min <= max < 0.5");
  }
}

Json encode_proposer(const ProposerConfig& c) {
  return Json{{"box_jitter", c.box_jitter},
              {"clutter_count", c.clutter_count},
              {"clutter_feature_mode",
               c.clutter_feature_mode == ClutterFeatureMode::RandomUnit ? "random-unit" : "near-class"},
              {"miss_rate", c.miss_rate},
              {"near_class_noise", c.near_class_noise},
              {"clutter_min_half_size", c.clutter_min_half_size},
              {"clutter_max_half_size", c.clutter_max_half_size}};
}

ProposerConfig decode_proposer(const Json& j, const std::string& path) {
  ProposerConfig c;
  c.box_jitter = json_io::value_or(j, "box_jitter", c.box_jitter);
  c.clutter_count = json_io::value_or(j, "clutter_count", c.clutter_count);
  const std::string mode = json_io::value_or<std::string>(j, "clutter_feature_mode", "random-unit");
  if (mode == "random-unit") {
    c.clutter_feature_mode = ClutterFeatureMode::RandomUnit;
  } else if (mode == "near-class") {
    c.clutter_feature_mode = ClutterFeatureMode::NearClass;
  } else {
    throw SchemaError(path + ".clutter_feature_mode", "expected \"random-unit\" or \"near-class\"");
  }
  c.miss_rate = json_io::value_or(j, "miss_rate", c.miss_rate);
  c.near_class_noise = json_io::value_or(j, "near_class_noise", c.near_class_noise);
  c.clutter_min_half_size = json_io::value_or(j, "clutter_min_half_size", c.clutter_min_half_size);
  c.clutter_max_half_size = json_io::value_or(j, "clutter_max_half_size", c.clutter_max_half_size);
  c.validate();
  return c;
}

namespace {

BoundingBox jitter_box(const BoundingBox& box, double sigma, Rng& rng) {
  if (sigma == 0.0) return box;
  double x0 = std::clamp(box.x_min + rng.normal(0.0, sigma), 0.0, 1.0);
  double y0 = std::clamp(box.y_min + rng.normal(0.0, sigma), 0.0, 1.0);
  double x1 = std::clamp(box.x_max + rng.normal(0.0, sigma), 0.0, 1.0);
  double y1 = std::clamp(box.y_max + rng.normal(0.0, sigma), 0.0, 1.0);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  // Collapsed extents are widened minimally to keep the box valid.
  constexpr double kMinExtent = 1e-6;
  if (x1 - x0 < kMinExtent) {
    x0 = std::max(0.0, x1 - kMinExtent);
    x1 = x0 + kMinExtent;
  }
  if (y1 - y0 < kMinExtent) {
    y0 = std::max(0.0, y1 - kMinExtent);
    y1 = y0 + kMinExtent;
  }
  return BoundingBox::make(x0, y0, x1, y1);
}

BoundingBox random_box(const ProposerConfig& config, Rng& rng) {
  const double hw = rng.uniform(config.clutter_min_half_size, config.clutter_max_half_size);
  const double hh = rng.uniform(config.clutter_min_half_size, config.clutter_max_half_size);
  const double cx = rng.uniform(hw, 1.0 - hw);
  const double cy = rng.uniform(hh, 1.0 - hh);
  return BoundingBox::make(cx - hw, cy - hh, cx + hw, cy + hh);
}

FeatureVector clutter_feature(const FeatureBank& bank, const ProposerConfig& config, Rng& rng) {
  if (config.clutter_feature_mode == ClutterFeatureMode::RandomUnit || bank.classes().empty()) {
    return random_unit_vector(bank.dimension(), rng);
  }
  const auto& proto = bank.classes()[rng.uniform_index(bank.classes().size())].prototype;
  const double scale = config.near_class_noise / std::sqrt(static_cast<double>(bank.dimension()));
  FeatureVector f = proto;
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] += scale * rng.normal();
  const double n = f.norm();
  return n < 1e-12 ? proto : FeatureVector(f / n);
}

}  // namespace

Scene propose(const std::vector<TrueObject>& true_objects, const FeatureBank& bank, const ProposerConfig& config,
              Rng& rng, const std::string& scene_id) {
  config.validate();
  Scene scene;
  scene.scene_id = scene_id;
  for (const auto& obj : true_objects) {
    if (!obj.box.valid()) throw InvariantError("true object \"" + obj.class_id + "\" has an invalid box");
    if (config.miss_rate > 0.0 && rng.uniform() < config.miss_rate) continue;
    ObjectProposal p;
    p.box = jitter_box(obj.box, config.box_jitter, rng);
    Rng instance = instance_stream(obj.class_id, obj.instance_seed);
    p.feature = sample_instance_feature(bank, obj.class_id, instance, rng);
    p.label = obj.class_id;
    scene.proposals.push_back(std::move(p));
  }
  for (int k = 0; k < config.clutter_count; ++k) {
    ObjectProposal p;
    p.box = random_box(config, rng);
    p.feature = clutter_feature(bank, config, rng);
    p.label = kClutterLabel;
    scene.proposals.push_back(std::move(p));
  }
  if (scene.proposals.empty()) throw InvariantError("propose produced no proposals: N >= 1 violated");
  rng.shuffle(scene.proposals);
  return scene;
}

Scene load_external_scene(const std::filesystem::path& path) {
  return load_artifact<Scene>(path);
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  scene.validate();
  save_artifact(path, scene);
}

}  // namespace objattn::meta
