#include "objattn/core/types.hpp"

#include <algorithm>
#include <cmath>

#include "objattn/core/error.hpp"

namespace objattn {

BoundingBox BoundingBox::make(double x_min, double y_min, double x_max, double y_max) {
  BoundingBox b{x_min, y_min, x_max, y_max};
  if (!b.valid()) {
    throw InvariantError("invalid bounding box (" + std::to_string(x_min) + ", " +
                         std::to_string(y_min) + ", " + std::to_string(x_max) + ", " +
                         std::to_string(y_max) + ")");
  }
  return b;
}

BoundingBox BoundingBox::around(const Vec2& center, double radius) {
  return make(std::clamp(center.x() - radius, 0.0, 1.0), std::clamp(center.y() - radius, 0.0, 1.0),
              std::clamp(center.x() + radius, 0.0, 1.0), std::clamp(center.y() + radius, 0.0, 1.0));
}

bool BoundingBox::valid() const {
  const auto in_unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  return in_unit(x_min) && in_unit(y_min) && in_unit(x_max) && in_unit(y_max) && x_min < x_max &&
         y_min < y_max;
}

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return v.allFinite();
}

Eigen::Index Scene::dimension() const {
  return proposals.empty() ? 0 : proposals.front().feature.size();
}

void Scene::validate() const {
  if (proposals.empty()) throw InvariantError("scene \"" + scene_id + "\": N >= 1 violated");
  const Eigen::Index d = dimension();
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const auto& p = proposals[i];
    if (!p.box.valid()) {
      throw InvariantError("scene \"" + scene_id + "\": proposal " + std::to_string(i) +
                           " has an invalid box");
    }
    if (p.feature.size() != d) {
      throw DimensionError("scene \"" + scene_id + "\": proposal " + std::to_string(i) +
                           " has feature dimension " + std::to_string(p.feature.size()) +
                           ", expected " + std::to_string(d));
    }
    if (!p.feature.allFinite()) {
      throw InvariantError("scene \"" + scene_id + "\": proposal " + std::to_string(i) +
                           " has a non-finite feature");
    }
  }
  if (d == 0) throw InvariantError("scene \"" + scene_id + "\": empty feature vectors");
}

Scene strip_labels(Scene scene) {
  for (auto& p : scene.proposals) p.label.reset();
  return scene;
}

const char* to_string(TargetConvention c) {
  return c == TargetConvention::Action ? "action" : "ee_delta";
}

TargetConvention parse_target_convention(const std::string& s) {
  if (s == "action") return TargetConvention::Action;
  if (s == "ee_delta") return TargetConvention::EeDelta;
  throw SchemaError("target_convention", "expected \"action\" or \"ee_delta\", got \"" + s + "\"");
}

void Demonstration::validate() const {
  if (steps.size() < 2) {
    throw InvariantError("demonstration \"" + episode_id + "\" has fewer than 2 steps");
  }
  for (const auto& s : steps) {
    s.scene.validate();
    if (!s.target.allFinite() || !s.state.position.allFinite() || !s.state.velocity.allFinite()) {
      throw InvariantError("demonstration \"" + episode_id + "\" has a non-finite step");
    }
  }
}

}  // namespace objattn
