#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace objattn {

using Vec2 = Eigen::Vector2d;
using FeatureVector = Eigen::VectorXd;
/// Concatenation of M attended boxes, 4 coordinates per attention row.
using ObservationVector = Eigen::VectorXd;

/// Axis-aligned box in normalized image coordinates.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  /// Checked constructor; throws InvariantError on a degenerate or
  /// out-of-range box.
  static BoundingBox make(double x_min, double y_min, double x_max, double y_max);
  /// Square footprint of a disc, clamped to the unit square.
  static BoundingBox around(const Vec2& center, double radius);

  bool valid() const;
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  std::array<double, 4> coords() const { return {x_min, y_min, x_max, y_max}; }

  bool operator==(const BoundingBox&) const = default;
};

struct ObjectProposal {
  BoundingBox box;
  FeatureVector feature;
  // Evaluation only. Learners never read this.
  std::optional<std::string> label;
};

struct Scene {
  std::string scene_id;
  std::vector<ObjectProposal> proposals;

  std::size_t size() const { return proposals.size(); }
  Eigen::Index dimension() const;
  /// Throws InvariantError / DimensionError if the scene is empty, has a
  /// bad box, a non-finite feature, or mixed feature dimensions.
  void validate() const;
};

/// Copy of the scene with evaluation labels removed.
Scene strip_labels(Scene scene);

struct RobotState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

enum class TargetConvention { Action, EeDelta };

const char* to_string(TargetConvention c);
TargetConvention parse_target_convention(const std::string& s);

struct DemoStep {
  RobotState state;
  Scene scene;
  Vec2 target = Vec2::Zero();
};

struct Demonstration {
  std::string episode_id;
  TargetConvention target_convention = TargetConvention::EeDelta;
  std::vector<DemoStep> steps;

  void validate() const;
};

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace objattn
