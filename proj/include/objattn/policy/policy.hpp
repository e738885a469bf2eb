#pragma once

#include <string>
#include <vector>

#include "objattn/core/mlp.hpp"
#include "objattn/core/serialization.hpp"
#include "objattn/simworld/sim.hpp"

namespace objattn::policy {

struct PolicyArch {
  std::vector<int> hidden{32, 32};
  // Network output is multiplied by this to give the velocity command.
  double output_scale = 1.0;

  void validate() const;
};

Json encode_arch(const PolicyArch& a);
PolicyArch decode_arch(const Json& j, const std::string& path);

/// Maps [position, velocity, nu_hard (4M)] to a velocity command. Without
/// vision the nu block is zeroed, so the output ignores the scene.
struct Policy {
  Mlp net;
  PolicyArch arch;
  int rows = 1;
  bool vision = true;
  // "bc_config" or "rl_config", echoed into the artifact.
  std::string config_kind = "bc_config";
  Json training_config = Json::object();
  std::vector<double> loss_log;

  Eigen::Index input_size() const { return 4 + 4 * rows; }
  Eigen::VectorXd input(const RobotState& state, const ObservationVector& nu_hard) const;
  sim::Action act(const RobotState& state, const ObservationVector& nu_hard) const;
};

Policy make_policy(int rows, const PolicyArch& arch, bool vision, Rng& rng);

}  // namespace objattn::policy

namespace objattn {
template <>
struct ArtifactCodec<policy::Policy> {
  static Json encode(const policy::Policy& p);
  static policy::Policy decode(const Json& j, const std::filesystem::path& base_dir, const std::string& path = "");
};
}  // namespace objattn
