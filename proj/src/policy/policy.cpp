#include "objattn/policy/policy.hpp"

#include <cmath>

#include "objattn/core/error.hpp"

namespace objattn::policy {

void PolicyArch::validate() const {
  if (hidden.empty()) throw ConfigError("policy.arch.hidden needs at least one layer");
  for (int w : hidden)
    if (w < 1) throw ConfigError("policy.arch.hidden widths must be >= 1");
  if (!(output_scale > 0.0) || !std::isfinite(output_scale)) throw ConfigError("policy.arch.output_scale must be > 0");
}

Json encode_arch(const PolicyArch& a) {
  return Json{{"hidden", a.hidden}, {"output_scale", a.output_scale}, {"activation", "tanh"}};
}

PolicyArch decode_arch(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  PolicyArch a;
  a.hidden = json_io::value_or(j, "hidden", a.hidden);
  a.output_scale = json_io::value_or(j, "output_scale", a.output_scale);
  a.validate();
  return a;
}

Eigen::VectorXd Policy::input(const RobotState& state, const ObservationVector& nu_hard) const {
  if (nu_hard.size() != 4 * rows) {
    throw DimensionError("policy expects a " + std::to_string(4 * rows) + "-dim observation, got " +
                         std::to_string(nu_hard.size()));
  }
  Eigen::VectorXd x(input_size());
  x.head<2>() = state.position;
  x.segment<2>(2) = state.velocity;
  if (vision) {
    x.tail(4 * rows) = nu_hard;
  } else {
    x.tail(4 * rows).setZero();
  }
  return x;
}

sim::Action Policy::act(const RobotState& state, const ObservationVector& nu_hard) const {
  const Eigen::VectorXd y = net.forward(input(state, nu_hard));
  return {Vec2(y[0], y[1]) * arch.output_scale};
}

Policy make_policy(int rows, const PolicyArch& arch, bool vision, Rng& rng) {
  arch.validate();
  if (rows < 1) throw ConfigError("policy needs at least one attention row");
  Policy p;
  p.arch = arch;
  p.rows = rows;
  p.vision = vision;
  p.net = Mlp::fan_in_uniform(4 + 4 * rows, arch.hidden, 2, rng);
  return p;
}

}  // namespace objattn::policy

namespace objattn {

Json ArtifactCodec<policy::Policy>::encode(const policy::Policy& p) {
  Json arch = policy::encode_arch(p.arch);
  arch["rows"] = p.rows;
  Json j{{"arch", std::move(arch)},
         {"vision", p.vision},
         {"layers", encode_mlp(p.net)["layers"]},
         {"loss_log", p.loss_log}};
  j[p.config_kind] = p.training_config;
  return j;
}

policy::Policy ArtifactCodec<policy::Policy>::decode(const Json& j, const std::filesystem::path&,
                                                     const std::string& path) {
  policy::Policy p;
  const Json& arch = json_io::require(j, "arch", path);
  p.arch = policy::decode_arch(arch, "arch");
  p.rows = static_cast<int>(json_io::integer(arch, "rows", "arch"));
  p.vision = json_io::boolean(j, "vision", path);
  p.net = decode_mlp(Json{{"activation", "tanh"}, {"layers", json_io::require(j, "layers", path)}}, "layers");
  if (p.net.input_size() != p.input_size() || p.net.output_size() != 2 || p.net.hidden_sizes() != p.arch.hidden) {
    throw SchemaError("layers", "layer shapes do not match arch");
  }
  if (auto it = j.find("rl_config"); it != j.end()) {
    p.config_kind = "rl_config";
    p.training_config = *it;
  } else if (auto bc = j.find("bc_config"); bc != j.end()) {
    p.config_kind = "bc_config";
    p.training_config = *bc;
  } else {
    throw SchemaError("bc_config", "policy needs \"bc_config\" or \"rl_config\"");
  }
  p.loss_log = json_io::value_or(j, "loss_log", std::vector<double>{});
  return p;
}

}  // namespace objattn
