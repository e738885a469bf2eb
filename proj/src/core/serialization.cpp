#include "objattn/core/serialization.hpp"

#include <fstream>
#include <sstream>

namespace objattn {
namespace json_io {

namespace {
std::string join(const std::string& path, std::string_view field) {
  return path.empty() ? std::string(field) : path + "." + std::string(field);
}
}  // namespace

const Json& require(const Json& j, std::string_view field, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "<root>" : path, "expected an object");
  auto it = j.find(field);
  if (it == j.end()) throw SchemaError(join(path, field), "missing field");
  return *it;
}

double number(const Json& j, std::string_view field, const std::string& path) {
  const Json& v = require(j, field, path);
  if (!v.is_number()) throw SchemaError(join(path, field), "expected a number");
  return v.get<double>();
}

std::int64_t integer(const Json& j, std::string_view field, const std::string& path) {
  const Json& v = require(j, field, path);
  if (!v.is_number_integer()) throw SchemaError(join(path, field), "expected an integer");
  return v.get<std::int64_t>();
}

std::uint64_t unsigned_integer(const Json& j, std::string_view field, const std::string& path) {
  const Json& v = require(j, field, path);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw SchemaError(join(path, field), "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string(const Json& j, std::string_view field, const std::string& path) {
  const Json& v = require(j, field, path);
  if (!v.is_string()) throw SchemaError(join(path, field), "expected a string");
  return v.get<std::string>();
}

bool boolean(const Json& j, std::string_view field, const std::string& path) {
  const Json& v = require(j, field, path);
  if (!v.is_boolean()) throw SchemaError(join(path, field), "expected a boolean");
  return v.get<bool>();
}

Eigen::VectorXd vector(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw SchemaError(path + "[" + std::to_string(i) + "]", "expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of rows");
  if (j.empty()) return {};
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    Eigen::VectorXd row = vector(j[r], path + "[" + std::to_string(r) + "]");
    if (r == 0) m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    if (row.size() != m.cols()) throw SchemaError(path + "[" + std::to_string(r) + "]", "ragged matrix row");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Vec2 vec2(const Json& j, const std::string& path) {
  Eigen::VectorXd v = vector(j, path);
  if (v.size() != 2) throw SchemaError(path, "expected 2 numbers");
  return {v[0], v[1]};
}

Json from_vector(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Json from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(from_vector(m.row(r).transpose()));
  return out;
}

Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write file: " + path.string());
  out << j.dump(2) << '\n';
}

void check_version(const Json& j) {
  const std::string version = string(j, "schema_version");
  if (version != kSchemaVersion) {
    throw VersionError("unsupported schema_version \"" + version + "\" (expected \"" + kSchemaVersion + "\")");
  }
}

}  // namespace json_io

Json encode_box(const BoundingBox& b) {
  return Json::array({b.x_min, b.y_min, b.x_max, b.y_max});
}

BoundingBox decode_box(const Json& j, const std::string& path) {
  Eigen::VectorXd v = json_io::vector(j, path);
  if (v.size() != 4) throw SchemaError(path, "expected [x_min, y_min, x_max, y_max]");
  BoundingBox b{v[0], v[1], v[2], v[3]};
  if (!b.valid()) throw SchemaError(path, "bounding box violates 0 <= min < max <= 1");
  return b;
}

Json ArtifactCodec<Scene>::encode(const Scene& scene) {
  Json proposals = Json::array();
  for (const auto& p : scene.proposals) {
    Json jp{{"box", encode_box(p.box)}, {"feature", json_io::from_vector(p.feature)}};
    if (p.label) jp["label"] = *p.label;
    proposals.push_back(std::move(jp));
  }
  return Json{{"scene_id", scene.scene_id}, {"proposals", std::move(proposals)}};
}

Scene ArtifactCodec<Scene>::decode(const Json& j, const std::filesystem::path&, const std::string& path) {
  Scene scene;
  scene.scene_id = json_io::string(j, "scene_id", path);
  const Json& proposals = json_io::require(j, "proposals", path);
  const std::string ppath = path.empty() ? "proposals" : path + ".proposals";
  if (!proposals.is_array()) throw SchemaError(ppath, "expected an array");
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const std::string ip = ppath + "[" + std::to_string(i) + "]";
    ObjectProposal p;
    p.box = decode_box(json_io::require(proposals[i], "box", ip), ip + ".box");
    p.feature = json_io::vector(json_io::require(proposals[i], "feature", ip), ip + ".feature");
    if (auto it = proposals[i].find("label"); it != proposals[i].end() && !it->is_null()) {
      if (!it->is_string()) throw SchemaError(ip + ".label", "expected a string");
      p.label = it->get<std::string>();
    }
    if (!scene.proposals.empty() && p.feature.size() != scene.proposals.front().feature.size()) {
      throw SchemaError(ip + ".feature", "feature dimension mismatch across proposals");
    }
    scene.proposals.push_back(std::move(p));
  }
  scene.validate();
  return scene;
}

namespace {
Json encode_state(const RobotState& s) {
  return Json{{"pos", json_io::from_vector(s.position)}, {"vel", json_io::from_vector(s.velocity)}};
}
}  // namespace

Json ArtifactCodec<Demonstration>::encode(const Demonstration& demo) {
  Json steps = Json::array();
  for (const auto& s : demo.steps) {
    steps.push_back(Json{{"state", encode_state(s.state)},
                         {"scene", ArtifactCodec<Scene>::encode(s.scene)},
                         {"target", json_io::from_vector(s.target)}});
  }
  return Json{{"episode_id", demo.episode_id},
              {"target_convention", to_string(demo.target_convention)},
              {"steps", std::move(steps)}};
}

Demonstration ArtifactCodec<Demonstration>::decode(const Json& j, const std::filesystem::path& base_dir,
                                                   const std::string& path) {
  Demonstration demo;
  demo.episode_id = json_io::string(j, "episode_id", path);
  demo.target_convention = parse_target_convention(json_io::string(j, "target_convention", path));
  const Json& steps = json_io::require(j, "steps", path);
  if (!steps.is_array()) throw SchemaError("steps", "expected an array");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string sp = "steps[" + std::to_string(i) + "]";
    DemoStep step;
    const Json& state = json_io::require(steps[i], "state", sp);
    step.state.position = json_io::vec2(json_io::require(state, "pos", sp + ".state"), sp + ".state.pos");
    step.state.velocity = json_io::vec2(json_io::require(state, "vel", sp + ".state"), sp + ".state.vel");
    const Json& scene = json_io::require(steps[i], "scene", sp);
    if (auto ref = scene.find("ref"); ref != scene.end()) {
      if (!ref->is_string()) throw SchemaError(sp + ".scene.ref", "expected a path string");
      const std::filesystem::path scene_path = base_dir / ref->get<std::string>();
      step.scene = load_artifact<Scene>(scene_path);
    } else {
      step.scene = ArtifactCodec<Scene>::decode(scene, base_dir, sp + ".scene");
    }
    step.target = json_io::vec2(json_io::require(steps[i], "target", sp), sp + ".target");
    demo.steps.push_back(std::move(step));
  }
  demo.validate();
  return demo;
}

}  // namespace objattn
