#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "objattn/core/error.hpp"
#include "objattn/core/types.hpp"

namespace objattn {

using Json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

namespace json_io {

/// Returns j[field]; throws SchemaError naming `path + field` when absent.
const Json& require(const Json& j, std::string_view field, const std::string& path = "");
double number(const Json& j, std::string_view field, const std::string& path = "");
std::int64_t integer(const Json& j, std::string_view field, const std::string& path = "");
std::uint64_t unsigned_integer(const Json& j, std::string_view field, const std::string& path = "");
std::string string(const Json& j, std::string_view field, const std::string& path = "");
bool boolean(const Json& j, std::string_view field, const std::string& path = "");

Eigen::VectorXd vector(const Json& j, const std::string& path);
Eigen::MatrixXd matrix(const Json& j, const std::string& path);
Vec2 vec2(const Json& j, const std::string& path);
Json from_vector(const Eigen::Ref<const Eigen::VectorXd>& v);
Json from_matrix(const Eigen::Ref<const Eigen::MatrixXd>& m);

template <class T>
T value_or(const Json& j, std::string_view field, T fallback) {
  auto it = j.find(field);
  if (it == j.end()) return fallback;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string(field), "wrong value type");
  }
}

Json read_file(const std::filesystem::path& path);
/// Writes pretty-printed JSON with a trailing newline. Output is a pure
/// function of the value (keys are sorted).
void write_file(const std::filesystem::path& path, const Json& j);

/// Throws SchemaError if "schema_version" is missing, VersionError if it
/// differs from kSchemaVersion.
void check_version(const Json& j);

}  // namespace json_io

/// Encode/decode specialisations per artifact type. Each module provides the
/// specialisations for its own types.
template <class T>
struct ArtifactCodec;

template <>
struct ArtifactCodec<Scene> {
  static Json encode(const Scene& scene);
  static Scene decode(const Json& j, const std::filesystem::path& base_dir, const std::string& path = "");
};

template <>
struct ArtifactCodec<Demonstration> {
  static Json encode(const Demonstration& demo);
  /// Inline scenes and {"ref": file} scenes are both accepted; refs resolve
  /// relative to base_dir.
  static Demonstration decode(const Json& j, const std::filesystem::path& base_dir, const std::string& path = "");
};

BoundingBox decode_box(const Json& j, const std::string& path);
Json encode_box(const BoundingBox& b);

template <class T>
Json encode_artifact(const T& value) {
  Json j = ArtifactCodec<T>::encode(value);
  j["schema_version"] = kSchemaVersion;
  return j;
}

template <class T>
T decode_artifact(const Json& j, const std::filesystem::path& base_dir = {}) {
  json_io::check_version(j);
  return ArtifactCodec<T>::decode(j, base_dir);
}

template <class T>
void save_artifact(const std::filesystem::path& path, const T& value) {
  json_io::write_file(path, encode_artifact(value));
}

template <class T>
T load_artifact(const std::filesystem::path& path) {
  return decode_artifact<T>(json_io::read_file(path), path.parent_path());
}

}  // namespace objattn
