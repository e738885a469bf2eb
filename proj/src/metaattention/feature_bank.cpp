#include "objattn/metaattention/feature_bank.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "objattn/core/error.hpp"

namespace objattn::meta {

namespace {

void check_noise(const ClassPrototype& c) {
  if (!std::isfinite(c.instance_noise) || c.instance_noise < 0.0 || !std::isfinite(c.nuisance_noise) ||
      c.nuisance_noise < 0.0) {
    throw InvariantError("class \"" + c.class_id + "\": noise scales must be finite and >= 0");
  }
}

FeatureVector gaussian_vector(int dimension, Rng& rng) {
  FeatureVector v(dimension);
  for (int i = 0; i < dimension; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

double cosine_similarity(const FeatureVector& a, const FeatureVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double angle_between(const FeatureVector& a, const FeatureVector& b) {
  return std::acos(cosine_similarity(a, b));
}

FeatureVector random_unit_vector(int dimension, Rng& rng) {
  FeatureVector v;
  double n = 0.0;
  do {
    v = gaussian_vector(dimension, rng);
    n = v.norm();
  } while (n < 1e-12);
  return v / n;
}

FeatureBank::FeatureBank(int dimension, std::vector<ClassPrototype> classes, double min_separation)
    : dimension_(dimension), classes_(std::move(classes)), min_separation_(min_separation) {
  if (dimension_ < 2) throw InvariantError("feature dimension must be >= 2");
  for (const auto& c : classes_) {
    if (c.prototype.size() != dimension_) throw DimensionError("class \"" + c.class_id + "\": prototype dimension");
    if (std::abs(c.prototype.norm() - 1.0) > 1e-9) {
      throw InvariantError("class \"" + c.class_id + "\": prototype is not unit norm");
    }
    check_noise(c);
  }
  for (std::size_t i = 0; i < classes_.size(); ++i)
    for (std::size_t j = i + 1; j < classes_.size(); ++j)
      if (classes_[i].class_id == classes_[j].class_id) throw InvariantError("duplicate class \"" + classes_[i].class_id + "\"");
  if (pairwise_min_angle() + 1e-12 < min_separation_) {
    throw InvariantError("prototypes closer than min_separation");
  }
}

bool FeatureBank::contains(const std::string& class_id) const {
  return std::any_of(classes_.begin(), classes_.end(), [&](const auto& c) { return c.class_id == class_id; });
}

const ClassPrototype& FeatureBank::find(const std::string& class_id) const {
  for (const auto& c : classes_)
    if (c.class_id == class_id) return c;
  throw LookupError("unknown class \"" + class_id + "\"");
}

double FeatureBank::pairwise_min_angle() const {
  double best = std::numbers::pi;
  for (std::size_t i = 0; i < classes_.size(); ++i)
    for (std::size_t j = i + 1; j < classes_.size(); ++j)
      best = std::min(best, angle_between(classes_[i].prototype, classes_[j].prototype));
  return best;
}

void FeatureBank::add_related_class(const std::string& class_id, const std::string& parent, double angle, Rng& rng,
                                    double instance_noise, double nuisance_noise) {
  if (contains(class_id)) throw InvariantError("duplicate class \"" + class_id + "\"");
  if (!(angle > 0.0 && angle <= std::numbers::pi)) throw ConfigError("related-class angle must be in (0, pi]");
  const FeatureVector& base = find(parent).prototype;
  FeatureVector dir;
  do {
    dir = gaussian_vector(dimension_, rng);
    dir -= dir.dot(base) * base;
  } while (dir.norm() < 1e-9);
  dir.normalize();
  ClassPrototype c{class_id, std::cos(angle) * base + std::sin(angle) * dir, instance_noise, nuisance_noise};
  c.prototype.normalize();
  check_noise(c);
  classes_.push_back(std::move(c));
  min_separation_ = std::min(min_separation_, pairwise_min_angle());
}

FeatureBank make_feature_bank(int dimension, const std::vector<std::string>& class_ids, double instance_noise,
                              double nuisance_noise, double min_separation, Rng& rng, int attempt_cap) {
  if (dimension < 2) throw ConfigError("feature dimension must be >= 2");
  std::vector<ClassPrototype> classes;
  for (const auto& id : class_ids) {
    bool placed = false;
    for (int attempt = 0; attempt < attempt_cap && !placed; ++attempt) {
      FeatureVector candidate = random_unit_vector(dimension, rng);
      const bool separated = std::all_of(classes.begin(), classes.end(), [&](const ClassPrototype& c) {
        return angle_between(candidate, c.prototype) >= min_separation;
      });
      if (separated) {
        classes.push_back({id, std::move(candidate), instance_noise, nuisance_noise});
        placed = true;
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "cannot separate " << class_ids.size() << " classes at angle " << min_separation << " in dimension "
          << dimension;
      throw ConfigError(msg.str());
    }
  }
  return FeatureBank(dimension, std::move(classes), min_separation);
}

Rng instance_stream(const std::string& class_id, std::uint64_t instance_seed) {
  return Rng::derive(hash_string(class_id), instance_seed);
}

FeatureVector sample_instance_feature(const FeatureBank& bank, const std::string& class_id, Rng& instance_rng,
                                      Rng& nuisance_rng) {
  const ClassPrototype& c = bank.find(class_id);
  const double scale = 1.0 / std::sqrt(static_cast<double>(bank.dimension()));
  FeatureVector f = c.prototype;
  // Draws are consumed even at zero noise so streams stay aligned.
  f += (c.instance_noise * scale) * gaussian_vector(bank.dimension(), instance_rng);
  f += (c.nuisance_noise * scale) * gaussian_vector(bank.dimension(), nuisance_rng);
  const double n = f.norm();
  if (n < 1e-12) return c.prototype;
  return f / n;
}

}  // namespace objattn::meta

namespace objattn {

Json ArtifactCodec<meta::FeatureBank>::encode(const meta::FeatureBank& bank) {
  Json classes = Json::array();
  for (const auto& c : bank.classes()) {
    classes.push_back(Json{{"class_id", c.class_id},
                           {"prototype", json_io::from_vector(c.prototype)},
                           {"instance_noise", c.instance_noise},
                           {"nuisance_noise", c.nuisance_noise}});
  }
  return Json{{"dimension", bank.dimension()}, {"min_separation", bank.min_separation()}, {"classes", classes}};
}

meta::FeatureBank ArtifactCodec<meta::FeatureBank>::decode(const Json& j, const std::filesystem::path&,
                                                           const std::string& path) {
  const int d = static_cast<int>(json_io::integer(j, "dimension", path));
  const double sep = json_io::number(j, "min_separation", path);
  const Json& classes = json_io::require(j, "classes", path);
  std::vector<meta::ClassPrototype> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string cp = (path.empty() ? "" : path + ".") + "classes[" + std::to_string(i) + "]";
    out.push_back({json_io::string(classes[i], "class_id", cp),
                   json_io::vector(json_io::require(classes[i], "prototype", cp), cp + ".prototype"),
                   json_io::number(classes[i], "instance_noise", cp), json_io::number(classes[i], "nuisance_noise", cp)});
  }
  return meta::FeatureBank(d, std::move(out), sep);
}

}  // namespace objattn
