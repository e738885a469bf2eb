#include <doctest.h>

#include <filesystem>
#include <numbers>

#include "objattn/metaattention/feature_bank.hpp"
#include "objattn/metaattention/proposer.hpp"

using namespace objattn;
using namespace objattn::meta;
namespace fs = std::filesystem;

namespace {

FeatureBank default_bank(std::uint64_t seed = 1) {
  Rng rng(seed);
  return make_feature_bank(32, {"a", "b", "c", "d", "e", "f"}, 0.1, 0.1, 1.0, rng);
}

}  // namespace

TEST_CASE("feature bank: two orthogonal classes in the plane") {
  Rng rng(2);
  const auto bank = make_feature_bank(2, {"a", "b"}, 0.0, 0.0, std::numbers::pi / 2, rng);
  CHECK(angle_between(bank.find("a").prototype, bank.find("b").prototype) >= std::numbers::pi / 2 - 1e-12);
  CHECK(bank.find("a").prototype.norm() == doctest::Approx(1.0));
}

TEST_CASE("feature bank: six classes at d=32 are pairwise separated") {
  Rng rng(3);
  const auto bank = make_feature_bank(32, {"a", "b", "c", "d", "e", "f"}, 0.1, 0.1, 0.5, rng);
  int pairs = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(bank.classes()[i].prototype.norm() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = i + 1; j < 6; ++j) {
      const auto& a = bank.classes()[i].prototype;
      const auto& b = bank.classes()[j].prototype;
      CHECK(std::acos(std::clamp(a.dot(b), -1.0, 1.0)) >= 0.5);
      ++pairs;
    }
  }
  CHECK(pairs == 15);
}

TEST_CASE("feature bank: impossible separation is an explicit error") {
  Rng rng(4);
  try {
    make_feature_bank(2, {"a", "b", "c", "d", "e"}, 0.0, 0.0, std::numbers::pi / 2, rng, 2000);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("cannot separate") != std::string::npos);
  }
}

TEST_CASE("feature bank: related class sits at the requested angle") {
  auto bank = default_bank();
  Rng rng(5);
  bank.add_related_class("a2", "a", 0.3, rng, 0.1, 0.1);
  CHECK(angle_between(bank.find("a2").prototype, bank.find("a").prototype) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(bank.min_separation() <= 0.3 + 1e-12);
  CHECK(bank.pairwise_min_angle() == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("feature bank: JSON round-trip") {
  const auto bank = default_bank();
  const auto back = decode_artifact<FeatureBank>(encode_artifact(bank));
  REQUIRE(back.classes().size() == bank.classes().size());
  for (std::size_t i = 0; i < bank.classes().size(); ++i) {
    CHECK(back.classes()[i].class_id == bank.classes()[i].class_id);
    CHECK((back.classes()[i].prototype - bank.classes()[i].prototype).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("instance features: zero noise returns the prototype, unknown class fails") {
  Rng rng(6);
  const auto bank = make_feature_bank(16, {"a", "b"}, 0.0, 0.0, 1.0, rng);
  Rng inst = instance_stream("a", 3), nuis(7);
  const auto f = sample_instance_feature(bank, "a", inst, nuis);
  CHECK((f - bank.find("a").prototype).norm() < 1e-12);
  CHECK_THROWS_AS(sample_instance_feature(bank, "zzz", inst, nuis), LookupError);
}

TEST_CASE("instance features: two draws of one instance agree more than with other prototypes") {
  const auto bank = default_bank();
  Rng nuis(8);
  int ok = 0;
  for (int k = 0; k < 1000; ++k) {
    Rng i1 = instance_stream("c", 4), i2 = instance_stream("c", 4);
    const auto f1 = sample_instance_feature(bank, "c", i1, nuis);
    const auto f2 = sample_instance_feature(bank, "c", i2, nuis);
    double best_other = -1.0;
    for (const auto& cls : bank.classes())
      if (cls.class_id != "c") best_other = std::max(best_other, cosine_similarity(f1, cls.prototype));
    ok += cosine_similarity(f1, f2) > best_other ? 1 : 0;
  }
  CHECK(ok == 1000);
}

TEST_CASE("instance features: nearest prototype is the own class for at least 99% of draws") {
  const auto bank = default_bank();
  Rng nuis(9);
  for (const auto& cls : bank.classes()) {
    int own = 0;
    for (int k = 0; k < 1000; ++k) {
      Rng inst = instance_stream(cls.class_id, static_cast<std::uint64_t>(k));
      const auto f = sample_instance_feature(bank, cls.class_id, inst, nuis);
      CHECK(f.norm() == doctest::Approx(1.0).epsilon(1e-12));
      std::string best;
      double best_cos = -2.0;
      for (const auto& other : bank.classes()) {
        const double c = cosine_similarity(f, other.prototype);
        if (c > best_cos) {
          best_cos = c;
          best = other.class_id;
        }
      }
      own += best == cls.class_id ? 1 : 0;
    }
    CHECK(own >= 990);
  }
}

TEST_CASE("propose: noiseless pass-through") {
  Rng brng(10);
  const auto bank = make_feature_bank(8, {"a", "b"}, 0.0, 0.0, 1.0, brng);
  const BoundingBox box = BoundingBox::make(0.2, 0.3, 0.4, 0.5);
  Rng rng(11);
  const Scene s = propose({{"a", 1, box}}, bank, ProposerConfig{}, rng);
  REQUIRE(s.size() == 1);
  CHECK(s.proposals[0].box == box);
  CHECK((s.proposals[0].feature - bank.find("a").prototype).norm() < 1e-12);
  CHECK(s.proposals[0].label == std::optional<std::string>("a"));
}

TEST_CASE("propose: counts, determinism and clutter feature modes") {
  const auto bank = default_bank();
  ProposerConfig cfg;
  cfg.clutter_count = 8;
  std::vector<TrueObject> objs{{"a", 1, BoundingBox::make(0.1, 0.1, 0.2, 0.2)},
                               {"b", 1, BoundingBox::make(0.5, 0.5, 0.6, 0.7)}};
  Rng r1(12), r2(12);
  const Scene s1 = propose(objs, bank, cfg, r1);
  const Scene s2 = propose(objs, bank, cfg, r2);
  REQUIRE(s1.size() == 10);
  int clutter = 0;
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s1.proposals[i].box == s2.proposals[i].box);
    CHECK(s1.proposals[i].feature == s2.proposals[i].feature);
    CHECK(s1.proposals[i].box.valid());
    clutter += s1.proposals[i].label == std::optional<std::string>(kClutterLabel) ? 1 : 0;
  }
  CHECK(clutter == 8);

  cfg.clutter_feature_mode = ClutterFeatureMode::NearClass;
  cfg.near_class_noise = 0.3;
  Rng r3(13);
  const Scene near = propose({}, bank, cfg, r3);
  REQUIRE(near.size() == 8);
  for (const auto& p : near.proposals) {
    double best = -1.0;
    for (const auto& cls : bank.classes()) best = std::max(best, cosine_similarity(p.feature, cls.prototype));
    CHECK(best > 0.8);
  }
}

TEST_CASE("propose: jittered corners stay within 6 sigma and boxes stay valid") {
  const auto bank = default_bank();
  ProposerConfig cfg;
  cfg.box_jitter = 0.05;
  const BoundingBox box = BoundingBox::make(0.3, 0.3, 0.5, 0.6);
  Rng rng(14);
  for (int k = 0; k < 1000; ++k) {
    const Scene s = propose({{"a", 1, box}}, bank, cfg, rng);
    REQUIRE(s.size() == 1);
    const auto& b = s.proposals[0].box;
    CHECK(b.valid());
    const auto got = b.coords();
    const auto want = box.coords();
    for (int c = 0; c < 4; ++c) CHECK(std::abs(got[c] - want[c]) <= 6 * 0.05);
  }
}

TEST_CASE("propose: miss rate drops objects and an empty result is an error") {
  const auto bank = default_bank();
  ProposerConfig cfg;
  cfg.miss_rate = 0.5;
  Rng rng(15);
  int kept = 0, failures = 0;
  for (int k = 0; k < 400; ++k) {
    try {
      kept += static_cast<int>(propose({{"a", 1, BoundingBox::make(0.1, 0.1, 0.2, 0.2)}}, bank, cfg, rng).size());
    } catch (const InvariantError&) {
      ++failures;
    }
  }
  CHECK(kept + failures == 400);
  CHECK(kept > 150);
  CHECK(failures > 150);
}

TEST_CASE("external scenes: raw features round-trip, malformed files are rejected") {
  const fs::path dir = fs::temp_directory_path() / "objattn_unit";
  fs::create_directories(dir);
  Scene s;
  s.scene_id = "ext";
  s.proposals.push_back({BoundingBox::make(0.1, 0.2, 0.3, 0.4), Eigen::Vector3d(3.0, 4.0, 12.0), std::nullopt});
  s.proposals.push_back({BoundingBox::make(0.5, 0.5, 0.9, 0.9), Eigen::Vector3d(-1.0, 0.0, 0.5), std::nullopt});
  save_scene(dir / "ext.json", s);
  const Scene back = load_external_scene(dir / "ext.json");
  REQUIRE(back.size() == 2);
  CHECK(back.proposals[0].feature == s.proposals[0].feature);

  Json empty{{"schema_version", kSchemaVersion}, {"scene_id", "e"}, {"proposals", Json::array()}};
  json_io::write_file(dir / "empty.json", empty);
  try {
    load_external_scene(dir / "empty.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("N >= 1 violated") != std::string::npos);
  }

  Json mixed = encode_artifact(s);
  mixed["proposals"][1]["feature"] = Json::array({1.0, 2.0});
  json_io::write_file(dir / "mixed.json", mixed);
  CHECK_THROWS_AS(load_external_scene(dir / "mixed.json"), Error);
}
