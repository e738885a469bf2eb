#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "objattn/core/adam.hpp"
#include "objattn/core/mlp.hpp"
#include "objattn/core/rng.hpp"
#include "objattn/core/serialization.hpp"
#include "oracles.hpp"

using namespace objattn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "objattn_unit";
  fs::create_directories(dir);
  return dir / name;
}

Scene three_proposals() {
  Scene s;
  s.scene_id = "s0";
  s.proposals.push_back({BoundingBox::make(0.1, 0.1, 0.2, 0.3), Eigen::Vector3d(0.1, -0.2, 0.3), "cup"});
  s.proposals.push_back({BoundingBox::make(0.4, 0.5, 0.6, 0.7), Eigen::Vector3d(1.0 / 3.0, 2.0, -7.5), std::nullopt});
  s.proposals.push_back({BoundingBox::make(0.0, 0.0, 1.0, 1.0), Eigen::Vector3d(1e-13, 0.0, 5.0), "clutter"});
  return s;
}

}  // namespace

TEST_CASE("rng: equal seeds give equal streams, different seeds differ") {
  Rng a(0), b(0), c(1);
  bool differs = false;
  for (int i = 0; i < 10000; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
    if (i < 100 && x != c.next_u64()) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("rng: engine is the standard 64-bit Mersenne twister") {
  // The standard fixes the 10000th output of the default-seeded engine.
  Rng r(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = r.next_u64();
  CHECK(x == 9981545732273789042ull);
}

TEST_CASE("rng: seed 42 matches the golden file") {
  const Json g = json_io::read_file(fs::path(OBJATTN_TEST_DATA) / "golden" / "rng_seed42.json");
  {
    Rng r(42);
    for (const auto& v : g["next_u64"]) CHECK(r.next_u64() == v.get<std::uint64_t>());
  }
  {
    Rng r(42);
    for (const auto& v : g["uniform"]) CHECK(r.uniform() == v.get<double>());
  }
  {
    Rng r(42);
    for (const auto& v : g["normal"]) CHECK(r.normal() == v.get<double>());
  }
  Rng d = Rng::derive(42, 7);
  for (const auto& v : g["derive_7_next_u64"]) CHECK(d.next_u64() == v.get<std::uint64_t>());
}

TEST_CASE("rng: uniform uses the top 53 bits of the raw draw") {
  Rng raw(9), r(9);
  for (int i = 0; i < 100; ++i) {
    const double expect = static_cast<double>(raw.next_u64() >> 11) / 9007199254740992.0;
    CHECK(r.uniform() == expect);
  }
}

TEST_CASE("rng: normal draws have unit moments") {
  Rng r(3);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("rng: uniform_index stays in range and reaches every value") {
  Rng r(5);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = r.uniform_index(7);
    REQUIRE(k < 7);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("rng: derived streams are distinct per stream id") {
  Rng a = Rng::derive(1, 0), b = Rng::derive(1, 1), c = Rng::derive(1, 0);
  const auto x = a.next_u64();
  CHECK(x != b.next_u64());
  CHECK(x == c.next_u64());
  CHECK(hash_string("abc") != hash_string("abd"));
  CHECK(hash_combine(1, 2) != hash_combine(2, 1));
}

TEST_CASE("bounding box: checked construction") {
  CHECK_THROWS_AS(BoundingBox::make(0.5, 0.1, 0.4, 0.2), InvariantError);
  CHECK_THROWS_AS(BoundingBox::make(-0.1, 0.1, 0.4, 0.2), InvariantError);
  CHECK_THROWS_AS(BoundingBox::make(0.1, 0.1, 0.1, 0.2), InvariantError);
  const auto b = BoundingBox::around(Vec2(0.02, 0.5), 0.05);
  CHECK(b.x_min == 0.0);
  CHECK(b.x_max == doctest::Approx(0.07));
  CHECK(b.valid());
}

TEST_CASE("serialization: scene round-trip is exact") {
  const Scene s = three_proposals();
  const auto path = scratch("scene.json");
  save_artifact(path, s);
  const Scene back = load_artifact<Scene>(path);
  REQUIRE(back.size() == 3);
  CHECK(back.scene_id == "s0");
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.proposals[i].box == s.proposals[i].box);
    CHECK((back.proposals[i].feature - s.proposals[i].feature).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.proposals[i].label == s.proposals[i].label);
  }
}

TEST_CASE("serialization: missing box names the field") {
  Json j = encode_artifact(three_proposals());
  j["proposals"][1].erase("box");
  try {
    decode_artifact<Scene>(j);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("box") != std::string::npos);
  }
}

TEST_CASE("serialization: version mismatch and invalid boxes are rejected") {
  Json j = encode_artifact(three_proposals());
  j["schema_version"] = "9.9";
  CHECK_THROWS_AS(decode_artifact<Scene>(j), VersionError);
  j["schema_version"] = kSchemaVersion;
  j["proposals"][0]["box"] = Json::array({0.5, 0.5, 0.2, 0.9});
  CHECK_THROWS(decode_artifact<Scene>(j));
}

TEST_CASE("serialization: demonstration round-trip") {
  Demonstration d;
  d.episode_id = "ep";
  d.target_convention = TargetConvention::Action;
  for (int t = 0; t < 3; ++t) {
    DemoStep s;
    s.state.position = Vec2(0.1 * t, 1.0 / 7.0);
    s.state.velocity = Vec2(-0.01, 0.02 * t);
    s.scene = three_proposals();
    s.target = Vec2(std::sqrt(2.0) / 100.0, -t / 3.0);
    d.steps.push_back(s);
  }
  const auto path = scratch("demo.json");
  save_artifact(path, d);
  const auto back = load_artifact<Demonstration>(path);
  REQUIRE(back.steps.size() == 3);
  CHECK(back.target_convention == TargetConvention::Action);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK((back.steps[t].target - d.steps[t].target).norm() <= 1e-12);
    CHECK((back.steps[t].state.position - d.steps[t].state.position).norm() <= 1e-12);
    CHECK((back.steps[t].state.velocity - d.steps[t].state.velocity).norm() <= 1e-12);
  }
}

TEST_CASE("serialization: unreadable file names the path") {
  try {
    json_io::read_file("/nonexistent/objattn.json");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/objattn.json") != std::string::npos);
  }
}

TEST_CASE("adam: first step moves each parameter by the learning rate against the gradient") {
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  Adam opt(3, cfg);
  Eigen::VectorXd x(3), g(3);
  x << 1.0, -2.0, 0.5;
  g << 0.3, -4.0, 1e-3;
  const Eigen::VectorXd x0 = x;
  opt.step(x, g);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(x0[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8)));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam: minimizes a quadratic") {
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  Adam opt(2, cfg);
  Eigen::VectorXd x = Eigen::Vector2d(3.0, -1.0);
  for (int i = 0; i < 2000; ++i) {
    Eigen::VectorXd g = 2.0 * (x - Eigen::Vector2d(0.5, 0.25));
    opt.step(x, g);
  }
  CHECK((x - Eigen::Vector2d(0.5, 0.25)).norm() < 1e-3);
}

TEST_CASE("mlp: forward matches the reference, zero weights give zero output") {
  Rng rng(11);
  const Mlp net = Mlp::fan_in_uniform(5, {7, 4}, 3, rng);
  std::vector<double> x{0.3, -0.2, 0.9, 0.0, 0.1};
  const Eigen::VectorXd y = net.forward(Eigen::Map<const Eigen::VectorXd>(x.data(), 5));
  const auto ref = oracle::mlp_forward(net, x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(ref[static_cast<std::size_t>(i)]).epsilon(1e-14));
  const Mlp zero(5, {7, 4}, 3);
  CHECK(zero.forward(Eigen::VectorXd::Ones(5)).norm() == 0.0);
  CHECK_THROWS_AS(net.forward(Eigen::VectorXd::Ones(4)), DimensionError);
}

TEST_CASE("mlp: backward matches finite differences, batched passes match single ones") {
  Rng rng(12);
  Mlp net = Mlp::fan_in_uniform(4, {6, 5}, 2, rng);
  const Eigen::VectorXd x = Eigen::Vector4d(0.2, -0.7, 0.4, 1.1);
  const Eigen::VectorXd w = Eigen::Vector2d(0.6, -1.3);
  Mlp::Tape tape;
  net.forward(x, tape);
  Mlp grad = net.zeros_like();
  const Eigen::VectorXd dx = net.backward(tape, w, grad);

  auto f_params = [&](const Eigen::VectorXd& p) {
    Mlp m = net;
    m.assign(p);
    return w.dot(m.forward(x));
  };
  CHECK(oracle::relative_error(grad.flatten(), oracle::finite_difference(f_params, net.flatten())) < 1e-7);
  auto f_input = [&](const Eigen::VectorXd& xi) { return w.dot(net.forward(xi)); };
  CHECK(oracle::relative_error(dx, oracle::finite_difference(f_input, x)) < 1e-7);

  Eigen::MatrixXd X(4, 3);
  X << x, -x, 0.5 * x;
  Eigen::MatrixXd G(2, 3);
  G << w, 2.0 * w, -w;
  Mlp::BatchTape bt;
  const Eigen::MatrixXd Y = net.forward_batch(X, bt);
  Mlp bgrad = net.zeros_like();
  net.backward_batch(bt, G, bgrad);
  Mlp sgrad = net.zeros_like();
  for (int c = 0; c < 3; ++c) {
    Mlp::Tape t;
    CHECK((net.forward(X.col(c), t) - Y.col(c)).norm() < 1e-14);
    net.backward(t, G.col(c), sgrad);
  }
  CHECK((bgrad.flatten() - sgrad.flatten()).norm() < 1e-12);
}

TEST_CASE("mlp: flatten/assign and JSON round-trip") {
  Rng rng(13);
  const Mlp net = Mlp::fan_in_uniform(3, {4}, 2, rng);
  Mlp copy(3, {4}, 2);
  copy.assign(net.flatten());
  CHECK(copy == net);
  const Mlp back = decode_mlp(encode_mlp(net), "net");
  CHECK((back.flatten() - net.flatten()).cwiseAbs().maxCoeff() <= 1e-12);
}
