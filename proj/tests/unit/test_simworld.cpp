#include <doctest.h>

#include <filesystem>

#include "objattn/experiments/spec.hpp"
#include "objattn/simworld/demos.hpp"
#include "objattn/simworld/expert.hpp"
#include "objattn/simworld/sim.hpp"

using namespace objattn;
using namespace objattn::sim;
namespace fs = std::filesystem;

namespace {

TaskSpec pour_task(double jitter = 0.0) {
  TaskSpec t;
  t.kind = TaskKind::Pour;
  t.objects.push_back({"mug", 1, Vec2(0.5, 0.6), 0.05, ObjectRole::Target, Vec2(jitter, jitter), true});
  t.objects.push_back({"bowl", 1, Vec2(0.2, 0.8), 0.05, ObjectRole::Distractor, Vec2(jitter, 0.0), true});
  return t;
}

TaskSpec sweep_task() {
  TaskSpec t;
  t.kind = TaskKind::Sweep;
  t.horizon = 150;
  t.objects.push_back({"orange", 1, Vec2(0.5, 0.45), 0.04, ObjectRole::Swept, Vec2::Zero(), true});
  t.objects.push_back({"dustpan", 1, Vec2(0.5, 0.8), 0.06, ObjectRole::Dustpan, Vec2::Zero(), true});
  return t;
}

meta::FeatureBank small_bank() {
  Rng rng(1);
  return meta::make_feature_bank(8, {"mug", "bowl", "orange", "dustpan"}, 0.05, 0.05, 1.0, rng);
}

std::vector<SimState> expert_trajectory(const TaskSpec& task, SimState s) {
  std::vector<SimState> traj{s};
  for (int t = 0; t < task.horizon; ++t) {
    s = step(task, s, scripted_expert(task, s));
    traj.push_back(s);
  }
  return traj;
}

}  // namespace

TEST_CASE("reset: determinism, exact placement without jitter, overlap error") {
  const TaskSpec t = pour_task(0.2);
  const SimState a = reset(t, 7), b = reset(t, 7), c = reset(t, 8);
  CHECK(a.objects[0].position == b.objects[0].position);
  CHECK(a.objects[0].position != c.objects[0].position);

  const SimState exact = reset(pour_task(), 3);
  CHECK(exact.objects[0].position == Vec2(0.5, 0.6));
  CHECK(exact.robot.position == Vec2(0.5, 0.1));
  CHECK(exact.robot.velocity == Vec2::Zero());

  TaskSpec clash = pour_task();
  clash.objects[1].position = clash.objects[0].position;
  CHECK_THROWS_AS(reset(clash, 1), PlacementError);
}

TEST_CASE("step: zero action, free motion, clamping") {
  const TaskSpec t = pour_task();
  const SimState s = reset(t, 1);
  const SimState z = step(t, s, {Vec2::Zero()});
  CHECK(z.robot.position == s.robot.position);
  CHECK(z.t == s.t + 1);

  const SimState m = step(t, s, {Vec2(0.03, -0.02)});
  CHECK((m.robot.position - s.robot.position - Vec2(0.03, -0.02)).norm() < 1e-15);
  CHECK((m.robot.velocity - Vec2(0.03, -0.02)).norm() < 1e-15);

  const SimState big = step(t, s, {Vec2(1.0, -1.0)});
  CHECK((big.robot.position - s.robot.position - Vec2(t.a_max, -t.a_max)).norm() < 1e-15);
  CHECK(clamp_action({Vec2(0.2, -0.01)}, 0.05).velocity == Vec2(0.05, -0.01));
}

TEST_CASE("step: robot and objects stay inside the unit square") {
  const TaskSpec t = sweep_task();
  SimState s = reset(t, 1);
  Rng rng(2);
  for (int k = 0; k < 500; ++k) {
    s = step(t, s, {Vec2(rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05))});
    CHECK((s.robot.position.array() >= 0.0).all());
    CHECK((s.robot.position.array() <= 1.0).all());
    for (const auto& o : s.objects) {
      CHECK((o.position.array() >= 0.0).all());
      CHECK((o.position.array() <= 1.0).all());
    }
  }
}

TEST_CASE("step: pushing moves the object along the push direction without penetration") {
  const TaskSpec t = sweep_task();
  SimState s = reset(t, 1);
  s.robot.position = Vec2(0.5, 0.3);
  double prev_y = s.objects[0].position.y();
  for (int k = 0; k < 10; ++k) {
    s = step(t, s, {Vec2(0.0, 0.03)});
    const auto& orange = s.objects[0];
    // The tool approaches from below, so the orange can only move up.
    CHECK(orange.position.y() >= prev_y);
    CHECK(orange.position.x() == doctest::Approx(0.5));
    CHECK((orange.position - s.robot.position).norm() >= t.tool_radius + orange.radius - 1e-9);
    prev_y = orange.position.y();
  }
  CHECK(prev_y > 0.45 + 0.05);
  CHECK(s.objects[1].position == Vec2(0.5, 0.8));
}

TEST_CASE("observe: noiseless boxes are footprints, counts include clutter, hidden objects are skipped") {
  const auto bank = small_bank();
  TaskSpec t = pour_task();
  const SimState s = reset(t, 1);
  meta::ProposerConfig cfg;
  Rng r1(3), r2(3);
  const Scene a = observe(s, bank, cfg, r1);
  REQUIRE(a.size() == 2);
  CHECK(a.proposals[0].box == BoundingBox::around(s.objects[0].position, 0.05));
  cfg.clutter_count = 8;
  Rng r3(3), r4(3);
  const Scene c1 = observe(s, bank, cfg, r3), c2 = observe(s, bank, cfg, r4);
  CHECK(c1.size() == 10);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1.proposals[i].feature == c2.proposals[i].feature);

  t.objects[0].visible = false;
  const SimState h = reset(t, 1);
  Rng r5(3);
  CHECK(observe(h, bank, meta::ProposerConfig{}, r5).size() == 1);
}

TEST_CASE("scripted expert: fixed point and heading") {
  const TaskSpec t = pour_task();
  SimState s = reset(t, 1);
  s.robot.position = s.objects[0].position;
  CHECK(scripted_expert(t, s).velocity.norm() == 0.0);
  s.robot.position = Vec2(0.1, 0.1);
  const Vec2 a = scripted_expert(t, s).velocity;
  const Vec2 dir = (s.objects[0].position - s.robot.position).normalized();
  CHECK(a.normalized().dot(dir) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.norm() <= t.a_max + 1e-15);
}

TEST_CASE("success: expert pour succeeds, idle and unmoved sweep fail") {
  const TaskSpec pour = pour_task(0.2);
  for (std::uint64_t c = 0; c < 50; ++c) CHECK(success(pour, expert_trajectory(pour, reset(pour, c))));
  std::vector<SimState> idle{reset(pour, 1)};
  for (int k = 0; k < pour.horizon; ++k) idle.push_back(step(pour, idle.back(), {Vec2::Zero()}));
  CHECK_FALSE(success(pour, idle));

  const TaskSpec sweep = sweep_task();
  std::vector<SimState> still(10, reset(sweep, 1));
  CHECK_FALSE(success(sweep, still));
  CHECK(success(sweep, expert_trajectory(sweep, reset(sweep, 1))));
}

TEST_CASE("expert competence on every condition of the bundled specs") {
  for (const char* name : {"sweep.json", "instance_generalization.json", "distractor_narrowing.json",
                           "scope_broadening.json"}) {
    const auto spec = exp::load_spec(fs::path(OBJATTN_SOURCE_DIR) / "specs" / name);
    int ok = 0, total = 0;
    for (const auto& list : {spec.train_conditions, spec.eval_conditions}) {
      for (auto c : list) {
        ok += success(spec.task, expert_trajectory(spec.task, reset(spec.task, c))) ? 1 : 0;
        ++total;
      }
    }
    INFO(name);
    CHECK(ok == total);
  }
}

TEST_CASE("collect_demonstrations: counts, determinism, expert failure") {
  const auto bank = small_bank();
  const TaskSpec sweep = sweep_task();
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  meta::ProposerConfig cfg;
  cfg.clutter_count = 3;
  const auto demos = collect_demonstrations(sweep, 10, seeds, bank, cfg, TargetConvention::Action, 5);
  REQUIRE(demos.size() == 10);
  CHECK(demos[0].steps.size() == static_cast<std::size_t>(sweep.horizon));
  const auto again = collect_demonstrations(sweep, 10, seeds, bank, cfg, TargetConvention::Action, 5);
  CHECK(again[3].steps[7].target == demos[3].steps[7].target);
  CHECK(again[3].steps[7].scene.proposals[0].feature == demos[3].steps[7].scene.proposals[0].feature);
  CHECK(collect_demonstrations(sweep, 0, seeds, bank, cfg, TargetConvention::Action).empty());

  const TaskSpec pour = pour_task(0.2);
  CHECK(collect_demonstrations(pour, 6, seeds, bank, cfg, TargetConvention::EeDelta).size() == 6);

  TaskSpec hopeless = pour_task();
  hopeless.horizon = 2;
  try {
    collect_demonstrations(hopeless, 1, seeds, bank, cfg, TargetConvention::Action);
    FAIL("expected an expert failure");
  } catch (const ExpertFailure& e) {
    CHECK(std::string(e.what()).find("condition 1") != std::string::npos);
  }
}

TEST_CASE("demonstration noise perturbs execution, not the recorded command") {
  const auto bank = small_bank();
  TaskSpec t = pour_task(0.2);
  t.expert_gain = 0.2;
  t.demo_noise = 0.01;
  const auto ep = run_expert_episode(t, 4, bank, meta::ProposerConfig{}, TargetConvention::Action, 9);
  CHECK(ep.success);
  bool executed_differs = false;
  for (std::size_t k = 0; k < ep.demo.steps.size(); ++k) {
    const Vec2 cmd = clamp_action(scripted_expert(t, ep.trajectory[k]), t.a_max).velocity;
    CHECK((ep.demo.steps[k].target - cmd).norm() < 1e-15);
    const Vec2 moved = ep.trajectory[k + 1].robot.position - ep.trajectory[k].robot.position;
    executed_differs |= (moved - cmd).norm() > 1e-6;
  }
  CHECK(executed_differs);
}

TEST_CASE("task JSON round-trip and validation") {
  TaskSpec t = sweep_task();
  t.demo_noise = 0.02;
  t.objects[0].visible = false;
  const TaskSpec back = decode_task(encode_task(t), "task");
  CHECK(back.kind == TaskKind::Sweep);
  CHECK(back.demo_noise == 0.02);
  CHECK_FALSE(back.objects[0].visible);
  CHECK(back.objects[1].position == t.objects[1].position);
  t.a_max = -1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}
