#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "objattn/experiments/cli.hpp"
#include "objattn/experiments/runners.hpp"

using namespace objattn;
using namespace objattn::exp;
namespace fs = std::filesystem;

namespace {

fs::path data(const std::string& name) { return fs::path(OBJATTN_TEST_DATA) / "data" / name; }

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "objattn_unit_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

ConditionRecord rec(const std::string& group, std::uint64_t seed, std::optional<bool> success,
                    std::optional<bool> selected = std::nullopt) {
  ConditionRecord r;
  r.group = group;
  r.condition_seed = seed;
  r.success = success;
  r.selected = selected;
  return r;
}

}  // namespace

TEST_CASE("spec: bundled specs load and validate") {
  for (const char* name : {"sweep.json", "instance_generalization.json", "distractor_narrowing.json",
                           "scope_broadening.json"}) {
    INFO(name);
    const auto spec = load_spec(fs::path(OBJATTN_SOURCE_DIR) / "specs" / name);
    CHECK_NOTHROW(spec.validate());
    const auto back = decode_spec(encode_spec(spec));
    CHECK(encode_spec(back) == encode_spec(spec));
  }
}

TEST_CASE("spec: seed lists and disjointness") {
  CHECK(decode_seed_list(Json::parse(R"({"first": 5, "count": 3})"), "s") == std::vector<std::uint64_t>{5, 6, 7});
  CHECK(decode_seed_list(Json::parse("[9, 1]"), "s") == std::vector<std::uint64_t>{9, 1});
  CHECK_THROWS_AS(decode_seed_list(Json::parse(R"("x")"), "s"), SchemaError);

  auto spec = load_spec(data("tiny_sweep.json"));
  spec.eval_conditions.push_back(spec.train_conditions[2]);
  try {
    spec.validate();
    FAIL("expected overlap to be rejected");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("eval_conditions") != std::string::npos);
  }
}

TEST_CASE("spec: kind-specific checks name the field") {
  auto spec = load_spec(data("tiny_sweep.json"));
  spec.attention.rows = 1;
  spec.attention.crops.resize(1);
  CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("attention.rows"), ConfigError);

  auto narrow = load_spec(data("tiny_narrowing.json"));
  narrow.finetune_demos = 0;
  CHECK_THROWS_WITH_AS(narrow.validate(), doctest::Contains("demos.finetune"), ConfigError);

  Json j = encode_spec(load_spec(data("tiny_scope.json")));
  j["experiment_kind"] = "juggling";
  CHECK_THROWS_AS(decode_spec(j), SchemaError);
}

TEST_CASE("bank: deterministic, related classes at their angles") {
  const auto spec = load_spec(fs::path(OBJATTN_SOURCE_DIR) / "specs" / "scope_broadening.json");
  const auto a = build_bank(spec.bank, spec.seed);
  const auto b = build_bank(spec.bank, spec.seed);
  for (std::size_t i = 0; i < a.classes().size(); ++i) CHECK(a.classes()[i].prototype == b.classes()[i].prototype);
  CHECK(meta::angle_between(a.find("lemon").prototype, a.find("citrus").prototype) ==
        doctest::Approx(0.7).epsilon(1e-9));
  CHECK(meta::angle_between(a.find("apricot").prototype, a.find("orange").prototype) ==
        doctest::Approx(0.5).epsilon(1e-9));
  const auto c = build_bank(spec.bank, spec.seed + 1);
  CHECK(c.find("citrus").prototype != a.find("citrus").prototype);
}

TEST_CASE("report: aggregates over group prefixes, majority tie rule") {
  const std::vector<ConditionRecord> records{rec("v/a", 1, true), rec("v/a", 2, false), rec("v/b", 1, true, true),
                                             rec("n", 1, false, false)};
  const auto agg = aggregate_records(records);
  auto find = [&](const std::string& g, const std::string& m) {
    for (const auto& a : agg)
      if (a.group == g && a.metric == m) return a;
    FAIL("missing aggregate " << g << "/" << m);
    return Aggregate{};
  };
  CHECK(find("v", "success").hits == 2);
  CHECK(find("v", "success").count == 3);
  CHECK(find("v/a", "success").rate == 0.5);
  CHECK(find("v", "selected").count == 1);
  CHECK(find("n", "selected").rate == 0.0);
  CHECK(majority_label({{"b", 3}, {"a", 3}, {"c", 1}}) == "a");
  CHECK(majority_label({{"b", 4}, {"a", 3}}) == "b");
}

TEST_CASE("report: validation catches inconsistent content, round-trip is exact") {
  ExperimentReport r;
  r.spec = load_spec(data("tiny_sweep.json"));
  r.seed_manifest = Json{{"eval_conditions", r.spec.eval_conditions}};
  const auto e = r.spec.eval_conditions;
  r.records = {rec("vision", e[0], true), rec("vision", e[1], false), rec("no-vision", e[0], false)};
  r.aggregates = aggregate_records(r.records);
  r.confusion.push_back({"vision", 0, {{"orange", 5}, {"clutter", 2}}, "orange"});
  r.staging.push_back({"main", true});
  r.details = Json{{"loss", 1.0 / 3.0}};
  CHECK_NOTHROW(r.validate());

  const auto back = decode_artifact<ExperimentReport>(encode_artifact(r));
  CHECK(encode_artifact(back).dump() == encode_artifact(r).dump());
  CHECK(std::abs(back.details["loss"].get<double>() - 1.0 / 3.0) <= 1e-12);
  CHECK(back.find("vision", "success")->rate == 0.5);

  auto bad = r;
  bad.aggregates[0].hits += 1;
  CHECK_THROWS_AS(bad.validate(), InvariantError);
  bad = r;
  bad.records.push_back(rec("vision", 123456789, true));
  bad.aggregates = aggregate_records(bad.records);
  CHECK_THROWS_AS(bad.validate(), InvariantError);
  bad = r;
  bad.records.push_back(bad.records[0]);
  bad.aggregates = aggregate_records(bad.records);
  CHECK_THROWS_AS(bad.validate(), InvariantError);
  bad = r;
  bad.confusion[0].majority = "clutter";
  CHECK_THROWS_AS(bad.validate(), InvariantError);

  const std::string table = render_report(r);
  CHECK(table.find("vision") != std::string::npos);
  CHECK(table.find("0.500") != std::string::npos);
}

TEST_CASE("runners: tiny experiments are deterministic and keep W fixed during policy training") {
  for (const char* name : {"tiny_instance.json", "tiny_narrowing.json", "tiny_scope.json", "tiny_sweep.json"}) {
    INFO(name);
    const auto spec = load_spec(data(name));
    const auto a = run_experiment(spec);
    const auto b = run_experiment(spec);
    CHECK(encode_artifact(a).dump() == encode_artifact(b).dump());
    REQUIRE_FALSE(a.staging.empty());
    for (const auto& s : a.staging) CHECK(s.w_unchanged);
    CHECK_FALSE(a.wall_clock_seconds.has_value());
  }
}

TEST_CASE("runners: the absent-target probe is flagged and fails") {
  const auto r = run_experiment(load_spec(data("tiny_instance.json")));
  int probes = 0;
  for (const auto& rec : r.records) {
    if (rec.group.rfind("probe/", 0) != 0) continue;
    ++probes;
    // The rollout still runs to the horizon; success is scored on geometry.
    CHECK(rec.success.has_value());
    CHECK(std::find(rec.flags.begin(), rec.flags.end(), "no_target_proposals") != rec.flags.end());
  }
  CHECK(probes == 3);
}

TEST_CASE("cli: missing spec file fails and names the path") {
  const auto r = cli({"experiment", "/no/such/spec.json", "--out", "/tmp/x.json"});
  CHECK(r.code != 0);
  CHECK(r.err.find("/no/such/spec.json") != std::string::npos);

  const auto g = cli({"gen-demos", "--config", "/no/such/other.json", "--out", "/tmp/x"});
  CHECK(g.code != 0);
  CHECK((g.err + g.out).find("/no/such/other.json") != std::string::npos);
}

TEST_CASE("cli: unknown flags and subcommands fail with usage") {
  CHECK(cli({"experiment", "--bogus"}).code != 0);
  CHECK(cli({"fly"}).code != 0);
  CHECK(cli({}).code != 0);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("cli: experiment reruns are byte-identical and report renders them") {
  const fs::path dir = scratch("rerun");
  const std::string spec = data("tiny_sweep.json").string();
  for (const char* out : {"a.json", "b.json"}) {
    const auto r = cli({"experiment", spec, "--seed", "7", "--out", (dir / out).string(), "--quiet"});
    REQUIRE(r.code == 0);
  }
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(load_artifact<ExperimentReport>(dir / "a.json").spec.seed == 7);

  const auto rep = cli({"report", (dir / "a.json").string(), "--out", (dir / "table.txt").string()});
  CHECK(rep.code == 0);
  CHECK(rep.out.find("no-vision") != std::string::npos);
  CHECK(slurp(dir / "table.txt") == rep.out);

  const auto wc = cli({"experiment", spec, "--out", (dir / "w.json").string(), "--quiet", "--wall-clock"});
  CHECK(wc.code == 0);
  CHECK(load_artifact<ExperimentReport>(dir / "w.json").wall_clock_seconds.has_value());
}

TEST_CASE("cli: staged pipeline from demonstrations to evaluation") {
  const fs::path dir = scratch("pipeline");
  const std::string spec = data("tiny_narrowing.json").string();
  const std::string demos = (dir / "demos").string(), more = (dir / "more").string();
  REQUIRE(cli({"gen-demos", "--config", spec, "--out", demos, "--clean"}).code == 0);
  CHECK(fs::exists(dir / "demos" / "bank.json"));
  CHECK(fs::exists(dir / "demos" / "demo_007.json"));
  REQUIRE(cli({"gen-demos", "--config", spec, "--out", more, "--count", "2", "--seed", "9"}).code == 0);
  CHECK(fs::exists(dir / "more" / "demo_001.json"));
  CHECK_FALSE(fs::exists(dir / "more" / "demo_002.json"));

  const std::string model = (dir / "att.json").string(), tuned = (dir / "tuned.json").string();
  REQUIRE(cli({"train-attention", "--config", spec, "--demos", demos, "--bank", demos + "/bank.json", "--out", model})
              .code == 0);
  REQUIRE(cli({"finetune-attention", "--config", spec, "--model", model, "--demos", more, "--prior", demos, "--out",
               tuned})
              .code == 0);
  const std::string pol = (dir / "pol.json").string(), blind = (dir / "blind.json").string();
  REQUIRE(cli({"train-policy", "--config", spec, "--model", tuned, "--out", pol}).code == 0);
  REQUIRE(cli({"train-policy", "--config", spec, "--model", tuned, "--out", blind, "--no-vision"}).code == 0);
  CHECK_FALSE(load_artifact<policy::Policy>(blind).vision);
  CHECK(load_artifact<attention::AttentionModel>(tuned).W != load_artifact<attention::AttentionModel>(model).W);

  const auto ev = cli({"eval", "--config", spec, "--model", tuned, "--policy", pol, "--out", (dir / "ev.json").string()});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("success") != std::string::npos);
  const Json j = json_io::read_file(dir / "ev.json");
  CHECK(j["count"].get<int>() == 3);

  CHECK(cli({"train-attention", "--config", spec, "--demos", (dir / "nowhere").string(), "--out", model}).code != 0);
}
