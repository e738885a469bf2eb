#include "objattn/experiments/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>

#include <CLI11.hpp>

#include "objattn/experiments/runners.hpp"
#include "objattn/metaattention/feature_bank.hpp"

namespace objattn::exp {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "experiment spec JSON")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--seed", c.seed, "master seed (overrides the experiment spec)");
}

ExperimentSpec spec_from(const Common& c) {
  ExperimentSpec spec = load_spec(c.config);
  if (c.seed) spec.seed = *c.seed;
  return spec;
}

void require_out(const Common& c) {
  if (c.out.empty()) throw ConfigError("--out is required");
}

std::vector<Demonstration> load_demo_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error("demonstration directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("demo_", 0) == 0 && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no demo_*.json files in " + dir);
  std::vector<Demonstration> out;
  for (const auto& f : files) out.push_back(load_artifact<Demonstration>(f));
  return out;
}

meta::FeatureBank bank_for(const ExperimentSpec& spec, const std::string& bank_path) {
  if (!bank_path.empty()) return load_artifact<meta::FeatureBank>(bank_path);
  return build_bank(spec.bank, spec.seed);
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Object-centric attention: demonstrations, attention training, policies and experiments", "objattn"};
  app.require_subcommand(1);

  Common gen, train, fine, pol, ev, ex, rep;
  std::string bank_path, demos_dir, prior_dir, model_path, policy_path, spec_pos, report_pos;
  int demo_count = -1;
  bool clean = false, no_vision = false, wall_clock = false, quiet = false;

  auto* gen_cmd = app.add_subcommand("gen-demos", "collect scripted-expert demonstrations");
  add_common(gen_cmd, gen, true);
  gen_cmd->add_option("--count", demo_count, "number of demonstrations (default: spec demos.train)");
  gen_cmd->add_flag("--clean", clean, "remove distractor objects from the task");

  auto* train_cmd = app.add_subcommand("train-attention", "train attention W and the motion predictor");
  add_common(train_cmd, train, true);
  train_cmd->add_option("--demos", demos_dir, "directory of demo_*.json")->required();
  train_cmd->add_option("--bank", bank_path, "feature bank JSON (default: rebuilt from the experiment spec)");

  auto* fine_cmd = app.add_subcommand("finetune-attention", "continue attention training on new demonstrations");
  add_common(fine_cmd, fine, true);
  fine_cmd->add_option("--model", model_path, "attention model JSON")->required()->check(CLI::ExistingFile);
  fine_cmd->add_option("--demos", demos_dir, "directory of new demo_*.json")->required();
  fine_cmd->add_option("--prior", prior_dir, "directory of prior demonstrations to replay");

  auto* pol_cmd = app.add_subcommand("train-policy", "train a policy on hard-attention observations");
  add_common(pol_cmd, pol, true);
  pol_cmd->add_option("--model", model_path, "attention model JSON")->required()->check(CLI::ExistingFile);
  pol_cmd->add_option("--bank", bank_path, "feature bank JSON (default: rebuilt from the experiment spec)");
  pol_cmd->add_flag("--no-vision", no_vision, "zero the observation block (baseline)");

  auto* ev_cmd = app.add_subcommand("eval", "roll out a policy on the experiment spec's evaluation conditions");
  add_common(ev_cmd, ev, true);
  ev_cmd->add_option("--model", model_path, "attention model JSON")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--policy", policy_path, "policy JSON")->required()->check(CLI::ExistingFile);
  ev_cmd->add_option("--bank", bank_path, "feature bank JSON (default: rebuilt from the experiment spec)");

  auto* ex_cmd = app.add_subcommand("experiment", "run a full experiment and write its report");
  add_common(ex_cmd, ex, false);
  ex_cmd->add_option("spec", spec_pos, "experiment spec JSON");
  ex_cmd->add_flag("--wall-clock", wall_clock, "record elapsed time in the report (breaks byte equality)");
  ex_cmd->add_flag("--quiet", quiet, "no progress lines");

  auto* rep_cmd = app.add_subcommand("report", "print a report as a text table");
  add_common(rep_cmd, rep, false);
  rep_cmd->add_option("report", report_pos, "experiment report JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*gen_cmd) {
      require_out(gen);
      const ExperimentSpec spec = spec_from(gen);
      const auto bank = build_bank(spec.bank, spec.seed);
      const sim::TaskSpec task = clean ? clean_task(spec.task) : spec.task;
      const int n = demo_count >= 0 ? demo_count : spec.train_demos;
      const auto demos = demos_for(spec, task, bank, n, spec.train_conditions, "train");
      fs::create_directories(gen.out);
      save_artifact(fs::path(gen.out) / "bank.json", bank);
      for (std::size_t i = 0; i < demos.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "demo_%03zu.json", i);
        save_artifact(fs::path(gen.out) / name, demos[i]);
      }
      out << "wrote " << demos.size() << " demonstrations to " << gen.out << "\n";
    } else if (*train_cmd) {
      require_out(train);
      const ExperimentSpec spec = spec_from(train);
      const auto bank = bank_for(spec, bank_path);
      const auto demos = load_demo_dir(demos_dir);
      const auto model = train_attention_stage(spec, demos, bank);
      save_artifact(train.out, model);
      out << "trained attention on " << demos.size() << " demonstrations; final loss "
          << (model.training_log.empty() ? 0.0 : model.training_log.back().loss) << "\n";
    } else if (*fine_cmd) {
      require_out(fine);
      const ExperimentSpec spec = spec_from(fine);
      const auto model = load_artifact<attention::AttentionModel>(model_path);
      const auto demos = load_demo_dir(demos_dir);
      const auto prior = prior_dir.empty() ? std::vector<Demonstration>{} : load_demo_dir(prior_dir);
      const auto tuned = finetune_attention_stage(spec, model, demos, prior);
      save_artifact(fine.out, tuned);
      out << "finetuned attention on " << demos.size() << " demonstrations\n";
    } else if (*pol_cmd) {
      require_out(pol);
      const ExperimentSpec spec = spec_from(pol);
      const auto bank = bank_for(spec, bank_path);
      const auto model = load_artifact<attention::AttentionModel>(model_path);
      const auto p = train_policy_stage(spec, spec.task, model, bank, !no_vision, "main");
      save_artifact(pol.out, p);
      out << "trained " << (no_vision ? "no-vision" : "vision") << " policy\n";
    } else if (*ev_cmd) {
      const ExperimentSpec spec = spec_from(ev);
      const auto bank = bank_for(spec, bank_path);
      const auto model = load_artifact<attention::AttentionModel>(model_path);
      const auto p = load_artifact<policy::Policy>(policy_path);
      Json records = Json::array();
      long hits = 0, count = 0;
      for (int r = 0; r < spec.repetitions; ++r) {
        for (auto cond : spec.eval_conditions) {
          const auto res = policy::rollout(p, model, spec.task, cond, bank, spec.proposer, eval_observation_seed(spec, r));
          records.push_back(Json{{"condition_seed", cond}, {"repetition", r}, {"success", res.success},
                                 {"reward", res.reward}});
          hits += res.success ? 1 : 0;
          ++count;
        }
      }
      const double rate = static_cast<double>(hits) / static_cast<double>(count);
      if (!ev.out.empty()) {
        json_io::write_file(ev.out, Json{{"schema_version", kSchemaVersion},
                                         {"success_rate", rate},
                                         {"successes", hits},
                                         {"count", count},
                                         {"records", std::move(records)}});
      }
      out << "success " << hits << "/" << count << " (" << rate << ")\n";
    } else if (*ex_cmd) {
      const std::string path = !spec_pos.empty() ? spec_pos : ex.config;
      if (path.empty()) throw ConfigError("experiment needs a spec file (positional or --config)");
      Common c = ex;
      c.config = path;
      require_out(c);
      const ExperimentSpec spec = spec_from(c);
      RunOptions options;
      options.record_wall_clock = wall_clock;
      if (!quiet) options.log = &err;
      const auto report = run_experiment(spec, options);
      save_artifact(ex.out, report);
      out << render_report(report);
    } else if (*rep_cmd) {
      const std::string path = !report_pos.empty() ? report_pos : rep.config;
      if (path.empty()) throw ConfigError("report needs a report file (positional or --config)");
      const auto report = load_artifact<ExperimentReport>(path);
      const std::string table = render_report(report);
      if (!rep.out.empty()) {
        std::ofstream f(rep.out);
        if (!f) throw Error("cannot write " + rep.out);
        f << table;
      }
      out << table;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace objattn::exp
