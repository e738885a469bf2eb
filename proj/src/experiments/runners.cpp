#include "objattn/experiments/runners.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>

#include "objattn/attention/attention.hpp"
#include "objattn/attention/training.hpp"
#include "objattn/simworld/demos.hpp"

namespace objattn::exp {

namespace {

using Clock = std::chrono::steady_clock;

struct Run {
  const ExperimentSpec& spec;
  const RunOptions& options;
  meta::FeatureBank bank;
  Clock::time_point start = Clock::now();
  ExperimentReport report;

  Run(const ExperimentSpec& s, const RunOptions& o)
      : spec((s.validate(), s)), options(o), bank(build_bank(s.bank, s.seed)) {
    report.spec = spec;
  }

  void log(const std::string& msg) const {
    if (options.log == nullptr) return;
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "[%7.1fs] ", secs);
    *options.log << buf << msg << std::endl;
  }
};

Json seeds_json(std::span<const std::uint64_t> seeds) {
  Json out = Json::array();
  for (auto s : seeds) out.push_back(s);
  return out;
}

bool same_w(const attention::AttentionModel& a, const Eigen::MatrixXd& w) {
  return a.W.rows() == w.rows() && a.W.cols() == w.cols() &&
         std::equal(a.W.data(), a.W.data() + a.W.size(), w.data(),
                    [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
}

Json training_summary(const attention::AttentionModel& m) {
  if (m.training_log.empty()) return Json::object();
  const auto& first = m.training_log.front();
  const auto& last = m.training_log.back();
  return Json{{"epochs", m.training_log.size()},
              {"first_loss", first.loss},
              {"final_loss", last.loss},
              {"final_entropy", last.entropy},
              {"adam_steps", last.adam_steps}};
}

ConditionRecord make_record(const std::string& group, std::uint64_t cond, int rep, const policy::RolloutResult& r,
                            const std::string& target_label) {
  ConditionRecord rec;
  rec.group = group;
  rec.condition_seed = cond;
  rec.repetition = rep;
  rec.success = r.success;
  if (!r.attended_labels.empty()) {
    rec.selected_label = r.attended_labels.front().front();
    // Selection is only scored on scenes where the target was proposed.
    if (r.relevant_missing.front()) {
      rec.flags.push_back("target_not_proposed_at_start");
    } else if (!target_label.empty()) {
      rec.selected = rec.selected_label == target_label;
    }
  }
  if (!r.relevant_missing.empty() &&
      std::all_of(r.relevant_missing.begin(), r.relevant_missing.end(), [](bool b) { return b; })) {
    rec.flags.push_back("no_target_proposals");
  }
  if (!r.proposal_counts.empty()) {
    rec.min_proposals = *std::min_element(r.proposal_counts.begin(), r.proposal_counts.end());
    rec.max_proposals = *std::max_element(r.proposal_counts.begin(), r.proposal_counts.end());
  }
  return rec;
}

struct Confusion {
  std::vector<std::map<std::string, long>> rows;
};

/// Rollouts over conditions x repetitions; appends one record each.
void evaluate_group(Run& run, const std::string& group, const policy::Policy& pol,
                    const attention::AttentionModel& att, const sim::TaskSpec& task, const meta::ProposerConfig& proposer,
                    std::span<const std::uint64_t> conditions, const std::string& target_label,
                    Confusion* confusion = nullptr) {
  for (int rep = 0; rep < run.spec.repetitions; ++rep) {
    const std::uint64_t obs = eval_observation_seed(run.spec, rep);
    for (std::uint64_t cond : conditions) {
      const auto r = policy::rollout(pol, att, task, cond, run.bank, proposer, obs);
      if (confusion != nullptr) {
        confusion->rows.resize(att.rows());
        for (const auto& step : r.attended_labels)
          for (std::size_t j = 0; j < step.size(); ++j) ++confusion->rows[j][step[j].empty() ? "?" : step[j]];
      }
      run.report.records.push_back(make_record(group, cond, rep, r, target_label));
    }
  }
  run.log("evaluated " + group);
}

/// Label of row 0's argmax on the first scene of each condition, with no
/// policy involved. Scenes lacking a `require_present` proposal are flagged
/// and left unscored.
void evaluate_selection(Run& run, const std::string& group, const attention::AttentionModel& att,
                        const sim::TaskSpec& task, const std::function<bool(const std::string&)>& hit,
                        const std::optional<std::string>& require_present) {
  for (int rep = 0; rep < run.spec.repetitions; ++rep) {
    const std::uint64_t obs = eval_observation_seed(run.spec, rep);
    for (std::uint64_t cond : run.spec.eval_conditions) {
      Rng rng = sim::observation_stream(obs, cond);
      const sim::SimState state = sim::reset(task, cond);
      const Scene scene = sim::observe(state, run.bank, run.spec.proposer, rng);
      const auto hard = attention::hard_observation(att.W, scene, att.train_config.eps_norm);
      ConditionRecord rec;
      rec.group = group;
      rec.condition_seed = cond;
      rec.repetition = rep;
      rec.selected_label = scene.proposals[hard.indices.front()].label.value_or("");
      if (require_present && std::none_of(scene.proposals.begin(), scene.proposals.end(),
                                          [&](const ObjectProposal& p) { return p.label == require_present; })) {
        rec.flags.push_back("target_not_proposed_at_start");
      } else {
        rec.selected = hit(rec.selected_label);
      }
      rec.min_proposals = rec.max_proposals = scene.size();
      run.report.records.push_back(std::move(rec));
    }
  }
}

void add_confusion(Run& run, const std::string& model, const Confusion& c) {
  for (std::size_t j = 0; j < c.rows.size(); ++j) {
    run.report.confusion.push_back({model, static_cast<int>(j), c.rows[j], majority_label(c.rows[j])});
  }
}

Json base_manifest(const ExperimentSpec& spec) {
  Json eval_obs = Json::array();
  for (int rep = 0; rep < spec.repetitions; ++rep) eval_obs.push_back(eval_observation_seed(spec, rep));
  return Json{{"seed", spec.seed},
              {"train_conditions", seeds_json(spec.train_conditions)},
              {"eval_conditions", seeds_json(spec.eval_conditions)},
              {"eval_observation_seeds", std::move(eval_obs)},
              {"bank_stream", stream_seed(spec.seed, "bank")}};
}

ExperimentReport finish(Run& run) {
  auto& r = run.report;
  std::size_t lo = std::numeric_limits<std::size_t>::max(), hi = 0;
  for (const auto& rec : r.records) {
    lo = std::min(lo, rec.min_proposals);
    hi = std::max(hi, rec.max_proposals);
  }
  if (!r.records.empty()) r.details["proposals"] = Json{{"min", lo}, {"max", hi}};
  r.aggregates = aggregate_records(r.records);
  if (run.options.record_wall_clock) {
    r.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - run.start).count();
  }
  r.validate();
  return r;
}

std::vector<std::uint64_t> slice(const std::vector<std::uint64_t>& v, std::size_t from, std::size_t count) {
  if (from + count > v.size()) {
    throw ConfigError("train_conditions has " + std::to_string(v.size()) + " seeds; " +
                      std::to_string(from + count) + " are needed for demonstrations");
  }
  return {v.begin() + static_cast<std::ptrdiff_t>(from), v.begin() + static_cast<std::ptrdiff_t>(from + count)};
}

const sim::ObjectPlacement& relevant_placement(const sim::TaskSpec& task) {
  const int idx = task.find_role(task.kind == sim::TaskKind::Pour ? sim::ObjectRole::Target : sim::ObjectRole::Swept);
  return task.objects[static_cast<std::size_t>(idx)];
}

}  // namespace

sim::TaskSpec clean_task(const sim::TaskSpec& task) {
  sim::TaskSpec out = task;
  std::erase_if(out.objects, [](const sim::ObjectPlacement& o) { return o.role == sim::ObjectRole::Distractor; });
  return out;
}

sim::TaskSpec with_relevant(const sim::TaskSpec& task, const std::string& class_id, std::uint64_t instance_seed) {
  sim::TaskSpec out = task;
  const auto role = task.kind == sim::TaskKind::Pour ? sim::ObjectRole::Target : sim::ObjectRole::Swept;
  auto& o = out.objects.at(static_cast<std::size_t>(out.find_role(role)));
  o.class_id = class_id;
  o.instance_seed = instance_seed;
  return out;
}

std::uint64_t eval_observation_seed(const ExperimentSpec& spec, int rep) {
  return hash_combine(stream_seed(spec.seed, "eval"), static_cast<std::uint64_t>(rep));
}

std::vector<std::optional<FeatureVector>> crop_features(const ExperimentSpec& spec, const meta::FeatureBank& bank) {
  std::vector<std::optional<FeatureVector>> out;
  for (std::size_t row = 0; row < spec.attention.crops.size(); ++row) {
    const auto& c = spec.attention.crops[row];
    if (!c) {
      out.emplace_back();
      continue;
    }
    Rng inst = meta::instance_stream(c->class_id, c->instance_seed);
    Rng nuisance = Rng::derive(stream_seed(spec.seed, "crop"), row);
    out.emplace_back(meta::sample_instance_feature(bank, c->class_id, inst, nuisance));
  }
  return out;
}

std::vector<Demonstration> demos_for(const ExperimentSpec& spec, const sim::TaskSpec& task, const meta::FeatureBank& bank,
                                     int count, std::span<const std::uint64_t> conditions, const std::string& purpose) {
  return sim::collect_demonstrations(task, count, conditions, bank, spec.proposer, TargetConvention::Action,
                                     stream_seed(spec.seed, "demos/" + purpose));
}

attention::AttentionModel train_attention_stage(const ExperimentSpec& spec, std::span<const Demonstration> demos,
                                                const meta::FeatureBank& bank) {
  attention::TrainConfig cfg = spec.attention.train;
  cfg.seed = hash_combine(stream_seed(spec.seed, "attention"), cfg.seed);
  return attention::train_attention(demos, cfg, spec.attention.rows, crop_features(spec, bank));
}

attention::AttentionModel finetune_attention_stage(const ExperimentSpec& spec, const attention::AttentionModel& model,
                                                   std::span<const Demonstration> new_demos,
                                                   std::span<const Demonstration> prior_demos) {
  attention::TrainConfig cfg = spec.attention.finetune;
  cfg.seed = hash_combine(stream_seed(spec.seed, "finetune"), cfg.seed);
  return attention::finetune_attention(model, new_demos, cfg, prior_demos);
}

policy::Policy train_policy_stage(const ExperimentSpec& spec, const sim::TaskSpec& task,
                                  const attention::AttentionModel& attention, const meta::FeatureBank& bank,
                                  bool vision, const std::string& label) {
  policy::BcConfig bc = spec.policy.bc;
  bc.seed = hash_combine(stream_seed(spec.seed, "policy/" + label), bc.seed);
  policy::Policy p = policy::train_supervised(task, attention, spec.train_conditions, bank, spec.proposer,
                                              spec.policy.arch, bc, vision,
                                              stream_seed(spec.seed, "policy-observations/" + label));
  if (spec.policy.rl) {
    policy::RLConfig rl = *spec.policy.rl;
    rl.seed = hash_combine(stream_seed(spec.seed, "rl/" + label), rl.seed);
    p = policy::train_rl(task, attention, rl, vision, spec.train_conditions, bank, spec.proposer, spec.policy.arch,
                         &p);
  }
  return p;
}

ExperimentReport run_instance_generalization(const ExperimentSpec& spec, const RunOptions& options) {
  Run run(spec, options);
  const auto& sc = spec.instance;
  const std::string target_class = relevant_placement(spec.task).class_id;
  const sim::TaskSpec train_task = with_relevant(clean_task(spec.task), target_class, sc.train_instance);

  const auto demo_conds = slice(spec.train_conditions, 0, static_cast<std::size_t>(spec.train_demos));
  const auto demos = demos_for(spec, train_task, run.bank, spec.train_demos, demo_conds, "train");
  run.log("collected " + std::to_string(demos.size()) + " demonstrations");
  const auto att = train_attention_stage(spec, demos, run.bank);
  run.log("trained attention");
  const Eigen::MatrixXd w_before = att.W;
  const auto vision = train_policy_stage(spec, train_task, att, run.bank, true, "main");
  const auto blind = train_policy_stage(spec, train_task, att, run.bank, false, "main");
  run.log("trained policies");
  run.report.staging.push_back({"main", same_w(att, w_before)});

  evaluate_group(run, "vision/trained/clean", vision, att, train_task, spec.proposer, spec.eval_conditions,
                 target_class);
  for (auto inst : sc.eval_instances) {
    const std::string suffix = "instance-" + std::to_string(inst);
    const sim::TaskSpec clean = with_relevant(train_task, target_class, inst);
    sim::TaskSpec cluttered = clean;
    cluttered.objects.insert(cluttered.objects.end(), sc.clutter_objects.begin(), sc.clutter_objects.end());
    evaluate_group(run, "vision/unseen/clean/" + suffix, vision, att, clean, spec.proposer, spec.eval_conditions,
                   target_class);
    evaluate_group(run, "vision/unseen/clutter/" + suffix, vision, att, cluttered, sc.clutter_proposer,
                   spec.eval_conditions, target_class);
    evaluate_group(run, "no-vision/unseen/clean/" + suffix, blind, att, clean, spec.proposer, spec.eval_conditions,
                   target_class);
    evaluate_group(run, "no-vision/unseen/clutter/" + suffix, blind, att, cluttered, sc.clutter_proposer,
                   spec.eval_conditions, target_class);
  }
  Json manifest = base_manifest(spec);
  manifest["demo_conditions"] = seeds_json(demo_conds);
  if (sc.absent_probe) {
    // The target exists physically but is never proposed.
    sim::TaskSpec hidden = train_task;
    hidden.objects.at(static_cast<std::size_t>(hidden.find_role(sim::ObjectRole::Target))).visible = false;
    evaluate_group(run, "probe/absent-target", vision, att, hidden, spec.proposer, spec.eval_conditions, target_class);
  }
  run.report.seed_manifest = std::move(manifest);
  run.report.details["attention"] = training_summary(att);
  return finish(run);
}

ExperimentReport run_distractor_narrowing(const ExperimentSpec& spec, const RunOptions& options) {
  Run run(spec, options);
  const std::string target_class = relevant_placement(spec.task).class_id;
  const sim::TaskSpec clean = clean_task(spec.task);

  const auto a_conds = slice(spec.train_conditions, 0, static_cast<std::size_t>(spec.train_demos));
  const auto b_conds = slice(spec.train_conditions, a_conds.size(), static_cast<std::size_t>(spec.finetune_demos));
  const auto a_demos = demos_for(spec, clean, run.bank, spec.train_demos, a_conds, "train");
  const auto b_demos = demos_for(spec, spec.task, run.bank, spec.finetune_demos, b_conds, "finetune");
  run.log("collected demonstrations");
  const auto att_a = train_attention_stage(spec, a_demos, run.bank);
  const auto att_b = finetune_attention_stage(spec, att_a, b_demos, a_demos);
  run.log("trained attention A and B");

  for (const auto& [name, att] : {std::pair<std::string, const attention::AttentionModel*>{"A", &att_a},
                                  std::pair<std::string, const attention::AttentionModel*>{"B", &att_b}}) {
    const Eigen::MatrixXd w_before = att->W;
    const auto pol = train_policy_stage(spec, clean, *att, run.bank, true, name);
    run.report.staging.push_back({name, same_w(*att, w_before)});
    evaluate_group(run, name + "/distractor", pol, *att, spec.task, spec.proposer, spec.eval_conditions, target_class);
    evaluate_group(run, name + "/no-distractor", pol, *att, clean, spec.proposer, spec.eval_conditions, target_class);
  }
  Json manifest = base_manifest(spec);
  manifest["demo_conditions"] = seeds_json(a_conds);
  manifest["finetune_conditions"] = seeds_json(b_conds);
  run.report.seed_manifest = std::move(manifest);
  run.report.details["attention_A"] = training_summary(att_a);
  run.report.details["attention_B"] = training_summary(att_b);
  return finish(run);
}

ExperimentReport run_scope_broadening(const ExperimentSpec& spec, const RunOptions& options) {
  Run run(spec, options);
  const auto& sc = spec.scope;
  const auto& target = relevant_placement(spec.task);
  const sim::TaskSpec prior_task = with_relevant(clean_task(spec.task), sc.citrus.front(), target.instance_seed);

  const auto pre_conds = slice(spec.train_conditions, 0, static_cast<std::size_t>(spec.train_demos));
  const auto post_conds =
      slice(spec.train_conditions, pre_conds.size(), static_cast<std::size_t>(spec.finetune_demos));
  const auto pre_demos = demos_for(spec, prior_task, run.bank, spec.train_demos, pre_conds, "train");
  std::vector<Demonstration> post_demos;
  for (std::size_t i = 0; i < post_conds.size(); ++i) {
    const sim::TaskSpec t = with_relevant(clean_task(spec.task), sc.citrus[i % sc.citrus.size()], target.instance_seed);
    auto d = demos_for(spec, t, run.bank, 1, std::span(post_conds).subspan(i, 1), "finetune");
    post_demos.push_back(std::move(d.front()));
  }
  run.log("collected demonstrations");
  const auto pre = train_attention_stage(spec, pre_demos, run.bank);
  const auto post = finetune_attention_stage(spec, pre, post_demos, pre_demos);
  run.log("trained attention before and after finetuning");

  const std::set<std::string> distant(sc.distant.begin(), sc.distant.end());
  for (const auto& [stage, att] : {std::pair<std::string, const attention::AttentionModel*>{"pre", &pre},
                                   std::pair<std::string, const attention::AttentionModel*>{"post", &post}}) {
    for (const auto& c : sc.citrus) {
      const sim::TaskSpec t = with_relevant(spec.task, c, target.instance_seed);
      evaluate_selection(run, stage + "/selected/" + c, *att, t, [&](const std::string& l) { return l == c; }, c);
      evaluate_selection(run, stage + "/distant/" + c, *att, t,
                         [&](const std::string& l) { return distant.count(l) > 0; }, std::nullopt);
    }
  }
  run.log("evaluated selection");

  const Eigen::MatrixXd w_before = post.W;
  const auto pol = train_policy_stage(spec, prior_task, post, run.bank, true, "post");
  run.report.staging.push_back({"post", same_w(post, w_before)});
  for (const auto& c : sc.citrus) {
    evaluate_group(run, "post-policy/" + c, pol, post, with_relevant(spec.task, c, target.instance_seed),
                   spec.proposer, spec.eval_conditions, c);
  }
  Json manifest = base_manifest(spec);
  manifest["demo_conditions"] = seeds_json(pre_conds);
  manifest["finetune_conditions"] = seeds_json(post_conds);
  run.report.seed_manifest = std::move(manifest);
  run.report.details["attention_pre"] = training_summary(pre);
  run.report.details["attention_post"] = training_summary(post);
  return finish(run);
}

ExperimentReport run_multi_object_sweep(const ExperimentSpec& spec, const RunOptions& options) {
  Run run(spec, options);
  const auto demo_conds = slice(spec.train_conditions, 0, static_cast<std::size_t>(spec.train_demos));
  const auto demos = demos_for(spec, spec.task, run.bank, spec.train_demos, demo_conds, "train");
  run.log("collected " + std::to_string(demos.size()) + " demonstrations");
  const auto att = train_attention_stage(spec, demos, run.bank);
  run.log("trained attention");
  const Eigen::MatrixXd w_before = att.W;
  const auto vision = train_policy_stage(spec, spec.task, att, run.bank, true, "main");
  run.log("trained vision policy");
  const auto blind = train_policy_stage(spec, spec.task, att, run.bank, false, "main");
  run.log("trained no-vision policy");
  run.report.staging.push_back({"main", same_w(att, w_before)});

  const std::string swept = relevant_placement(spec.task).class_id;
  Confusion confusion;
  evaluate_group(run, "vision", vision, att, spec.task, spec.proposer, spec.eval_conditions, swept, &confusion);
  evaluate_group(run, "no-vision", blind, att, spec.task, spec.proposer, spec.eval_conditions, swept);
  add_confusion(run, "vision", confusion);

  Json manifest = base_manifest(spec);
  manifest["demo_conditions"] = seeds_json(demo_conds);
  run.report.seed_manifest = std::move(manifest);
  run.report.details["attention"] = training_summary(att);
  return finish(run);
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  switch (spec.kind) {
    case ExperimentKind::InstanceGeneralization: return run_instance_generalization(spec, options);
    case ExperimentKind::DistractorNarrowing: return run_distractor_narrowing(spec, options);
    case ExperimentKind::ScopeBroadening: return run_scope_broadening(spec, options);
    case ExperimentKind::MultiObjectSweep: return run_multi_object_sweep(spec, options);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace objattn::exp
