#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "objattn/experiments/report.hpp"
#include "objattn/policy/rollout.hpp"

namespace objattn::exp {

struct RunOptions {
  bool record_wall_clock = false;
  std::ostream* log = nullptr;  // progress lines when set
};

ExperimentReport run_instance_generalization(const ExperimentSpec& spec, const RunOptions& options = {});
ExperimentReport run_distractor_narrowing(const ExperimentSpec& spec, const RunOptions& options = {});
ExperimentReport run_scope_broadening(const ExperimentSpec& spec, const RunOptions& options = {});
ExperimentReport run_multi_object_sweep(const ExperimentSpec& spec, const RunOptions& options = {});
/// Dispatches on spec.kind.
ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// Pipeline stages shared by the runners and the CLI subcommands.

/// Task without its distractor objects.
sim::TaskSpec clean_task(const sim::TaskSpec& task);
/// Task whose target (pour) or swept object (sweep) is the given instance.
sim::TaskSpec with_relevant(const sim::TaskSpec& task, const std::string& class_id, std::uint64_t instance_seed);

/// One observed feature of each configured crop instance (nullopt rows stay
/// randomly initialized).
std::vector<std::optional<FeatureVector>> crop_features(const ExperimentSpec& spec, const meta::FeatureBank& bank);

std::vector<Demonstration> demos_for(const ExperimentSpec& spec, const sim::TaskSpec& task, const meta::FeatureBank& bank,
                                     int count, std::span<const std::uint64_t> conditions, const std::string& purpose);

attention::AttentionModel train_attention_stage(const ExperimentSpec& spec, std::span<const Demonstration> demos,
                                                const meta::FeatureBank& bank);
attention::AttentionModel finetune_attention_stage(const ExperimentSpec& spec, const attention::AttentionModel& model,
                                                   std::span<const Demonstration> new_demos,
                                                   std::span<const Demonstration> prior_demos);

/// Supervised training on the experiment spec's train conditions, then episodic
/// refinement when policy.rl is configured. `label` separates seed streams.
policy::Policy train_policy_stage(const ExperimentSpec& spec, const sim::TaskSpec& task,
                                  const attention::AttentionModel& attention, const meta::FeatureBank& bank,
                                  bool vision, const std::string& label);

/// Observation seed of evaluation repetition `rep`.
std::uint64_t eval_observation_seed(const ExperimentSpec& spec, int rep);

}  // namespace objattn::exp
