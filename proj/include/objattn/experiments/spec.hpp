#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "objattn/attention/model.hpp"
#include "objattn/metaattention/feature_bank.hpp"
#include "objattn/metaattention/proposer.hpp"
#include "objattn/policy/behavior_cloning.hpp"
#include "objattn/policy/cem.hpp"
#include "objattn/simworld/task.hpp"

namespace objattn::exp {

enum class ExperimentKind { InstanceGeneralization, DistractorNarrowing, ScopeBroadening, MultiObjectSweep };

const char* to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s, const std::string& path);

/// One bank class. Classes with `near` are placed at `angle` radians from
/// that (earlier) class; the others are rejection-sampled.
struct BankClassSpec {
  std::string id;
  std::optional<std::string> near;
  double angle = 0.0;
  std::optional<double> instance_noise;
  std::optional<double> nuisance_noise;
};

struct BankSpec {
  int dimension = 32;
  double min_separation = 1.0;
  double instance_noise = 0.1;
  double nuisance_noise = 0.1;
  std::vector<BankClassSpec> classes;
};

/// An example object crop: one observation of this instance.
struct CropSpec {
  std::string class_id;
  std::uint64_t instance_seed = 0;
};

struct AttentionSpec {
  int rows = 1;
  std::vector<std::optional<CropSpec>> crops;  // empty or one per row
  attention::TrainConfig train;
  attention::TrainConfig finetune;
};

struct PolicySpec {
  policy::PolicyArch arch;
  policy::BcConfig bc;
  std::optional<policy::RLConfig> rl;  // episodic refinement after cloning
};

struct InstanceScenario {
  std::uint64_t train_instance = 1;
  std::vector<std::uint64_t> eval_instances;
  // Added to the task for the cluttered evaluation.
  std::vector<sim::ObjectPlacement> clutter_objects;
  meta::ProposerConfig clutter_proposer;
  // Extra evaluation with the target hidden from the proposer.
  bool absent_probe = true;
};

struct ScopeScenario {
  std::vector<std::string> citrus;   // first entry is the crop class
  std::vector<std::string> distant;  // distractor classes far from citrus
};

/// Desk-scale experiment description. The task's distractor objects are
/// absent in "clean" demonstrations and present in finetuning and
/// evaluation, depending on the kind.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::InstanceGeneralization;
  std::uint64_t seed = 0;
  BankSpec bank;
  meta::ProposerConfig proposer;
  sim::TaskSpec task;
  AttentionSpec attention;
  PolicySpec policy;
  int train_demos = 10;
  int finetune_demos = 6;
  std::vector<std::uint64_t> train_conditions;
  std::vector<std::uint64_t> eval_conditions;
  int repetitions = 1;
  InstanceScenario instance;
  ScopeScenario scope;
  // Echoed into reports; the acceptance suite pins its own copies.
  Json thresholds = Json::object();

  /// Throws ConfigError (with the field name) on any violated invariant,
  /// including overlap between train and eval conditions.
  void validate() const;
};

Json encode_spec(const ExperimentSpec& s);
ExperimentSpec decode_spec(const Json& j);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Seed lists are written as arrays or as {"first": a, "count": n}.
std::vector<std::uint64_t> decode_seed_list(const Json& j, const std::string& path);

/// Deterministic bank for the experiment spec's seed.
meta::FeatureBank build_bank(const BankSpec& spec, std::uint64_t seed);

/// Sub-stream seed for a named purpose.
std::uint64_t stream_seed(std::uint64_t master, const std::string& purpose);

}  // namespace objattn::exp
