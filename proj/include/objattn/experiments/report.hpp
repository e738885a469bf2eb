#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "objattn/experiments/spec.hpp"

namespace objattn::exp {

/// One evaluated (group, condition, repetition). Groups are '/'-separated
/// paths such as "vision/unseen/instance-3".
struct ConditionRecord {
  std::string group;
  std::uint64_t condition_seed = 0;
  int repetition = 0;
  std::optional<bool> success;
  std::optional<bool> selected;
  std::string selected_label;  // row 0's argmax label on the first scene
  std::vector<std::string> flags;
  std::size_t min_proposals = 0;
  std::size_t max_proposals = 0;
};

/// Hits over a group and all of its sub-groups, for one metric.
struct Aggregate {
  std::string group;
  std::string metric;  // "success" or "selected"
  long hits = 0;
  long count = 0;
  double rate = 0.0;
};

/// Attended-label counts of one attention row over all rollout steps.
struct ConfusionRow {
  std::string model;
  int row = 0;
  std::map<std::string, long> counts;
  std::string majority;  // most frequent label; ties go to the smaller name
};

struct StagingCheck {
  std::string model;
  bool w_unchanged = false;
};

struct ExperimentReport {
  ExperimentSpec spec;
  Json seed_manifest = Json::object();
  std::vector<ConditionRecord> records;
  std::vector<Aggregate> aggregates;
  std::vector<ConfusionRow> confusion;
  std::vector<StagingCheck> staging;
  // Free-form per-stage summaries (training losses, selection before/after).
  Json details = Json::object();
  std::optional<double> wall_clock_seconds;

  /// nullopt when the group/metric pair has no records.
  std::optional<Aggregate> find(const std::string& group, const std::string& metric) const;
  /// Throws InvariantError if aggregates do not recompute from records or a
  /// record's condition is not in the seed manifest.
  void validate() const;
};

/// Aggregates for every group prefix that has records, sorted by group then
/// metric.
std::vector<Aggregate> aggregate_records(const std::vector<ConditionRecord>& records);

/// Majority label per row, with the tie rule above.
std::string majority_label(const std::map<std::string, long>& counts);

/// Text table of aggregates, confusion rows and staging checks.
std::string render_report(const ExperimentReport& report);

}  // namespace objattn::exp

namespace objattn {
template <>
struct ArtifactCodec<exp::ExperimentReport> {
  static Json encode(const exp::ExperimentReport& r);
  static exp::ExperimentReport decode(const Json& j, const std::filesystem::path& base_dir,
                                      const std::string& path = "");
};
}  // namespace objattn
