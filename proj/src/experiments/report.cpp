#include "objattn/experiments/report.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace objattn::exp {

namespace {

std::vector<std::string> prefixes(const std::string& group) {
  std::vector<std::string> out;
  for (std::size_t pos = group.find('/'); pos != std::string::npos; pos = group.find('/', pos + 1)) {
    out.push_back(group.substr(0, pos));
  }
  out.push_back(group);
  return out;
}

Json encode_record(const ConditionRecord& r) {
  Json j{{"group", r.group},
         {"condition_seed", r.condition_seed},
         {"repetition", r.repetition},
         {"flags", r.flags},
         {"min_proposals", r.min_proposals},
         {"max_proposals", r.max_proposals}};
  j["success"] = r.success ? Json(*r.success) : Json(nullptr);
  j["selected"] = r.selected ? Json(*r.selected) : Json(nullptr);
  if (!r.selected_label.empty()) j["selected_label"] = r.selected_label;
  return j;
}

ConditionRecord decode_record(const Json& j, const std::string& path) {
  ConditionRecord r;
  r.group = json_io::string(j, "group", path);
  r.condition_seed = json_io::unsigned_integer(j, "condition_seed", path);
  r.repetition = static_cast<int>(json_io::integer(j, "repetition", path));
  if (auto it = j.find("success"); it != j.end() && !it->is_null()) r.success = json_io::boolean(j, "success", path);
  if (auto it = j.find("selected"); it != j.end() && !it->is_null()) r.selected = json_io::boolean(j, "selected", path);
  r.selected_label = json_io::value_or<std::string>(j, "selected_label", "");
  r.flags = json_io::value_or<std::vector<std::string>>(j, "flags", {});
  r.min_proposals = json_io::value_or<std::size_t>(j, "min_proposals", 0);
  r.max_proposals = json_io::value_or<std::size_t>(j, "max_proposals", 0);
  return r;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::vector<Aggregate> aggregate_records(const std::vector<ConditionRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::pair<long, long>> acc;
  for (const auto& r : records) {
    for (const auto& g : prefixes(r.group)) {
      if (r.success) {
        auto& a = acc[{g, "success"}];
        a.first += *r.success ? 1 : 0;
        ++a.second;
      }
      if (r.selected) {
        auto& a = acc[{g, "selected"}];
        a.first += *r.selected ? 1 : 0;
        ++a.second;
      }
    }
  }
  std::vector<Aggregate> out;
  for (const auto& [key, hc] : acc) {
    out.push_back({key.first, key.second, hc.first, hc.second,
                   static_cast<double>(hc.first) / static_cast<double>(hc.second)});
  }
  return out;
}

std::string majority_label(const std::map<std::string, long>& counts) {
  std::string best;
  long best_count = -1;
  for (const auto& [label, n] : counts) {
    if (n > best_count) {
      best = label;
      best_count = n;
    }
  }
  return best;
}

std::optional<Aggregate> ExperimentReport::find(const std::string& group, const std::string& metric) const {
  for (const auto& a : aggregates)
    if (a.group == group && a.metric == metric) return a;
  return std::nullopt;
}

void ExperimentReport::validate() const {
  const auto expected = aggregate_records(records);
  if (expected.size() != aggregates.size()) {
    throw InvariantError("report aggregates do not match its records (group count differs)");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& e = expected[i];
    const auto& a = aggregates[i];
    if (e.group != a.group || e.metric != a.metric || e.hits != a.hits || e.count != a.count || e.rate != a.rate) {
      throw InvariantError("report aggregate " + a.group + "/" + a.metric + " does not recompute from records");
    }
  }
  std::set<std::uint64_t> known;
  for (const char* key : {"eval_conditions", "probe_conditions"}) {
    if (auto it = seed_manifest.find(key); it != seed_manifest.end()) {
      for (const auto& s : *it) known.insert(s.get<std::uint64_t>());
    }
  }
  std::set<std::tuple<std::string, std::uint64_t, int>> seen;
  for (const auto& r : records) {
    if (!known.count(r.condition_seed)) {
      throw InvariantError("record condition " + std::to_string(r.condition_seed) + " is not in the seed manifest");
    }
    if (r.repetition < 0 || r.repetition >= spec.repetitions) {
      throw InvariantError("record repetition out of range in group " + r.group);
    }
    if (!seen.insert({r.group, r.condition_seed, r.repetition}).second) {
      throw InvariantError("duplicate record in group " + r.group);
    }
  }
  for (const auto& c : confusion) {
    if (c.majority != majority_label(c.counts)) {
      throw InvariantError("confusion row majority does not match its counts");
    }
  }
}

std::string render_report(const ExperimentReport& report) {
  std::ostringstream os;
  os << "experiment: " << to_string(report.spec.kind) << "  seed: " << report.spec.seed
     << "  repetitions: " << report.spec.repetitions << "\n";
  if (auto it = report.details.find("proposals"); it != report.details.end()) {
    os << "proposals per scene: " << (*it)["min"] << ".." << (*it)["max"] << "\n";
  }
  std::size_t width = 5;
  for (const auto& a : report.aggregates) width = std::max(width, a.group.size());
  os << "\n" << std::string(width - 5, ' ') << "group  metric       rate    hits/count\n";
  for (const auto& a : report.aggregates) {
    os << std::string(width - a.group.size(), ' ') << a.group << "  " << a.metric
       << std::string(a.metric.size() < 9 ? 9 - a.metric.size() : 0, ' ') << "  " << fixed(a.rate, 3) << "  "
       << a.hits << "/" << a.count << "\n";
  }
  if (!report.confusion.empty()) {
    os << "\nattention row confusion (attended label counts over rollout steps)\n";
    for (const auto& c : report.confusion) {
      os << "  " << c.model << " row " << c.row << ": majority " << c.majority << " |";
      for (const auto& [label, n] : c.counts) os << " " << label << "=" << n;
      os << "\n";
    }
  }
  if (!report.staging.empty()) {
    os << "\nW unchanged by policy training:";
    for (const auto& s : report.staging) os << " " << s.model << "=" << (s.w_unchanged ? "yes" : "NO");
    os << "\n";
  }
  long flagged = 0;
  for (const auto& r : report.records) flagged += r.flags.empty() ? 0 : 1;
  if (flagged > 0) os << "\nflagged conditions: " << flagged << "\n";
  if (report.wall_clock_seconds) os << "wall clock: " << fixed(*report.wall_clock_seconds, 2) << " s\n";
  return os.str();
}

}  // namespace objattn::exp

namespace objattn {

Json ArtifactCodec<exp::ExperimentReport>::encode(const exp::ExperimentReport& r) {
  Json records = Json::array();
  for (const auto& rec : r.records) records.push_back(exp::encode_record(rec));
  Json aggregates = Json::array();
  for (const auto& a : r.aggregates) {
    aggregates.push_back(
        Json{{"group", a.group}, {"metric", a.metric}, {"hits", a.hits}, {"count", a.count}, {"rate", a.rate}});
  }
  Json confusion = Json::array();
  for (const auto& c : r.confusion) {
    confusion.push_back(Json{{"model", c.model}, {"row", c.row}, {"counts", c.counts}, {"majority", c.majority}});
  }
  Json staging = Json::array();
  for (const auto& s : r.staging) staging.push_back(Json{{"model", s.model}, {"w_unchanged", s.w_unchanged}});
  Json j{{"experiment_kind", exp::to_string(r.spec.kind)},
         {"spec", exp::encode_spec(r.spec)},
         {"seed_manifest", r.seed_manifest},
         {"records", std::move(records)},
         {"aggregates", std::move(aggregates)},
         {"confusion", std::move(confusion)},
         {"staging", std::move(staging)},
         {"details", r.details}};
  if (r.wall_clock_seconds) j["wall_clock_seconds"] = *r.wall_clock_seconds;
  return j;
}

exp::ExperimentReport ArtifactCodec<exp::ExperimentReport>::decode(const Json& j, const std::filesystem::path&,
                                                                   const std::string& path) {
  exp::ExperimentReport r;
  r.spec = exp::decode_spec(json_io::require(j, "spec", path));
  r.seed_manifest = json_io::require(j, "seed_manifest", path);
  const Json& records = json_io::require(j, "records", path);
  for (std::size_t i = 0; i < records.size(); ++i) {
    r.records.push_back(exp::decode_record(records[i], path + "records[" + std::to_string(i) + "]"));
  }
  for (const auto& a : json_io::require(j, "aggregates", path)) {
    r.aggregates.push_back({json_io::string(a, "group", "aggregates"), json_io::string(a, "metric", "aggregates"),
                            json_io::integer(a, "hits", "aggregates"), json_io::integer(a, "count", "aggregates"),
                            json_io::number(a, "rate", "aggregates")});
  }
  for (const auto& c : j.value("confusion", Json::array())) {
    exp::ConfusionRow row;
    row.model = json_io::string(c, "model", "confusion");
    row.row = static_cast<int>(json_io::integer(c, "row", "confusion"));
    row.counts = json_io::require(c, "counts", "confusion").get<std::map<std::string, long>>();
    row.majority = json_io::string(c, "majority", "confusion");
    r.confusion.push_back(std::move(row));
  }
  for (const auto& s : j.value("staging", Json::array())) {
    r.staging.push_back({json_io::string(s, "model", "staging"), json_io::boolean(s, "w_unchanged", "staging")});
  }
  r.details = j.value("details", Json::object());
  if (j.contains("wall_clock_seconds")) r.wall_clock_seconds = json_io::number(j, "wall_clock_seconds", path);
  r.validate();
  return r;
}

}  // namespace objattn
