#include "objattn/experiments/spec.hpp"

#include <algorithm>
#include <set>

namespace objattn::exp {

namespace {

Json encode_optional_crops(const std::vector<std::optional<CropSpec>>& crops) {
  Json out = Json::array();
  for (const auto& c : crops) {
    if (c) {
      out.push_back(Json{{"class_id", c->class_id}, {"instance_seed", c->instance_seed}});
    } else {
      out.push_back(nullptr);
    }
  }
  return out;
}

Json encode_seeds(const std::vector<std::uint64_t>& seeds) {
  Json out = Json::array();
  for (auto s : seeds) out.push_back(s);
  return out;
}

Json encode_bank_spec(const BankSpec& b) {
  Json classes = Json::array();
  for (const auto& c : b.classes) {
    Json e{{"id", c.id}};
    if (c.near) {
      e["near"] = *c.near;
      e["angle"] = c.angle;
    }
    if (c.instance_noise) e["instance_noise"] = *c.instance_noise;
    if (c.nuisance_noise) e["nuisance_noise"] = *c.nuisance_noise;
    classes.push_back(std::move(e));
  }
  return Json{{"dimension", b.dimension},
              {"min_separation", b.min_separation},
              {"instance_noise", b.instance_noise},
              {"nuisance_noise", b.nuisance_noise},
              {"classes", std::move(classes)}};
}

BankSpec decode_bank_spec(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  BankSpec b;
  b.dimension = json_io::value_or(j, "dimension", b.dimension);
  b.min_separation = json_io::value_or(j, "min_separation", b.min_separation);
  b.instance_noise = json_io::value_or(j, "instance_noise", b.instance_noise);
  b.nuisance_noise = json_io::value_or(j, "nuisance_noise", b.nuisance_noise);
  const Json& classes = json_io::require(j, "classes", path);
  if (!classes.is_array()) throw SchemaError(path + ".classes", "expected an array");
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::string cp = path + ".classes[" + std::to_string(i) + "]";
    BankClassSpec c;
    c.id = json_io::string(classes[i], "id", cp);
    if (classes[i].contains("near")) {
      c.near = json_io::string(classes[i], "near", cp);
      c.angle = json_io::number(classes[i], "angle", cp);
    }
    if (classes[i].contains("instance_noise")) c.instance_noise = json_io::number(classes[i], "instance_noise", cp);
    if (classes[i].contains("nuisance_noise")) c.nuisance_noise = json_io::number(classes[i], "nuisance_noise", cp);
    b.classes.push_back(std::move(c));
  }
  return b;
}

std::vector<std::optional<CropSpec>> decode_crops(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array");
  std::vector<std::optional<CropSpec>> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].is_null()) {
      out.emplace_back();
      continue;
    }
    const std::string cp = path + "[" + std::to_string(i) + "]";
    out.push_back(CropSpec{json_io::string(j[i], "class_id", cp),
                           json_io::value_or<std::uint64_t>(j[i], "instance_seed", 0)});
  }
  return out;
}

std::vector<std::string> decode_strings(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw SchemaError(path, "expected an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::InstanceGeneralization: return "instance-generalization";
    case ExperimentKind::DistractorNarrowing: return "distractor-narrowing";
    case ExperimentKind::ScopeBroadening: return "scope-broadening";
    case ExperimentKind::MultiObjectSweep: return "multi-object-sweep";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& s, const std::string& path) {
  for (auto k : {ExperimentKind::InstanceGeneralization, ExperimentKind::DistractorNarrowing,
                 ExperimentKind::ScopeBroadening, ExperimentKind::MultiObjectSweep}) {
    if (s == to_string(k)) return k;
  }
  throw SchemaError(path, "unknown experiment kind \"" + s + "\"");
}

std::vector<std::uint64_t> decode_seed_list(const Json& j, const std::string& path) {
  std::vector<std::uint64_t> out;
  if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
        throw SchemaError(path, "expected non-negative integer seeds");
      }
      out.push_back(e.get<std::uint64_t>());
    }
  } else if (j.is_object()) {
    const auto first = json_io::unsigned_integer(j, "first", path);
    const auto count = json_io::unsigned_integer(j, "count", path);
    for (std::uint64_t i = 0; i < count; ++i) out.push_back(first + i);
  } else {
    throw SchemaError(path, "expected an array or {\"first\", \"count\"}");
  }
  return out;
}

void ExperimentSpec::validate() const {
  task.validate();
  proposer.validate();
  attention.train.validate();
  attention.finetune.validate();
  policy.arch.validate();
  policy.bc.validate();
  if (policy.rl) policy.rl->validate();
  if (attention.rows < 1) throw ConfigError("attention.rows must be >= 1");
  if (!attention.crops.empty() && static_cast<int>(attention.crops.size()) != attention.rows) {
    throw ConfigError("attention.crops must be empty or have one entry per row");
  }
  if (bank.dimension < 1) throw ConfigError("bank.dimension must be >= 1");
  if (bank.classes.empty()) throw ConfigError("bank.classes must not be empty");
  if (train_demos < 1) throw ConfigError("demos.train must be >= 1");
  if (finetune_demos < 0) throw ConfigError("demos.finetune must be >= 0");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (train_conditions.empty()) throw ConfigError("train_conditions must not be empty");
  if (eval_conditions.empty()) throw ConfigError("eval_conditions must not be empty");
  if (static_cast<int>(train_conditions.size()) < train_demos) {
    throw ConfigError("train_conditions must hold at least demos.train seeds");
  }
  const std::set<std::uint64_t> train(train_conditions.begin(), train_conditions.end());
  for (auto s : eval_conditions) {
    if (train.count(s)) {
      throw ConfigError("eval_conditions: seed " + std::to_string(s) + " also appears in train_conditions");
    }
  }
  if (std::set<std::uint64_t>(eval_conditions.begin(), eval_conditions.end()).size() != eval_conditions.size()) {
    throw ConfigError("eval_conditions must not repeat a seed");
  }

  std::set<std::string> ids;
  for (const auto& c : bank.classes) {
    if (!ids.insert(c.id).second) throw ConfigError("bank.classes: duplicate id \"" + c.id + "\"");
    if (c.near && !ids.count(*c.near)) {
      throw ConfigError("bank.classes: \"" + c.id + "\" is near unknown or later class \"" + *c.near + "\"");
    }
  }
  auto known = [&](const std::string& id, const std::string& field) {
    if (!ids.count(id)) throw ConfigError(field + ": class \"" + id + "\" is not in the bank");
  };
  for (const auto& o : task.objects) known(o.class_id, "task.objects");
  for (const auto& c : attention.crops)
    if (c) known(c->class_id, "attention.crops");

  switch (kind) {
    case ExperimentKind::InstanceGeneralization:
      if (task.kind != sim::TaskKind::Pour) throw ConfigError("instance-generalization needs a pour task");
      if (instance.eval_instances.empty()) throw ConfigError("scenario.eval_instances must not be empty");
      for (auto s : instance.eval_instances) {
        if (s == instance.train_instance) {
          throw ConfigError("scenario.eval_instances must not contain the training instance");
        }
      }
      for (const auto& o : instance.clutter_objects) known(o.class_id, "scenario.clutter_objects");
      instance.clutter_proposer.validate();
      break;
    case ExperimentKind::DistractorNarrowing:
      if (task.kind != sim::TaskKind::Pour) throw ConfigError("distractor-narrowing needs a pour task");
      if (task.find_role(sim::ObjectRole::Distractor) < 0) {
        throw ConfigError("distractor-narrowing needs a task object with role \"distractor\"");
      }
      if (finetune_demos < 1) throw ConfigError("distractor-narrowing needs demos.finetune >= 1");
      break;
    case ExperimentKind::ScopeBroadening:
      if (task.kind != sim::TaskKind::Pour) throw ConfigError("scope-broadening needs a pour task");
      if (scope.citrus.size() < 2) throw ConfigError("scenario.citrus needs at least two classes");
      if (finetune_demos < 1) throw ConfigError("scope-broadening needs demos.finetune >= 1");
      for (const auto& c : scope.citrus) known(c, "scenario.citrus");
      for (const auto& c : scope.distant) known(c, "scenario.distant");
      break;
    case ExperimentKind::MultiObjectSweep:
      if (task.kind != sim::TaskKind::Sweep) throw ConfigError("multi-object-sweep needs a sweep task");
      if (attention.rows != 2) throw ConfigError("multi-object-sweep needs attention.rows = 2");
      break;
  }
}

Json encode_spec(const ExperimentSpec& s) {
  Json policy{{"arch", policy::encode_arch(s.policy.arch)}, {"bc", policy::encode_bc(s.policy.bc)}};
  if (s.policy.rl) policy["rl"] = policy::encode_rl(*s.policy.rl);
  Json j{{"schema_version", kSchemaVersion},
         {"experiment_kind", to_string(s.kind)},
         {"seed", s.seed},
         {"bank", encode_bank_spec(s.bank)},
         {"proposer", meta::encode_proposer(s.proposer)},
         {"task", sim::encode_task(s.task)},
         {"attention",
          {{"rows", s.attention.rows},
           {"crops", encode_optional_crops(s.attention.crops)},
           {"train", attention::encode_train_config(s.attention.train)},
           {"finetune", attention::encode_train_config(s.attention.finetune)}}},
         {"policy", std::move(policy)},
         {"demos", {{"train", s.train_demos}, {"finetune", s.finetune_demos}}},
         {"train_conditions", encode_seeds(s.train_conditions)},
         {"eval_conditions", encode_seeds(s.eval_conditions)},
         {"repetitions", s.repetitions},
         {"thresholds", s.thresholds}};
  Json scenario = Json::object();
  if (s.kind == ExperimentKind::InstanceGeneralization) {
    Json clutter = Json::array();
    for (const auto& o : s.instance.clutter_objects) clutter.push_back(sim::encode_placement(o));
    scenario = Json{{"train_instance", s.instance.train_instance},
                    {"eval_instances", encode_seeds(s.instance.eval_instances)},
                    {"clutter_objects", std::move(clutter)},
                    {"clutter_proposer", meta::encode_proposer(s.instance.clutter_proposer)},
                    {"absent_probe", s.instance.absent_probe}};
  } else if (s.kind == ExperimentKind::ScopeBroadening) {
    scenario = Json{{"citrus", s.scope.citrus}, {"distant", s.scope.distant}};
  }
  j["scenario"] = std::move(scenario);
  return j;
}

ExperimentSpec decode_spec(const Json& j) {
  if (!j.is_object()) throw SchemaError("", "expected an object");
  json_io::check_version(j);
  ExperimentSpec s;
  s.kind = parse_experiment_kind(json_io::string(j, "experiment_kind"), "experiment_kind");
  s.seed = json_io::value_or<std::uint64_t>(j, "seed", 0);
  s.bank = decode_bank_spec(json_io::require(j, "bank"), "bank");
  if (j.contains("proposer")) s.proposer = meta::decode_proposer(j["proposer"], "proposer");
  s.task = sim::decode_task(json_io::require(j, "task"), "task");

  const Json& att = json_io::require(j, "attention");
  s.attention.rows = json_io::value_or(att, "rows", 1);
  if (att.contains("crops")) s.attention.crops = decode_crops(att["crops"], "attention.crops");
  if (att.contains("train")) s.attention.train = attention::decode_train_config(att["train"], "attention.train");
  s.attention.finetune = att.contains("finetune")
                             ? attention::decode_train_config(att["finetune"], "attention.finetune")
                             : s.attention.train;

  if (j.contains("policy")) {
    const Json& p = j["policy"];
    if (p.contains("arch")) s.policy.arch = policy::decode_arch(p["arch"], "policy.arch");
    if (p.contains("bc")) s.policy.bc = policy::decode_bc(p["bc"], "policy.bc");
    if (p.contains("rl") && !p["rl"].is_null()) s.policy.rl = policy::decode_rl(p["rl"], "policy.rl");
  }
  if (j.contains("demos")) {
    s.train_demos = json_io::value_or(j["demos"], "train", s.train_demos);
    s.finetune_demos = json_io::value_or(j["demos"], "finetune", s.finetune_demos);
  }
  s.train_conditions = decode_seed_list(json_io::require(j, "train_conditions"), "train_conditions");
  s.eval_conditions = decode_seed_list(json_io::require(j, "eval_conditions"), "eval_conditions");
  s.repetitions = json_io::value_or(j, "repetitions", s.repetitions);
  if (j.contains("thresholds")) s.thresholds = j["thresholds"];

  const Json scenario = j.value("scenario", Json::object());
  if (s.kind == ExperimentKind::InstanceGeneralization) {
    s.instance.train_instance = json_io::value_or<std::uint64_t>(scenario, "train_instance", 1);
    if (scenario.contains("eval_instances")) {
      s.instance.eval_instances = decode_seed_list(scenario["eval_instances"], "scenario.eval_instances");
    }
    if (scenario.contains("clutter_objects")) {
      const Json& objs = scenario["clutter_objects"];
      if (!objs.is_array()) throw SchemaError("scenario.clutter_objects", "expected an array");
      for (std::size_t i = 0; i < objs.size(); ++i) {
        s.instance.clutter_objects.push_back(
            sim::decode_placement(objs[i], "scenario.clutter_objects[" + std::to_string(i) + "]"));
      }
    }
    s.instance.clutter_proposer = scenario.contains("clutter_proposer")
                                      ? meta::decode_proposer(scenario["clutter_proposer"], "scenario.clutter_proposer")
                                      : s.proposer;
    s.instance.absent_probe = json_io::value_or(scenario, "absent_probe", true);
  } else if (s.kind == ExperimentKind::ScopeBroadening) {
    s.scope.citrus = decode_strings(json_io::require(scenario, "citrus", "scenario"), "scenario.citrus");
    if (scenario.contains("distant")) s.scope.distant = decode_strings(scenario["distant"], "scenario.distant");
  }
  s.validate();
  return s;
}

ExperimentSpec load_spec(const std::filesystem::path& path) { return decode_spec(json_io::read_file(path)); }

std::uint64_t stream_seed(std::uint64_t master, const std::string& purpose) {
  return hash_combine(master, hash_string(purpose));
}

meta::FeatureBank build_bank(const BankSpec& spec, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, hash_string("bank"));
  std::vector<std::string> base;
  for (const auto& c : spec.classes)
    if (!c.near) base.push_back(c.id);
  if (base.empty()) throw ConfigError("bank.classes: at least one class must not be \"near\" another");
  meta::FeatureBank bank = meta::make_feature_bank(spec.dimension, base, spec.instance_noise, spec.nuisance_noise,
                                                   spec.min_separation, rng);
  std::vector<meta::ClassPrototype> protos = bank.classes();
  for (auto& p : protos) {
    const auto& c = *std::find_if(spec.classes.begin(), spec.classes.end(),
                                  [&](const BankClassSpec& x) { return x.id == p.class_id; });
    if (c.instance_noise) p.instance_noise = *c.instance_noise;
    if (c.nuisance_noise) p.nuisance_noise = *c.nuisance_noise;
  }
  bank = meta::FeatureBank(spec.dimension, std::move(protos), bank.min_separation());
  for (const auto& c : spec.classes) {
    if (!c.near) continue;
    bank.add_related_class(c.id, *c.near, c.angle, rng, c.instance_noise.value_or(spec.instance_noise),
                           c.nuisance_noise.value_or(spec.nuisance_noise));
  }
  return bank;
}

}  // namespace objattn::exp
