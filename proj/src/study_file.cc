#include <filesystem>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nasx/cli.h"
#include "nasx/errors.h"

namespace nasx {
namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark m = node.Mark();
  if (m.is_null()) return "";
  return "line " + std::to_string(m.line + 1) + ", column " +
         std::to_string(m.column + 1) + ": ";
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& name) {
  if (!node.IsScalar()) {
    throw SchemaError(where(node) + "'" + name + "' must be a scalar");
  }
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw SchemaError(where(node) + "'" + name + "' has the wrong type");
  }
}

void check_keys(const YAML::Node& map, std::initializer_list<const char*> keys,
                const std::string& section) {
  if (!map.IsMap()) throw SchemaError(where(map) + section + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) {
          return key == k;
        }) == keys.end()) {
      throw SchemaError(where(kv.first) + "unknown key '" + key + "' in " +
                        section);
    }
  }
}

CriterionKind criterion_kind(const YAML::Node& node) {
  const auto s = scalar<std::string>(node, "kind");
  if (s == "objective") return CriterionKind::kObjective;
  if (s == "soft") return CriterionKind::kSoftConstraint;
  if (s == "hard") return CriterionKind::kHardConstraint;
  throw SchemaError(where(node) + "kind must be objective, soft or hard");
}

}  // namespace

StudyFile parse_study_file(const std::string& yaml_text,
                           const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw SyntaxError("line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  check_keys(root,
             {"space", "output", "budget", "seed", "sampler", "evolution",
              "parallelism", "hardware_in_loop", "backend", "proxy",
              "signal_seed", "device", "criteria"},
             "study file");
  StudyFile f;
  StudyConfig& c = f.config;
  if (!root["space"]) throw SchemaError("study file: missing 'space'");
  const std::filesystem::path base(base_dir);
  f.space_path = (base / scalar<std::string>(root["space"], "space")).string();
  if (root["output"]) {
    f.output_dir = (base / scalar<std::string>(root["output"], "output")).string();
  }
  if (root["budget"]) {
    const auto budget = scalar<std::int64_t>(root["budget"], "budget");
    if (budget < 1) throw SchemaError(where(root["budget"]) + "budget must be >= 1");
    c.budget = static_cast<std::size_t>(budget);
  }
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["sampler"]) {
    const auto s = scalar<std::string>(root["sampler"], "sampler");
    if (s == "random") {
      c.sampler = SamplerKind::kRandom;
    } else if (s == "evolutionary") {
      c.sampler = SamplerKind::kEvolutionary;
    } else {
      throw SchemaError(where(root["sampler"]) +
                        "sampler must be random or evolutionary");
    }
  }
  if (const auto evo = root["evolution"]) {
    check_keys(evo, {"population", "offspring", "mutation_rate", "elite_fraction"},
               "evolution");
    if (evo["population"]) {
      c.evolution.population = scalar<std::size_t>(evo["population"], "population");
    }
    if (evo["offspring"]) {
      c.evolution.offspring = scalar<std::size_t>(evo["offspring"], "offspring");
    }
    if (evo["mutation_rate"]) {
      c.evolution.mutation_rate = scalar<double>(evo["mutation_rate"], "mutation_rate");
    }
    if (evo["elite_fraction"]) {
      c.evolution.elite_fraction =
          scalar<double>(evo["elite_fraction"], "elite_fraction");
    }
  }
  if (root["parallelism"]) {
    c.parallelism = scalar<int>(root["parallelism"], "parallelism");
  }
  if (root["hardware_in_loop"]) {
    c.hardware_in_loop = scalar<bool>(root["hardware_in_loop"], "hardware_in_loop");
  }
  if (root["backend"]) c.backend = scalar<std::string>(root["backend"], "backend");
  if (const auto proxy = root["proxy"]) {
    check_keys(proxy, {"seed", "noise"}, "proxy");
    if (proxy["seed"]) c.proxy_seed = scalar<std::uint64_t>(proxy["seed"], "seed");
    if (proxy["noise"]) c.proxy_noise = scalar<double>(proxy["noise"], "noise");
  }
  if (root["signal_seed"]) {
    c.signal_seed = scalar<std::uint64_t>(root["signal_seed"], "signal_seed");
  }
  if (const auto dev = root["device"]) {
    check_keys(dev, {"throughput", "layer_overhead", "memory_capacity", "jitter"},
               "device");
    if (dev["throughput"]) {
      c.device.throughput = scalar<double>(dev["throughput"], "throughput");
    }
    if (dev["layer_overhead"]) {
      c.device.layer_overhead = scalar<double>(dev["layer_overhead"], "layer_overhead");
    }
    if (dev["memory_capacity"]) {
      c.device.memory_capacity =
          scalar<std::int64_t>(dev["memory_capacity"], "memory_capacity");
    }
    if (dev["jitter"]) c.device.jitter = scalar<double>(dev["jitter"], "jitter");
  }
  const auto criteria = root["criteria"];
  if (!criteria || !criteria.IsSequence() || criteria.size() == 0) {
    throw SchemaError(where(root) + "study file needs a non-empty 'criteria' list");
  }
  for (const auto& node : criteria) {
    check_keys(node, {"estimator", "kind", "weight", "threshold", "bounds"},
               "criterion");
    CriterionDef d;
    if (!node["estimator"]) throw SchemaError(where(node) + "criterion needs 'estimator'");
    d.estimator = scalar<std::string>(node["estimator"], "estimator");
    if (node["kind"]) d.kind = criterion_kind(node["kind"]);
    if (node["weight"]) d.weight = scalar<double>(node["weight"], "weight");
    if (node["threshold"]) d.threshold = scalar<double>(node["threshold"], "threshold");
    if (const auto b = node["bounds"]) {
      if (!b.IsSequence() || b.size() != 2) {
        throw SchemaError(where(b) + "bounds must be [lo, hi]");
      }
      d.bounds = {scalar<double>(b[0], "bounds"), scalar<double>(b[1], "bounds")};
    }
    c.criteria.push_back(std::move(d));
  }
  return f;
}

StudyFile load_study_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  try {
    return parse_study_file(
        text.str(), std::filesystem::path(path).parent_path().string());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  } catch (const SyntaxError& e) {
    throw SyntaxError(path + ": " + e.what());
  }
}

}  // namespace nasx
