#include "nasx/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nasx/backend.h"
#include "nasx/errors.h"

namespace nasx {
namespace {

bool is_spec_error(const std::exception& e) {
  return dynamic_cast<const SyntaxError*>(&e) ||
         dynamic_cast<const SchemaError*>(&e) ||
         dynamic_cast<const ReferenceError*>(&e) ||
         dynamic_cast<const ParamError*>(&e) ||
         dynamic_cast<const UnboundedError*>(&e) ||
         dynamic_cast<const VersionError*>(&e) ||
         dynamic_cast<const ShapeError*>(&e);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NoCompleteTrialError*>(&e)) return kExitNoCompleteTrial;
  if (dynamic_cast<const CapabilityError*>(&e)) return kExitCapability;
  if (is_spec_error(e)) return kExitInvalid;
  return kExitOther;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string domain_text(const ParamDomain& d) {
  std::string s = "{";
  for (std::size_t i = 0; i < d.size(); ++i) {
    s += (i ? ", " : "") + to_string(d.at(i));
  }
  return s + "}";
}

// Prints dotted keys as an indented tree; shared prefixes appear once.
void print_key_tree(std::ostream& out, const std::vector<ParameterKey>& keys) {
  std::vector<std::string> previous;
  for (const auto& k : keys) {
    std::vector<std::string> parts;
    std::stringstream ss(k.key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    std::size_t shared = 0;
    while (shared + 1 < parts.size() && shared < previous.size() &&
           previous[shared] == parts[shared]) {
      ++shared;
    }
    for (std::size_t i = shared; i + 1 < parts.size(); ++i) {
      out << std::string(2 * (i + 1), ' ') << parts[i] << "\n";
    }
    out << std::string(2 * parts.size(), ' ') << parts.back() << ": "
        << domain_text(k.domain) << "\n";
    parts.pop_back();
    previous = std::move(parts);
  }
}

int inspect_graph(const std::string& path, const nlohmann::json& doc,
                  std::ostream& out) {
  const ImportedGraph g = import_json(doc);
  out << "valid graph; " << g.graph.size() << " layers, "
      << g.graph.input_shape().to_string() << " -> "
      << g.graph.output_shape().to_string()
      << (g.params ? ", weights embedded" : ", no weights") << "\n"
      << describe(g.graph).to_table();
  (void)path;
  return kExitOk;
}

int cmd_inspect(const std::string& path, std::size_t samples,
                std::uint64_t seed, std::ostream& out) {
  if (std::filesystem::path(path).extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw SyntaxError(path + ": " + e.what());
    }
    return inspect_graph(path, doc, out);
  }
  const SearchSpaceSpec spec = load_spec(path);
  out << "valid; " << count_configurations(spec) << " configurations\n";
  out << "parameters:\n";
  print_key_tree(out, parameter_keys(spec));
  for (std::size_t i = 0; i < samples; ++i) {
    RandomTrialSource source(trial_seed(seed, i));
    out << "sample " << i << ": " << describe_ir(sample_architecture(spec, source))
        << "\n";
  }
  return kExitOk;
}

struct ExploreOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> budget;
  std::optional<std::string> sampler;
  std::optional<int> parallelism;
  bool hardware_in_loop = false;
  std::optional<std::string> out;
};

std::string summary_text(const StudyConfig& config,
                         const std::vector<TrialRecord>& history,
                         const std::optional<std::size_t>& best,
                         const std::optional<ModelGraph>& graph) {
  std::ostringstream s;
  std::size_t complete = 0, pruned = 0, failed = 0;
  double wall = 0.0;
  for (const auto& r : history) {
    complete += r.status == TrialStatus::kComplete;
    pruned += r.status == TrialStatus::kPruned;
    failed += r.status == TrialStatus::kFailed;
    wall += r.wall_time_s;
  }
  s << "trials: " << history.size() << " (complete " << complete << ", pruned "
    << pruned << ", failed " << failed << ")\n"
    << "sampler: "
    << (config.sampler == SamplerKind::kRandom ? "random" : "evolutionary")
    << ", seed " << config.seed << ", parallelism " << config.parallelism
    << (config.hardware_in_loop ? ", hardware-in-the-loop" : "") << "\n"
    << "trial wall time: " << wall << " s\n";
  if (!best) return s.str();
  const TrialRecord& b = history[*best];
  s << "best trial: " << b.id << ", score " << *b.score << "\n";
  for (const auto& m : b.metrics) {
    s << "  " << m.name << " = " << m.value << " " << m.units << "\n";
  }
  if (graph) s << "\n" << describe(*graph).to_table();
  return s.str();
}

int cmd_explore(const std::string& path, const ExploreOverrides& o,
                std::ostream& err) {
  StudyFile study = load_study_file(path);
  StudyConfig& config = study.config;
  if (o.seed) config.seed = *o.seed;
  if (o.budget) config.budget = *o.budget;
  if (o.sampler) {
    if (*o.sampler == "random") {
      config.sampler = SamplerKind::kRandom;
    } else if (*o.sampler == "evolutionary") {
      config.sampler = SamplerKind::kEvolutionary;
    } else {
      throw SchemaError("--sampler must be random or evolutionary");
    }
  }
  if (o.parallelism) config.parallelism = *o.parallelism;
  if (o.hardware_in_loop) config.hardware_in_loop = true;
  if (o.out) study.output_dir = *o.out;

  const SearchSpaceSpec spec = load_spec(study.space_path);
  const StudySetup setup = prepare_study(spec, config);
  err << "nasx: exploring " << count_configurations(setup.space)
      << " configurations, budget " << config.budget << "\n";
  const std::vector<TrialRecord> history = run_trials(spec, config);

  const std::filesystem::path dir(study.output_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream h(dir / "history.jsonl", std::ios::binary);
    if (!h) throw Error("cannot write " + (dir / "history.jsonl").string());
    write_history(h, history);
  }
  const auto best = best_trial(history);
  std::optional<ModelGraph> graph;
  if (best) {
    graph = rebuild_trial_graph(
        setup.space, history[*best], default_registry(),
        setup.capabilities ? &*setup.capabilities : nullptr);
    write_file(dir / "best.json",
               export_json(*graph, nullptr, history[*best].seed).dump(2) + "\n");
  }
  write_file(dir / "summary.txt", summary_text(config, history, best, graph));
  if (!best) {
    throw NoCompleteTrialError("no trial completed out of " +
                               std::to_string(history.size()));
  }
  err << "nasx: best trial " << history[*best].id << " score "
      << *history[*best].score << "; wrote " << dir.string() << "\n";
  return kExitOk;
}

int cmd_emit(const std::string& path, const std::string& target,
             const std::string& out_dir, std::ostream& err) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(path + ": " + e.what());
  }
  ImportedGraph g = import_json(doc);
  const std::uint64_t init_seed = g.init_seed.value_or(0);
  const ParamStore params = g.params ? *g.params : init_params(g.graph, init_seed);
  const std::filesystem::path dir(out_dir);
  if (target == "c") {
    generate_c(g.graph, params).write_to(out_dir);
    err << "nasx: wrote C bundle to " << dir.string() << "\n";
  } else if (target == "json") {
    std::filesystem::create_directories(dir);
    write_file(dir / "model.json",
               export_json(g.graph, &params, init_seed).dump(2) + "\n");
    err << "nasx: wrote " << (dir / "model.json").string() << "\n";
  } else {
    throw CapabilityError("unknown target '" + target + "'");
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Hardware-aware neural architecture search"};
  app.require_subcommand(1);

  auto* inspect = app.add_subcommand("inspect", "validate a search space (or graph JSON)");
  std::string inspect_path;
  std::size_t samples = 0;
  std::uint64_t sample_seed = 0;
  inspect->add_option("file", inspect_path, "search-space YAML or graph JSON")
      ->required();
  inspect->add_option("--sample", samples, "print N sampled architectures");
  inspect->add_option("--seed", sample_seed, "seed for --sample");

  auto* explore = app.add_subcommand("explore", "run a study");
  std::string study_path;
  ExploreOverrides overrides;
  explore->add_option("study", study_path, "study YAML")->required();
  explore->add_option("--seed", overrides.seed);
  explore->add_option("--budget", overrides.budget);
  explore->add_option("--sampler", overrides.sampler, "random | evolutionary");
  explore->add_option("--parallelism", overrides.parallelism);
  explore->add_flag("--hardware-in-loop", overrides.hardware_in_loop,
                    "source latency from the simulated device");
  explore->add_option("--out", overrides.out, "output directory");

  auto* emit = app.add_subcommand("emit", "generate deployable artifacts");
  std::string graph_path;
  std::string target = "c";
  std::string out_dir = "nasx-emit";
  emit->add_option("graph", graph_path, "graph JSON (e.g. best.json)")->required();
  emit->add_option("--target", target, "c | json");
  emit->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitOther;
  }

  try {
    if (*inspect) return cmd_inspect(inspect_path, samples, sample_seed, out);
    if (*explore) return cmd_explore(study_path, overrides, err);
    return cmd_emit(graph_path, target, out_dir, err);
  } catch (const std::exception& e) {
    err << "nasx: error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace nasx
