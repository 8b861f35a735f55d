#include "nasx/study.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "nasx/backend.h"
#include "nasx/errors.h"
#include "nasx/seeding.h"

namespace nasx {
namespace {

// Reuses the parent's value unless a coin with P(rate) says re-draw.
// Exactly two draws per key keep streams aligned across parents.
class MutationSource final : public TrialSource {
 public:
  MutationSource(const SamplingTrace& parent, double rate,
                 std::mt19937_64& rng)
      : rate_(rate), rng_(rng) {
    for (const auto& [key, value] : parent) parent_.emplace(key, value);
  }

  ParamValue suggest(const std::string& key,
                     const ParamDomain& domain) override {
    const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const std::size_t fresh =
        std::uniform_int_distribution<std::size_t>(0, domain.size() - 1)(rng_);
    return pick(key, domain, coin, fresh);
  }

  // Fresh structural values follow the same sub-space weights as the
  // random source, so a full-rate child is a fresh uniform sample.
  ParamValue suggest_structural(const std::string& key,
                                const ParamDomain& domain,
                                const std::vector<double>& weights) override {
    const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const std::size_t fresh = std::discrete_distribution<std::size_t>(
        weights.begin(), weights.end())(rng_);
    return pick(key, domain, coin, fresh);
  }

 private:
  ParamValue pick(const std::string& key, const ParamDomain& domain,
                  double coin, std::size_t fresh) const {
    auto it = parent_.find(key);
    if (coin >= rate_ && it != parent_.end() && domain.contains(it->second)) {
      return it->second;
    }
    return domain.at(fresh);
  }

  std::map<std::string, ParamValue> parent_;
  double rate_;
  std::mt19937_64& rng_;
};

std::shared_ptr<const Estimator> make_estimator(const CriterionDef& def,
                                                const StudyConfig& config,
                                                const StudySetup& setup) {
  if (def.estimator == "params") return std::make_shared<ParamCountEstimator>();
  if (def.estimator == "flops") return std::make_shared<FlopsEstimator>();
  if (def.estimator == "memory") return std::make_shared<MemoryEstimator>();
  if (def.estimator == "latency") {
    if (config.hardware_in_loop) {
      return std::make_shared<BenchmarkLatencyEstimator>();
    }
    return std::make_shared<LatencyEstimator>();
  }
  if (def.estimator == "accuracy") return setup.proxy;
  throw SchemaError("unknown estimator '" + def.estimator + "'");
}

nlohmann::json value_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

ParamValue value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw SchemaError("trace value must be a scalar");
}

TrialStatus status_from_string(const std::string& s) {
  if (s == "complete") return TrialStatus::kComplete;
  if (s == "pruned") return TrialStatus::kPruned;
  if (s == "failed") return TrialStatus::kFailed;
  throw SchemaError("unknown trial status '" + s + "'");
}

struct TrialContext {
  const SearchSpaceSpec& space;
  const StudyConfig& config;
  const StudySetup& setup;
  const Registry& registry;
  const std::optional<Tensor>& signal;
};

TrialRecord evaluate(const TrialContext& tc, std::size_t id,
                     std::uint64_t seed, ArchitectureIR ir) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.id = id;
  rec.seed = seed;
  rec.trace = ir.trace;
  auto prune = [&rec](std::string why) {
    rec.status = TrialStatus::kPruned;
    rec.violated = std::move(why);
  };
  try {
    std::optional<TensorShape> input;
    try {
      input = model_input_shape(tc.space, ir);
    } catch (const GeometryError&) {
      prune("preprocessing_geometry");
    }
    std::optional<ModelGraph> graph;
    if (input) {
      try {
        graph = build_candidate(tc.space, ir, tc.registry,
                                tc.setup.capabilities ? &*tc.setup.capabilities
                                                      : nullptr);
      } catch (const ShapeError&) {
        prune("shape");
      }
    }
    if (graph) {
      rec.input_shape = input->extents();
      std::vector<Tensor> windows;
      if (tc.signal) {
        windows = ir.preproc ? apply_preproc(*ir.preproc, *tc.signal)
                             : std::vector<Tensor>{*tc.signal};
        for (const auto& w : windows) {
          if (w.shape != rec.input_shape) {
            throw ShapeMismatch("pre-processed window does not match the "
                                "model input " + input->to_string());
          }
        }
      }
      rec.window_count = windows.size();
      EvaluationContext ctx{*graph, &ir, tc.config.device, seed, windows};
      TrialOutcome out = evaluate_trial(ctx, *tc.setup.criteria);
      rec.status = out.status;
      rec.metrics = std::move(out.metrics);
      rec.score = out.score;
      rec.violated = std::move(out.violated);
      rec.error = std::move(out.error);
    }
  } catch (const std::exception& e) {
    rec.status = TrialStatus::kFailed;
    rec.error = e.what();
  }
  rec.wall_time_s = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  return rec;
}

// Indices of `history` ordered best first (ties -> lowest id).
std::vector<std::size_t> ranking(const std::vector<TrialRecord>& history) {
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return history[a].selection_score() > history[b].selection_score();
  });
  return order;
}

}  // namespace

void StudyConfig::validate() const {
  if (budget < 1) throw SchemaError("budget must be at least 1");
  if (parallelism < 1) throw SchemaError("parallelism must be at least 1");
  if (evolution.population < 1 || evolution.offspring < 1) {
    throw SchemaError("population and offspring must be at least 1");
  }
  if (!(evolution.mutation_rate > 0.0 && evolution.mutation_rate <= 1.0)) {
    throw SchemaError("mutation_rate must lie in (0, 1]");
  }
  if (!(evolution.elite_fraction > 0.0 && evolution.elite_fraction <= 1.0)) {
    throw SchemaError("elite_fraction must lie in (0, 1]");
  }
  if (!(proxy_noise >= 0.0 && proxy_noise < 1.0)) {
    throw SchemaError("proxy_noise must lie in [0, 1)");
  }
  if (criteria.empty()) throw SchemaError("a study needs criteria");
  for (const auto& c : criteria) {
    if (!(c.bounds.lo < c.bounds.hi)) {
      throw SchemaError("criterion '" + c.estimator +
                        "': bounds must satisfy lo < hi");
    }
  }
  device.validate();
}

double TrialRecord::selection_score() const {
  if (status == TrialStatus::kComplete && score) return *score;
  return -std::numeric_limits<double>::infinity();
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json doc;
  doc["id"] = r.id;
  doc["seed"] = r.seed;
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& [key, value] : r.trace) {
    trace.push_back(nlohmann::json::array({key, value_json(value)}));
  }
  doc["trace"] = std::move(trace);
  doc["status"] = to_string(r.status);
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& m : r.metrics) {
    metrics.push_back({{"name", m.name},
                       {"value", m.value},
                       {"units", m.units},
                       {"direction", m.direction == Direction::kMaximize
                                         ? "maximize"
                                         : "minimize"}});
  }
  doc["metrics"] = std::move(metrics);
  doc["score"] = r.score ? nlohmann::json(*r.score) : nlohmann::json();
  if (!r.violated.empty()) doc["violated"] = r.violated;
  if (!r.error.empty()) doc["error"] = r.error;
  doc["input_shape"] = r.input_shape;
  doc["window_count"] = r.window_count;
  return doc;
}

TrialRecord trial_from_json(const nlohmann::json& doc) {
  try {
    TrialRecord r;
    r.id = doc.at("id").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& entry : doc.at("trace")) {
      r.trace.emplace_back(entry.at(0).get<std::string>(),
                           value_from_json(entry.at(1)));
    }
    r.status = status_from_string(doc.at("status").get<std::string>());
    for (const auto& m : doc.at("metrics")) {
      r.metrics.push_back({m.at("name").get<std::string>(),
                           m.at("value").get<double>(),
                           m.at("direction").get<std::string>() == "maximize"
                               ? Direction::kMaximize
                               : Direction::kMinimize,
                           m.at("units").get<std::string>()});
    }
    if (!doc.at("score").is_null()) r.score = doc.at("score").get<double>();
    r.violated = doc.value("violated", "");
    r.error = doc.value("error", "");
    r.input_shape = doc.at("input_shape").get<std::vector<std::int64_t>>();
    r.window_count = doc.at("window_count").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed trial record: ") + e.what());
  }
}

void write_history(std::ostream& out, const std::vector<TrialRecord>& history) {
  for (const auto& r : history) out << to_json(r).dump() << '\n';
}

std::vector<TrialRecord> read_history(std::istream& in) {
  std::vector<TrialRecord> history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SyntaxError("history line " + std::to_string(history.size() + 1) +
                        ": " + e.what());
    }
    history.push_back(trial_from_json(doc));
  }
  return history;
}

Tensor synthetic_signal(const std::vector<std::int64_t>& shape,
                        std::uint64_t seed) {
  const TensorShape s = TensorShape::from_extents(shape);
  Tensor t = Tensor::of(s);
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<float> noise(-0.1f, 0.1f);
  const std::int64_t channels = s.channels();
  const std::int64_t length = s.length();
  for (std::int64_t c = 0; c < channels; ++c) {
    for (std::int64_t i = 0; i < length; ++i) {
      // 40-sample bursts every 200 samples, offset per channel.
      const bool burst = (i + 13 * c) % 200 >= 160;
      t.values[static_cast<std::size_t>(c * length + i)] =
          noise(rng) + (burst ? 1.0f : 0.0f);
    }
  }
  return t;
}

std::uint64_t trial_seed(std::uint64_t study_seed, std::size_t trial_id) {
  return splitmix64(study_seed ^ splitmix64(trial_id + 1));
}

SamplingTrace mutate(const SamplingTrace& parent, const SearchSpaceSpec& spec,
                     double rate, std::mt19937_64& rng,
                     const Registry& registry) {
  MutationSource source(parent, rate, rng);
  return sample_architecture(spec, source, registry).trace;
}

StudySetup prepare_study(const SearchSpaceSpec& spec, const StudyConfig& config,
                         const Registry& registry) {
  config.validate();
  StudySetup setup;
  setup.space = spec;
  if (!config.backend.empty()) {
    setup.capabilities = reflect(config.backend, registry);
    setup.space = restrict_to_capabilities(spec, *setup.capabilities, registry);
  }
  setup.proxy = SyntheticProxyEstimator::planted_in(
      setup.space, config.proxy_seed, config.proxy_noise, registry);
  std::vector<OptimizationCriteria> criteria;
  for (const auto& def : config.criteria) {
    OptimizationCriteria c;
    c.estimator = make_estimator(def, config, setup);
    c.kind = def.kind;
    c.weight = def.weight;
    c.threshold = def.threshold;
    c.normalizer = def.bounds;
    criteria.push_back(std::move(c));
  }
  setup.criteria = std::make_unique<CriteriaSet>(std::move(criteria));
  return setup;
}

std::vector<TrialRecord> run_trials(const SearchSpaceSpec& spec,
                                    const StudyConfig& config,
                                    const Registry& registry) {
  const StudySetup setup = prepare_study(spec, config, registry);
  std::optional<Tensor> signal;
  if (config.signal_seed) {
    signal = synthetic_signal(setup.space.input_shape, *config.signal_seed);
  }
  const TrialContext tc{setup.space, config, setup, registry, signal};
  std::vector<TrialRecord> history(config.budget);

  // Trials [begin, end) form one batch; make_ir depends only on results
  // of earlier batches, so any thread count yields the same history.
  auto run_batch = [&](std::size_t begin, std::size_t end, auto make_ir) {
    const auto n = static_cast<std::int64_t>(end - begin);
#pragma omp parallel for schedule(dynamic) num_threads(config.parallelism)
    for (std::int64_t k = 0; k < n; ++k) {
      const std::size_t id = begin + static_cast<std::size_t>(k);
      const std::uint64_t seed = trial_seed(config.seed, id);
      try {
        history[id] = evaluate(tc, id, seed, make_ir(id, seed));
      } catch (const std::exception& e) {
        TrialRecord failed;
        failed.id = id;
        failed.seed = seed;
        failed.status = TrialStatus::kFailed;
        failed.error = e.what();
        history[id] = std::move(failed);
      }
    }
  };
  auto random_ir = [&](std::size_t, std::uint64_t seed) {
    RandomTrialSource source(seed);
    return sample_architecture(setup.space, source, registry);
  };

  if (config.sampler == SamplerKind::kRandom) {
    run_batch(0, config.budget, random_ir);
    return history;
  }

  const EvolutionConfig& evo = config.evolution;
  std::size_t done = std::min(evo.population, config.budget);
  run_batch(0, done, random_ir);
  while (done < config.budget) {
    const std::size_t end = std::min(done + evo.offspring, config.budget);
    // (mu + lambda): survivors are the best mu of everything so far.
    const std::vector<TrialRecord> seen(history.begin(), history.begin() + done);
    std::vector<std::size_t> order = ranking(seen);
    order.resize(std::min(order.size(), evo.population));
    const auto elite = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(evo.elite_fraction *
                                              static_cast<double>(order.size()))));
    order.resize(std::min(order.size(), elite));
    auto child_ir = [&](std::size_t, std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      const std::size_t pick =
          std::uniform_int_distribution<std::size_t>(0, order.size() - 1)(rng);
      const TrialRecord& parent = history[order[pick]];
      const SamplingTrace child = mutate(parent.trace, setup.space,
                                         evo.mutation_rate, rng, registry);
      return replay_architecture(setup.space, child, registry);
    };
    run_batch(done, end, child_ir);
    done = end;
  }
  return history;
}

std::optional<std::size_t> best_trial(const std::vector<TrialRecord>& history) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const TrialRecord& r = history[i];
    if (r.status != TrialStatus::kComplete || !r.score) continue;
    if (!best || r.selection_score() > history[*best].selection_score() ||
        (r.selection_score() == history[*best].selection_score() &&
         r.id < history[*best].id)) {
      best = i;
    }
  }
  return best;
}

StudyResult run_study(const SearchSpaceSpec& spec, const StudyConfig& config,
                      const Registry& registry) {
  std::vector<TrialRecord> history = run_trials(spec, config, registry);
  const auto best = best_trial(history);
  if (!best) {
    std::map<std::string, int> reasons;
    for (const auto& r : history) {
      ++reasons[r.status == TrialStatus::kPruned ? "pruned: " + r.violated
                                                 : "failed"];
    }
    std::string detail;
    for (const auto& [why, n] : reasons) {
      detail += (detail.empty() ? "" : ", ") + std::to_string(n) + " " + why;
    }
    throw NoCompleteTrialError("no trial completed out of " +
                               std::to_string(history.size()) + " (" + detail +
                               ")");
  }
  return {history[*best], std::move(history)};
}

ModelGraph rebuild_trial_graph(const SearchSpaceSpec& space,
                               const TrialRecord& record,
                               const Registry& registry,
                               const CapabilitySet* capabilities) {
  const ArchitectureIR ir = replay_architecture(space, record.trace, registry);
  return build_candidate(space, ir, registry, capabilities);
}

}  // namespace nasx
