#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nasx/architecture.h"
#include "nasx/capability.h"
#include "nasx/device.h"
#include "nasx/estimators.h"
#include "nasx/search_space.h"

namespace nasx {

enum class SamplerKind { kRandom, kEvolutionary };

struct EvolutionConfig {
  std::size_t population = 10;   // mu
  std::size_t offspring = 10;    // lambda
  double mutation_rate = 0.2;    // per decision key, (0, 1]
  double elite_fraction = 0.5;   // parents drawn from the best share
};

// One criterion as declared in a study file. `estimator` names a built-in:
// params, flops, memory, latency, accuracy.
struct CriterionDef {
  std::string estimator;
  CriterionKind kind = CriterionKind::kObjective;
  std::optional<double> weight;
  std::optional<double> threshold;
  Normalizer bounds;
};

struct StudyConfig {
  std::size_t budget = 10;
  SamplerKind sampler = SamplerKind::kRandom;
  EvolutionConfig evolution;
  std::uint64_t seed = 0;
  std::vector<CriterionDef> criteria;
  DeviceModel device;
  int parallelism = 1;
  bool hardware_in_loop = false;
  // Backend whose reflect() restricts the space ("" = unrestricted).
  std::string backend;
  // Synthetic accuracy proxy.
  std::uint64_t proxy_seed = 0;
  double proxy_noise = 0.1;
  // When set, a synthetic signal with this seed is pushed through each
  // trial's pre-processing pipeline.
  std::optional<std::uint64_t> signal_seed;

  void validate() const;  // throws SchemaError
};

struct TrialRecord {
  std::size_t id = 0;
  std::uint64_t seed = 0;
  SamplingTrace trace;
  TrialStatus status = TrialStatus::kComplete;
  std::vector<MetricValue> metrics;
  std::optional<double> score;
  std::string violated;
  std::string error;
  std::vector<std::int64_t> input_shape;  // model input (after preproc)
  std::size_t window_count = 0;
  double wall_time_s = 0.0;  // not persisted to history

  // Ranking value: score for complete trials, -inf otherwise.
  double selection_score() const;
};

nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const nlohmann::json& doc);

// JSON-Lines history, one record per line, ordered by trial id.
void write_history(std::ostream& out, const std::vector<TrialRecord>& history);
std::vector<TrialRecord> read_history(std::istream& in);

// Deterministic test signal of the given [channels, length] shape: low-level
// noise with periodic loud bursts, so event windowing has something to find.
Tensor synthetic_signal(const std::vector<std::int64_t>& shape,
                        std::uint64_t seed);

// Per-trial seed derived from (study seed, trial id).
std::uint64_t trial_seed(std::uint64_t study_seed, std::size_t trial_id);

// Trace-level mutation: every decision key is re-drawn with probability
// `rate`; keys introduced by a changed depth are drawn fresh and keys that
// no longer exist are dropped.
SamplingTrace mutate(const SamplingTrace& parent, const SearchSpaceSpec& spec,
                     double rate, std::mt19937_64& rng,
                     const Registry& registry = default_registry());

// Everything a study needs that is derived from its config.
struct StudySetup {
  SearchSpaceSpec space;  // capability-restricted when a backend is bound
  std::optional<CapabilitySet> capabilities;
  std::shared_ptr<SyntheticProxyEstimator> proxy;
  std::unique_ptr<CriteriaSet> criteria;
};

StudySetup prepare_study(const SearchSpaceSpec& spec, const StudyConfig& config,
                         const Registry& registry = default_registry());

struct StudyResult {
  TrialRecord best;
  std::vector<TrialRecord> history;  // ordered by trial id
};

// Runs exactly config.budget trials. Throws NoCompleteTrialError when no
// trial completes.
StudyResult run_study(const SearchSpaceSpec& spec, const StudyConfig& config,
                      const Registry& registry = default_registry());

// Same loop without the NoCompleteTrialError check.
std::vector<TrialRecord> run_trials(const SearchSpaceSpec& spec,
                                    const StudyConfig& config,
                                    const Registry& registry =
                                        default_registry());

// Index of the best complete trial (ties -> lowest id).
std::optional<std::size_t> best_trial(const std::vector<TrialRecord>& history);

// The graph a trial record describes, rebuilt from its trace.
ModelGraph rebuild_trial_graph(const SearchSpaceSpec& space,
                               const TrialRecord& record,
                               const Registry& registry = default_registry(),
                               const CapabilitySet* capabilities = nullptr);

}  // namespace nasx
