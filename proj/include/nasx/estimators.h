#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nasx/architecture.h"
#include "nasx/device.h"
#include "nasx/model_graph.h"
#include "nasx/tensor.h"

namespace nasx {

enum class Direction { kMinimize, kMaximize };

struct MetricValue {
  std::string name;
  double value = 0.0;
  Direction direction = Direction::kMinimize;
  std::string units;
};

struct EvaluationContext {
  const ModelGraph& graph;
  const ArchitectureIR* ir = nullptr;
  DeviceModel device;
  std::uint64_t seed = 0;
  // Pre-processed windows fed to the model, when a signal is available.
  std::span<const Tensor> windows;
};

class Estimator {
 public:
  virtual ~Estimator() = default;
  virtual std::string name() const = 0;
  virtual Direction direction() const = 0;
  virtual std::string units() const = 0;
  virtual double estimate(const EvaluationContext& ctx) const = 0;

  // estimate() wrapped into a MetricValue; non-finite results raise
  // EstimatorFailure.
  MetricValue evaluate(const EvaluationContext& ctx) const;
};

// Analytic cost metrics.
MetricValue estimate_params(const ModelGraph& graph,
                            const Registry& registry = default_registry());
MetricValue estimate_flops(const ModelGraph& graph,
                           const Registry& registry = default_registry());
MetricValue estimate_memory(const ModelGraph& graph,
                            const Registry& registry = default_registry());
MetricValue estimate_latency(const ModelGraph& graph,
                             const DeviceModel& device,
                             const Registry& registry = default_registry());

std::int64_t layer_flops(const LayerConfig& layer,
                         const Registry& registry = default_registry());

class ParamCountEstimator final : public Estimator {
 public:
  std::string name() const override { return "params"; }
  Direction direction() const override { return Direction::kMinimize; }
  std::string units() const override { return "count"; }
  double estimate(const EvaluationContext& ctx) const override;
};

class FlopsEstimator final : public Estimator {
 public:
  std::string name() const override { return "flops"; }
  Direction direction() const override { return Direction::kMinimize; }
  std::string units() const override { return "FLOP"; }
  double estimate(const EvaluationContext& ctx) const override;
};

class MemoryEstimator final : public Estimator {
 public:
  std::string name() const override { return "memory"; }
  Direction direction() const override { return Direction::kMinimize; }
  std::string units() const override { return "bytes"; }
  double estimate(const EvaluationContext& ctx) const override;
};

class LatencyEstimator final : public Estimator {
 public:
  std::string name() const override { return "latency"; }
  Direction direction() const override { return Direction::kMinimize; }
  std::string units() const override { return "s"; }
  double estimate(const EvaluationContext& ctx) const override;
};

// Stand-in for a trained accuracy: Jaccard similarity between the
// candidate's decision set and a planted optimum, blended with a seeded
// structural hash. The planted optimum scores exactly 1.
class SyntheticProxyEstimator final : public Estimator {
 public:
  SyntheticProxyEstimator(SamplingTrace planted, std::uint64_t seed,
                          double noise_weight = 0.1);

  // Plants the optimum at the IR sampled from `spec` with `planted_seed`.
  static std::shared_ptr<SyntheticProxyEstimator> planted_in(
      const SearchSpaceSpec& spec, std::uint64_t planted_seed,
      double noise_weight = 0.1,
      const Registry& registry = default_registry());

  std::string name() const override { return "accuracy"; }
  Direction direction() const override { return Direction::kMaximize; }
  std::string units() const override { return "proxy"; }
  double estimate(const EvaluationContext& ctx) const override;

  double score(const ArchitectureIR& ir) const;
  const SamplingTrace& planted() const { return planted_; }

 private:
  SamplingTrace planted_;
  std::uint64_t seed_;
  double noise_weight_;
};

enum class CriterionKind { kObjective, kSoftConstraint, kHardConstraint };

// Min-max map of a raw value onto [0, 1] (clamped).
struct Normalizer {
  double lo = 0.0;
  double hi = 1.0;
  double apply(double raw) const;
};

struct OptimizationCriteria {
  std::shared_ptr<const Estimator> estimator;
  CriterionKind kind = CriterionKind::kObjective;
  std::optional<double> threshold;
  std::optional<double> weight;
  Normalizer normalizer;

  bool violated_by(double raw) const;  // constraints only
};

// One term of the scalarized score. For soft constraints `normalized` is
// the normalized excess past the threshold.
struct ScoreTerm {
  std::string name;
  double normalized = 0.0;
  std::optional<double> weight;
  Direction direction = Direction::kMaximize;
  CriterionKind kind = CriterionKind::kObjective;
};

using Aggregator = std::function<double(std::span<const ScoreTerm>)>;

// Default: sum of w * v over objectives (minimize terms reflected to 1 - v)
// minus w * excess over soft constraints. A non-empty `aggregator`
// replaces the default wholesale. Throws WeightError when a weighted term
// has no weight.
double scalarize(std::span<const ScoreTerm> terms,
                 const Aggregator& aggregator = {});

class CriteriaSet {
 public:
  // Throws WeightError / SchemaError on an invalid criteria list.
  explicit CriteriaSet(std::vector<OptimizationCriteria> criteria,
                       Aggregator aggregator = {});

  const std::vector<OptimizationCriteria>& criteria() const {
    return criteria_;
  }
  const Aggregator& aggregator() const { return aggregator_; }

  // Hard constraints first, then the rest, each in declaration order.
  std::vector<const OptimizationCriteria*> evaluation_order() const;

 private:
  std::vector<OptimizationCriteria> criteria_;
  Aggregator aggregator_;
};

enum class TrialStatus { kComplete, kPruned, kFailed };

std::string to_string(TrialStatus status);

struct TrialOutcome {
  TrialStatus status = TrialStatus::kComplete;
  std::vector<MetricValue> metrics;
  std::optional<double> score;
  std::string violated;  // pruned: constraint (or stage) name
  std::string error;     // failed: estimator message
  std::map<std::string, int> invocations;  // estimator name -> calls
};

// Hard constraints run first; a violation returns Pruned before any
// objective or soft-constraint estimator is called.
TrialOutcome evaluate_trial(const EvaluationContext& ctx,
                            const CriteriaSet& criteria);

}  // namespace nasx
