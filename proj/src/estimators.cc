#include "nasx/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nasx/errors.h"

namespace nasx {
namespace {

std::uint64_t fnv1a(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

MetricValue Estimator::evaluate(const EvaluationContext& ctx) const {
  const double v = estimate(ctx);
  if (!std::isfinite(v)) {
    throw EstimatorFailure("estimator '" + name() + "' returned a non-finite value");
  }
  return MetricValue{name(), v, direction(), units()};
}

std::int64_t layer_flops(const LayerConfig& layer, const Registry& registry) {
  return 2 * registry.layer(layer.op).macs(layer);
}

MetricValue estimate_params(const ModelGraph& graph, const Registry&) {
  return {"params", static_cast<double>(graph.parameter_count()),
          Direction::kMinimize, "count"};
}

MetricValue estimate_flops(const ModelGraph& graph, const Registry& registry) {
  std::int64_t flops = 0;
  for (const auto& l : graph.layers()) flops += layer_flops(l, registry);
  return {"flops", static_cast<double>(flops), Direction::kMinimize, "FLOP"};
}

MetricValue estimate_memory(const ModelGraph& graph, const Registry&) {
  std::int64_t peak = 0;
  for (const auto& l : graph.layers()) {
    peak = std::max(peak, l.input.elements() + l.output.elements());
  }
  const std::int64_t bytes = 4 * (graph.parameter_count() + peak);
  return {"memory", static_cast<double>(bytes), Direction::kMinimize, "bytes"};
}

MetricValue estimate_latency(const ModelGraph& graph, const DeviceModel& device,
                             const Registry& registry) {
  double seconds = 0.0;
  for (const auto& l : graph.layers()) {
    seconds += static_cast<double>(layer_flops(l, registry)) / device.throughput +
               device.layer_overhead;
  }
  return {"latency", seconds, Direction::kMinimize, "s"};
}

double ParamCountEstimator::estimate(const EvaluationContext& ctx) const {
  return estimate_params(ctx.graph).value;
}

double FlopsEstimator::estimate(const EvaluationContext& ctx) const {
  return estimate_flops(ctx.graph).value;
}

double MemoryEstimator::estimate(const EvaluationContext& ctx) const {
  return estimate_memory(ctx.graph).value;
}

double LatencyEstimator::estimate(const EvaluationContext& ctx) const {
  return estimate_latency(ctx.graph, ctx.device).value;
}

SyntheticProxyEstimator::SyntheticProxyEstimator(SamplingTrace planted,
                                                 std::uint64_t seed,
                                                 double noise_weight)
    : planted_(std::move(planted)), seed_(seed), noise_weight_(noise_weight) {
  if (noise_weight_ < 0.0 || noise_weight_ >= 1.0) {
    throw SchemaError("proxy noise weight must be in [0, 1)");
  }
}

std::shared_ptr<SyntheticProxyEstimator> SyntheticProxyEstimator::planted_in(
    const SearchSpaceSpec& spec, std::uint64_t planted_seed,
    double noise_weight, const Registry& registry) {
  RandomTrialSource source(planted_seed);
  ArchitectureIR optimum = sample_architecture(spec, source, registry);
  return std::make_shared<SyntheticProxyEstimator>(std::move(optimum.trace),
                                                   planted_seed, noise_weight);
}

double SyntheticProxyEstimator::score(const ArchitectureIR& ir) const {
  std::set<std::string> a, b;
  for (const auto& [k, v] : planted_) a.insert(k + "=" + to_string(v));
  for (const auto& [k, v] : ir.trace) b.insert(k + "=" + to_string(v));
  if (a == b) return 1.0;
  std::size_t common = 0;
  for (const auto& x : b) common += a.count(x);
  const std::size_t all = a.size() + b.size() - common;
  const double jaccard = all == 0 ? 1.0 : static_cast<double>(common) / all;
  const double noise =
      static_cast<double>(fnv1a(describe_ir(ir), seed_) >> 11) * 0x1.0p-53;
  return (1.0 - noise_weight_) * jaccard + noise_weight_ * noise;
}

double SyntheticProxyEstimator::estimate(const EvaluationContext& ctx) const {
  if (!ctx.ir) {
    throw EstimatorFailure("accuracy proxy needs the architecture IR");
  }
  return score(*ctx.ir);
}

double Normalizer::apply(double raw) const {
  if (!(hi > lo)) return 0.0;
  return std::clamp((raw - lo) / (hi - lo), 0.0, 1.0);
}

bool OptimizationCriteria::violated_by(double raw) const {
  if (!threshold) return false;
  return estimator->direction() == Direction::kMinimize ? raw > *threshold
                                                        : raw < *threshold;
}

double scalarize(std::span<const ScoreTerm> terms, const Aggregator& aggregator) {
  for (const auto& t : terms) {
    if (t.kind != CriterionKind::kHardConstraint && !t.weight) {
      throw WeightError("criterion '" + t.name + "' has no weight");
    }
  }
  if (aggregator) return aggregator(terms);
  double score = 0.0;
  for (const auto& t : terms) {
    switch (t.kind) {
      case CriterionKind::kObjective:
        score += *t.weight * (t.direction == Direction::kMinimize
                                  ? 1.0 - t.normalized
                                  : t.normalized);
        break;
      case CriterionKind::kSoftConstraint:
        score -= *t.weight * std::max(0.0, t.normalized);
        break;
      case CriterionKind::kHardConstraint:
        break;
    }
  }
  return score;
}

CriteriaSet::CriteriaSet(std::vector<OptimizationCriteria> criteria,
                         Aggregator aggregator)
    : criteria_(std::move(criteria)), aggregator_(std::move(aggregator)) {
  bool has_objective = false;
  for (const auto& c : criteria_) {
    if (!c.estimator) throw SchemaError("criterion without an estimator");
    const std::string name = c.estimator->name();
    switch (c.kind) {
      case CriterionKind::kObjective:
        has_objective = true;
        if (!c.weight) throw WeightError("objective '" + name + "' has no weight");
        break;
      case CriterionKind::kSoftConstraint:
        if (!c.weight) {
          throw WeightError("soft constraint '" + name + "' has no weight");
        }
        if (!c.threshold) {
          throw SchemaError("soft constraint '" + name + "' has no threshold");
        }
        break;
      case CriterionKind::kHardConstraint:
        if (c.weight) {
          throw WeightError("hard constraint '" + name + "' must not carry a weight");
        }
        if (!c.threshold) {
          throw SchemaError("hard constraint '" + name + "' has no threshold");
        }
        break;
    }
    if (c.weight && !(*c.weight > 0.0)) {
      throw WeightError("weight of '" + name + "' must be positive");
    }
    if (!(c.normalizer.hi > c.normalizer.lo)) {
      throw SchemaError("bounds of '" + name + "' must satisfy lo < hi");
    }
  }
  if (!has_objective) throw SchemaError("criteria need at least one objective");
}

std::vector<const OptimizationCriteria*> CriteriaSet::evaluation_order() const {
  std::vector<const OptimizationCriteria*> order;
  for (const auto& c : criteria_) {
    if (c.kind == CriterionKind::kHardConstraint) order.push_back(&c);
  }
  for (const auto& c : criteria_) {
    if (c.kind != CriterionKind::kHardConstraint) order.push_back(&c);
  }
  return order;
}

std::string to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::kComplete:
      return "complete";
    case TrialStatus::kPruned:
      return "pruned";
    case TrialStatus::kFailed:
      return "failed";
  }
  return "?";
}

TrialOutcome evaluate_trial(const EvaluationContext& ctx,
                            const CriteriaSet& criteria) {
  TrialOutcome outcome;
  std::vector<ScoreTerm> terms;
  for (const OptimizationCriteria* c : criteria.evaluation_order()) {
    const std::string name = c->estimator->name();
    MetricValue metric;
    try {
      ++outcome.invocations[name];
      metric = c->estimator->evaluate(ctx);
    } catch (const CapacityError& e) {
      outcome.status = TrialStatus::kPruned;
      outcome.violated = "device_capacity";
      outcome.error = e.what();
      return outcome;
    } catch (const std::exception& e) {
      outcome.status = TrialStatus::kFailed;
      outcome.error = EstimatorFailure("estimator '" + name + "' failed: " +
                                       e.what())
                          .what();
      return outcome;
    }
    outcome.metrics.push_back(metric);
    if (c->kind == CriterionKind::kHardConstraint) {
      if (c->violated_by(metric.value)) {
        outcome.status = TrialStatus::kPruned;
        outcome.violated = name;
        return outcome;
      }
      continue;
    }
    ScoreTerm term{name, 0.0, c->weight, metric.direction, c->kind};
    if (c->kind == CriterionKind::kObjective) {
      term.normalized = c->normalizer.apply(metric.value);
    } else {
      const double span = c->normalizer.hi - c->normalizer.lo;
      const double excess = metric.direction == Direction::kMinimize
                                ? metric.value - *c->threshold
                                : *c->threshold - metric.value;
      term.normalized = std::max(0.0, excess / span);
    }
    terms.push_back(term);
  }
  outcome.status = TrialStatus::kComplete;
  outcome.score = scalarize(terms, criteria.aggregator());
  return outcome;
}

}  // namespace nasx
