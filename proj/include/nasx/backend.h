#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "nasx/capability.h"
#include "nasx/device.h"
#include "nasx/estimators.h"
#include "nasx/model_graph.h"
#include "nasx/runtime.h"

namespace nasx {

// Generated files keyed by file name.
struct SourceBundle {
  std::map<std::string, std::string> files;

  // Writes every file into `dir` (created if missing).
  void write_to(const std::string& dir) const;
};

// Emits the body of one layer's computation. `in`/`out` name the float
// buffers; `weight`/`bias` name the static arrays (empty when absent).
struct EmitContext {
  std::size_t index;
  std::string in;
  std::string out;
  std::string weight;
  std::string bias;
};
using LayerEmitter =
    std::function<std::string(const LayerConfig&, const EmitContext&)>;

// Portable C99 generator: model.h, model.c, weights.c, bench_main.c.
// Per-op emitters can be overridden.
class CBackend {
 public:
  CBackend();

  std::string name() const { return "c"; }
  CapabilitySet reflect() const;

  // Replaces (or adds) the emitter for `op`; added ops become part of
  // reflect().
  void override_emitter(std::string op, LayerEmitter emitter);

  // Throws CapabilityError when the graph uses an op without an emitter.
  SourceBundle generate(const ModelGraph& graph,
                        const ParamStore& params) const;

 private:
  std::map<std::string, LayerEmitter> emitters_;
};

// reflect() of the named backend ("c" or "json"). Throws CapabilityError
// for an unknown backend.
CapabilitySet reflect(std::string_view backend,
                      const Registry& registry = default_registry());

SourceBundle generate_c(const ModelGraph& graph, const ParamStore& params);

// Versioned JSON graph IR.
inline constexpr int kGraphFormatVersion = 1;

nlohmann::json export_json(const ModelGraph& graph,
                           const ParamStore* params = nullptr,
                           std::optional<std::uint64_t> init_seed = {});

struct ImportedGraph {
  ModelGraph graph;
  std::optional<ParamStore> params;
  std::optional<std::uint64_t> init_seed;
};

// Throws VersionError for an unknown format_version, SchemaError for a
// malformed document, ShapeError for inconsistent shapes.
ImportedGraph import_json(const nlohmann::json& doc,
                          const Registry& registry = default_registry());

struct Measurement {
  double latency_s = 0.0;
  std::int64_t peak_memory_bytes = 0;
};

// Simulated on-device run: analytic latency scaled by (1 + jitter) with
// jitter in [0, device.jitter] drawn from `seed`. Throws CapacityError
// when the memory estimate exceeds device capacity.
Measurement benchmark(const ModelGraph& graph, const DeviceModel& device,
                      std::uint64_t seed,
                      const Registry& registry = default_registry());

// Latency sourced from benchmark() (hardware-in-the-loop mode).
class BenchmarkLatencyEstimator final : public Estimator {
 public:
  std::string name() const override { return "latency"; }
  Direction direction() const override { return Direction::kMinimize; }
  std::string units() const override { return "s"; }
  double estimate(const EvaluationContext& ctx) const override;
};

// Generator pipeline stages. Each stage consumes the previous one's output.
struct Deployment {
  SourceBundle bundle;
  std::int64_t memory_bytes = 0;
};

class ModelBuilderStage {
 public:
  virtual ~ModelBuilderStage() = default;
  virtual ModelGraph build(const SearchSpaceSpec& spec,
                           const ArchitectureIR& ir) const = 0;
};

class CompilerStage {
 public:
  virtual ~CompilerStage() = default;
  virtual SourceBundle compile(const ModelGraph& graph,
                               const ParamStore& params) const = 0;
};

class HostInterface {
 public:
  virtual ~HostInterface() = default;
  virtual Deployment deploy(const SourceBundle& bundle,
                            const ModelGraph& graph) const = 0;
};

class HardwareManager {
 public:
  virtual ~HardwareManager() = default;
  virtual Measurement run(const Deployment& deployment,
                          const ModelGraph& graph,
                          std::uint64_t seed) const = 0;
};

struct PipelineResult {
  ModelGraph graph;
  SourceBundle bundle;
  Measurement measurement;
};

class GeneratorPipeline {
 public:
  GeneratorPipeline(std::shared_ptr<const ModelBuilderStage> builder,
                    std::shared_ptr<const CompilerStage> compiler,
                    std::shared_ptr<const HostInterface> host,
                    std::shared_ptr<const HardwareManager> hardware);

  // Capability-aware builder, C compiler stage and the simulated device.
  static GeneratorPipeline simulated_c(DeviceModel device,
                                       const Registry& registry =
                                           default_registry());

  PipelineResult run(const SearchSpaceSpec& spec, const ArchitectureIR& ir,
                     std::uint64_t seed) const;

 private:
  std::shared_ptr<const ModelBuilderStage> builder_;
  std::shared_ptr<const CompilerStage> compiler_;
  std::shared_ptr<const HostInterface> host_;
  std::shared_ptr<const HardwareManager> hardware_;
};

}  // namespace nasx
