#include <cmath>

#include "nasx/backend.h"
#include "nasx/errors.h"
#include "nasx/seeding.h"

namespace nasx {

void DeviceModel::validate() const {
  if (!(throughput > 0.0) || !std::isfinite(throughput)) {
    throw SchemaError("device throughput must be positive");
  }
  if (!(layer_overhead >= 0.0) || !std::isfinite(layer_overhead)) {
    throw SchemaError("device layer_overhead must be non-negative");
  }
  if (memory_capacity <= 0) {
    throw SchemaError("device memory_capacity must be positive");
  }
  if (!(jitter >= 0.0 && jitter <= 0.1)) {
    throw SchemaError("device jitter must lie in [0, 0.1]");
  }
}

Measurement benchmark(const ModelGraph& graph, const DeviceModel& device,
                      std::uint64_t seed, const Registry& registry) {
  const auto memory =
      static_cast<std::int64_t>(estimate_memory(graph, registry).value);
  if (memory > device.memory_capacity) {
    throw CapacityError("model needs " + std::to_string(memory) +
                        " bytes, device has " +
                        std::to_string(device.memory_capacity));
  }
  const double base = estimate_latency(graph, device, registry).value;
  const double noise = device.jitter * unit_interval(seed);
  return {base * (1.0 + noise), memory};
}

double BenchmarkLatencyEstimator::estimate(const EvaluationContext& ctx) const {
  return benchmark(ctx.graph, ctx.device, ctx.seed).latency_s;
}

namespace {

class CapabilityAwareBuilder final : public ModelBuilderStage {
 public:
  CapabilityAwareBuilder(const Registry& registry, CapabilitySet caps)
      : registry_(registry), caps_(std::move(caps)) {}

  ModelGraph build(const SearchSpaceSpec& spec,
                   const ArchitectureIR& ir) const override {
    return build_candidate(spec, ir, registry_, &caps_);
  }

 private:
  const Registry& registry_;
  CapabilitySet caps_;
};

class CCompiler final : public CompilerStage {
 public:
  SourceBundle compile(const ModelGraph& graph,
                       const ParamStore& params) const override {
    return generate_c(graph, params);
  }
};

class SimulatedHost final : public HostInterface {
 public:
  SimulatedHost(DeviceModel device, const Registry& registry)
      : device_(device), registry_(registry) {}

  Deployment deploy(const SourceBundle& bundle,
                    const ModelGraph& graph) const override {
    const auto memory =
        static_cast<std::int64_t>(estimate_memory(graph, registry_).value);
    if (memory > device_.memory_capacity) {
      throw CapacityError("deployment needs " + std::to_string(memory) +
                          " bytes, device has " +
                          std::to_string(device_.memory_capacity));
    }
    return {bundle, memory};
  }

 private:
  DeviceModel device_;
  const Registry& registry_;
};

class SimulatedHardware final : public HardwareManager {
 public:
  SimulatedHardware(DeviceModel device, const Registry& registry)
      : device_(device), registry_(registry) {}

  Measurement run(const Deployment&, const ModelGraph& graph,
                  std::uint64_t seed) const override {
    return benchmark(graph, device_, seed, registry_);
  }

 private:
  DeviceModel device_;
  const Registry& registry_;
};

}  // namespace

GeneratorPipeline::GeneratorPipeline(
    std::shared_ptr<const ModelBuilderStage> builder,
    std::shared_ptr<const CompilerStage> compiler,
    std::shared_ptr<const HostInterface> host,
    std::shared_ptr<const HardwareManager> hardware)
    : builder_(std::move(builder)),
      compiler_(std::move(compiler)),
      host_(std::move(host)),
      hardware_(std::move(hardware)) {}

GeneratorPipeline GeneratorPipeline::simulated_c(DeviceModel device,
                                                 const Registry& registry) {
  device.validate();
  return GeneratorPipeline(
      std::make_shared<CapabilityAwareBuilder>(registry, reflect("c", registry)),
      std::make_shared<CCompiler>(),
      std::make_shared<SimulatedHost>(device, registry),
      std::make_shared<SimulatedHardware>(device, registry));
}

PipelineResult GeneratorPipeline::run(const SearchSpaceSpec& spec,
                                      const ArchitectureIR& ir,
                                      std::uint64_t seed) const {
  ModelGraph graph = builder_->build(spec, ir);
  const ParamStore params = init_params(graph, seed);
  SourceBundle bundle = compiler_->compile(graph, params);
  const Deployment deployment = host_->deploy(bundle, graph);
  const Measurement m = hardware_->run(deployment, graph, seed);
  return {std::move(graph), std::move(bundle), m};
}

}  // namespace nasx
