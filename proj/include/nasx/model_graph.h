#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nasx/architecture.h"
#include "nasx/capability.h"
#include "nasx/registry.h"
#include "nasx/tensor_shape.h"

namespace nasx {

// Shape-checked chain of layers. Immutable once created.
class ModelGraph {
 public:
  // Throws ShapeError unless every layer's input equals the previous
  // output, the first input equals `input` and the last output `output`.
  static ModelGraph create(TensorShape input, std::vector<LayerConfig> layers,
                           TensorShape output);

  const TensorShape& input_shape() const { return input_; }
  const TensorShape& output_shape() const { return output_; }
  const std::vector<LayerConfig>& layers() const { return layers_; }
  std::size_t size() const { return layers_.size(); }

  std::int64_t parameter_count() const;
  std::size_t adapter_count() const;

  bool operator==(const ModelGraph&) const = default;

 private:
  ModelGraph() = default;

  TensorShape input_;
  TensorShape output_;
  std::vector<LayerConfig> layers_;
};

// Builds the graph for one IR, splicing transition adapters between
// mismatched tensor kinds and making sure the network ends in a
// head-capable layer that produces `output`.
ModelGraph build_model(const ArchitectureIR& ir, const TensorShape& input,
                       const TensorShape& output,
                       const Registry& registry = default_registry(),
                       const CapabilitySet* capabilities = nullptr);

// Model input shape for an IR drawn from `spec`: the raw input, or the
// pre-processing output when the IR carries a pipeline.
TensorShape model_input_shape(const SearchSpaceSpec& spec,
                              const ArchitectureIR& ir);

// build_model with shapes taken from the spec.
ModelGraph build_candidate(const SearchSpaceSpec& spec,
                           const ArchitectureIR& ir,
                           const Registry& registry = default_registry(),
                           const CapabilitySet* capabilities = nullptr);

struct LayerSummary {
  std::size_t index = 0;
  std::string op;
  std::string params;
  std::string input;
  std::string output;
  std::int64_t parameters = 0;
  std::int64_t flops = 0;
  bool synthetic = false;
};

struct GraphSummary {
  std::vector<LayerSummary> layers;
  std::int64_t total_parameters = 0;
  std::int64_t total_flops = 0;

  // Layer rows followed by one totals row.
  std::size_t row_count() const { return layers.size() + 1; }
  std::string to_table() const;
};

GraphSummary describe(const ModelGraph& graph,
                      const Registry& registry = default_registry());

}  // namespace nasx
