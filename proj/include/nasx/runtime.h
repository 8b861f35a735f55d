#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "nasx/model_graph.h"
#include "nasx/tensor.h"

namespace nasx {

// Parameter tensors per layer index (layers without parameters hold an
// empty map).
struct ParamStore {
  std::vector<std::map<std::string, Tensor>> layers;

  std::int64_t scalar_count() const;
  bool empty() const { return scalar_count() == 0; }

  bool operator==(const ParamStore&) const = default;
};

// Deterministic in (graph, seed): uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
ParamStore init_params(const ModelGraph& graph, std::uint64_t seed);

enum class ExecutionMode { kReference, kParallel };

// Throws ShapeMismatch when `input` does not match the graph input.
Tensor forward(const ModelGraph& graph, const ParamStore& params,
               const Tensor& input,
               ExecutionMode mode = ExecutionMode::kReference);

struct CountedForward {
  Tensor output;
  std::int64_t macs = 0;
  std::int64_t peak_activation_bytes = 0;
};

// Reference forward with an instrumented MAC counter and the peak
// footprint of one input plus one output buffer.
CountedForward forward_counted(const ModelGraph& graph,
                               const ParamStore& params, const Tensor& input);

}  // namespace nasx
