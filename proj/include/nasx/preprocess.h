#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "nasx/param.h"
#include "nasx/tensor.h"
#include "nasx/tensor_shape.h"

namespace nasx {

// Per-op parameter domains, keyed op name -> parameter name.
using OpParamDomains = std::map<std::string, std::map<std::string, ParamDomain>>;

// One slot of the searchable pre-processing pipeline.
struct PreprocStageSpec {
  std::string name;
  std::vector<std::string> op_candidates;
  OpParamDomains params;

  bool operator==(const PreprocStageSpec&) const = default;
};

struct PreprocSpaceSpec {
  std::vector<PreprocStageSpec> stages;

  bool operator==(const PreprocSpaceSpec&) const = default;
};

struct ResolvedStage {
  std::string op;
  ParamMap params;  // defaults filled

  bool operator==(const ResolvedStage&) const = default;
};

struct ResolvedPreproc {
  std::vector<ResolvedStage> stages;

  bool operator==(const ResolvedPreproc&) const = default;
};

// filter, downsample, window_sequential, window_event, normalize, identity.
bool is_preproc_op(std::string_view op);
bool is_window_op(std::string_view op);
const std::vector<ParamSpec>& preproc_op_params(std::string_view op);
const std::vector<std::string>& preproc_op_names();

// Checks string-valued parameters (filter kind, normalize method).
// Throws ParamError.
void check_preproc_value(std::string_view op, const std::string& param,
                         const ParamValue& value);

ParamMap preproc_with_defaults(std::string_view op, ParamMap params);

// Shape of the tensors handed to the model: a single tensor for
// non-windowing pipelines, the per-window shape otherwise. Throws
// GeometryError when a stage empties the signal.
TensorShape preproc_output_shape(const ResolvedPreproc& pipeline,
                                 const TensorShape& input);

// Runs the pipeline on a [channels, length] signal. Windowing stages turn
// one tensor into many; later stages apply to each window.
std::vector<Tensor> apply_preproc(const ResolvedPreproc& pipeline,
                                  const Tensor& signal);

}  // namespace nasx
