#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "nasx/param.h"
#include "nasx/preprocess.h"
#include "nasx/registry.h"

namespace nasx {

using BigCount = boost::multiprecision::cpp_int;

enum class RepeatMode { kRepeatOp, kRepeatParams, kVaryAll, kRepeatBlock };

std::string_view to_string(RepeatMode mode);

struct RepeatSpec {
  RepeatMode mode = RepeatMode::kVaryAll;
  std::optional<ParamDomain> depth;      // absent for repeat_block
  std::optional<std::string> ref_block;  // repeat_block only

  bool operator==(const RepeatSpec&) const = default;
};

struct BlockSpec {
  std::string name;
  // Empty only for repeat_block blocks, which reuse the referenced
  // block's definition.
  std::vector<std::string> op_candidates;
  std::optional<RepeatSpec> repeat;
  OpParamDomains local_params;

  bool operator==(const BlockSpec&) const = default;
};

// Validated in-memory form of a search-space file. Treat as immutable once
// returned by parse_spec; it is shared freely across concurrent trials.
struct SearchSpaceSpec {
  std::vector<std::int64_t> input_shape;
  std::vector<std::int64_t> output_shape;
  std::vector<BlockSpec> sequence;
  OpParamDomains default_op_params;
  std::map<std::string, std::vector<BlockSpec>> composites;
  std::optional<PreprocSpaceSpec> preprocessing;

  bool is_composite(std::string_view op) const;
  const std::vector<BlockSpec>& composite(std::string_view name) const;

  bool operator==(const SearchSpaceSpec&) const = default;
};

// Parses and validates YAML text. Errors carry "line:col" when known.
// Throws SyntaxError, SchemaError, ReferenceError, ParamError.
SearchSpaceSpec parse_spec(std::string_view yaml_text,
                           const Registry& registry = default_registry());
SearchSpaceSpec load_spec(const std::string& path,
                          const Registry& registry = default_registry());

// Re-runs every semantic check on an already-built spec (used after
// programmatic edits such as capability restriction).
void validate_spec(const SearchSpaceSpec& spec, const Registry& registry);

// Canonical YAML: maps sorted by key, lists as written.
std::string to_yaml(const SearchSpaceSpec& spec);

// Parameter domains an op instance actually samples: local block entry
// first, then default_op_params. Ordered by the op's parameter
// declaration. Throws ParamError for an unresolvable mandatory parameter.
std::vector<std::pair<std::string, ParamDomain>> resolve_param_domains(
    const SearchSpaceSpec& spec, const OpParamDomains& local,
    std::string_view op, const std::vector<ParamSpec>& declared);

// Follows repeat_block references to the block whose definition is
// instantiated. `sequence` is the sequence that contains `index`.
const BlockSpec& block_definition(const std::vector<BlockSpec>& sequence,
                                  std::size_t index);

// Exact number of distinct architecture IRs (including pre-processing
// choices) the sampler can emit.
BigCount count_configurations(const SearchSpaceSpec& spec,
                              const Registry& registry = default_registry());

// Configurations below one op choice of block `def` (a composite counts
// its whole sub-sequence), and of a pre-processing stage.
BigCount count_op_configurations(const SearchSpaceSpec& spec,
                                 const BlockSpec& def, const std::string& op,
                                 const Registry& registry = default_registry());
BigCount count_preproc_op_configurations(const SearchSpaceSpec& spec,
                                         const PreprocStageSpec& stage,
                                         const std::string& op);

}  // namespace nasx
