#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nasx/param.h"
#include "nasx/tensor_shape.h"

namespace nasx {

// Declared (shape-only) parameter tensor of a layer.
struct ParamTensorSpec {
  std::string name;  // "weight" or "bias"
  std::vector<std::int64_t> shape;
  std::int64_t fan_in = 1;

  bool operator==(const ParamTensorSpec&) const = default;
};

// A concrete layer: resolved scalars plus the tensor shapes around it.
struct LayerConfig {
  std::string op;
  ParamMap params;
  TensorShape input;
  TensorShape output;
  std::vector<ParamTensorSpec> tensors;
  bool synthetic = false;  // inserted adapter or automatic head

  std::int64_t parameter_count() const;

  bool operator==(const LayerConfig&) const = default;
};

// Extension point for new operations. An implementation declares its
// parameters, how its output shape follows from its input, and how it is
// built both in the middle of a network and as the final layer.
class LayerBuilder {
 public:
  virtual ~LayerBuilder() = default;

  virtual std::vector<ParamSpec> params() const = 0;

  // Tensor kind the op consumes. std::nullopt: any kind, passed through.
  virtual std::optional<TensorKind> input_kind() const = 0;

  // Only head-capable ops may terminate a network.
  virtual bool head_capable() const { return false; }

  // Throws ShapeError when the input geometry cannot be consumed.
  virtual TensorShape output_shape(const TensorShape& input,
                                   const ParamMap& params) const = 0;

  virtual LayerConfig build_layer(const TensorShape& input,
                                  const ParamMap& params) const = 0;

  // Builds the layer so that it produces exactly `output`. The default
  // accepts only ops whose regular output already matches.
  virtual LayerConfig get_last_layer(const TensorShape& input,
                                     const ParamMap& params,
                                     const TensorShape& output) const;

  // Multiply-accumulate count of one forward pass.
  virtual std::int64_t macs(const LayerConfig&) const { return 0; }
};

struct TransitionEntry {
  TensorKind from = TensorKind::kChannelled;
  TensorKind to = TensorKind::kFlat;
  // Adapter layer for a given input; its output shape has kind `to`.
  std::function<LayerConfig(const TensorShape&)> adapt;
};

// Layer and transition registries. Populated up front, then shared
// read-only (copy it to extend a frozen instance).
class Registry {
 public:
  Registry() = default;

  // Built-in set: linear, conv1d, maxpool, identity, relu, flatten, plus
  // the channelled -> flat flatten transition.
  static Registry with_builtins();

  // Throws DuplicateError on a name collision.
  void register_layer(std::string op_name,
                      std::shared_ptr<const LayerBuilder> builder);
  void register_transition(TransitionEntry entry);

  template <typename Builder, typename... Args>
  void register_layer_as(std::string op_name, Args&&... args) {
    register_layer(std::move(op_name),
                   std::make_shared<Builder>(std::forward<Args>(args)...));
  }

  bool has_layer(std::string_view op_name) const;
  const LayerBuilder* find_layer(std::string_view op_name) const;
  // Throws CapabilityError for unknown ops.
  const LayerBuilder& layer(std::string_view op_name) const;
  std::vector<std::string> layer_names() const;

  // std::nullopt for matching kinds (identity); the adapter otherwise.
  // Throws NoTransitionError when no adapter is registered for the pair.
  std::optional<TransitionEntry> resolve_transition(TensorKind from,
                                                    TensorKind to) const;

  // Fills optional parameters that carry a registered default.
  ParamMap with_defaults(std::string_view op_name, ParamMap params) const;

 private:
  std::map<std::string, std::shared_ptr<const LayerBuilder>, std::less<>>
      layers_;
  std::map<std::pair<TensorKind, TensorKind>, TransitionEntry> transitions_;
};

// Process-wide registry holding the built-ins.
const Registry& default_registry();

}  // namespace nasx
