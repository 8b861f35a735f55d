#include <string>

#include "nasx/errors.h"
#include "nasx/registry.h"

namespace nasx {
namespace {

std::int64_t int_param(const ParamMap& params, const std::string& op,
                       const std::string& name) {
  auto it = params.find(name);
  if (it == params.end()) {
    throw ResolutionError(op + ": parameter '" + name + "' is unresolved");
  }
  return as_int(it->second);
}

std::int64_t positive_param(const ParamMap& params, const std::string& op,
                            const std::string& name) {
  const std::int64_t v = int_param(params, op, name);
  if (v < 1) {
    throw ParamError(op + "." + name + " must be >= 1, got " +
                     std::to_string(v));
  }
  return v;
}

ParamSpec mandatory_int(std::string name) {
  return ParamSpec{std::move(name), ParamKind::kInt, true, {}};
}

ParamSpec optional_int(std::string name, std::int64_t value) {
  return ParamSpec{std::move(name), ParamKind::kInt, false,
                   ParamValue(value)};
}

class LinearBuilder final : public LayerBuilder {
 public:
  std::vector<ParamSpec> params() const override {
    return {mandatory_int("width")};
  }
  std::optional<TensorKind> input_kind() const override {
    return TensorKind::kFlat;
  }
  bool head_capable() const override { return true; }

  TensorShape output_shape(const TensorShape& input,
                           const ParamMap& params) const override {
    input.features();
    return TensorShape::flat(positive_param(params, "linear", "width"));
  }

  LayerConfig build_layer(const TensorShape& input,
                          const ParamMap& params) const override {
    return make(input, params, output_shape(input, params));
  }

  // The head ignores the sampled width and emits the network output.
  LayerConfig get_last_layer(const TensorShape& input, const ParamMap& params,
                             const TensorShape& output) const override {
    if (output.kind() != TensorKind::kFlat) {
      throw ShapeError("linear head can only produce flat outputs, got " +
                       output.to_string());
    }
    input.features();
    ParamMap resolved = params;
    resolved["width"] = output.features();
    return make(input, resolved, output);
  }

  std::int64_t macs(const LayerConfig& cfg) const override {
    return cfg.input.features() * cfg.output.features();
  }

 private:
  static LayerConfig make(const TensorShape& input, const ParamMap& params,
                          const TensorShape& output) {
    LayerConfig cfg;
    cfg.op = "linear";
    cfg.params = params;
    cfg.input = input;
    cfg.output = output;
    const std::int64_t in = input.features();
    const std::int64_t out = output.features();
    cfg.tensors = {{"weight", {out, in}, in}, {"bias", {out}, in}};
    return cfg;
  }
};

class Conv1dBuilder final : public LayerBuilder {
 public:
  std::vector<ParamSpec> params() const override {
    return {mandatory_int("kernel_size"), mandatory_int("out_channels"),
            optional_int("stride", 1), optional_int("padding", 0)};
  }
  std::optional<TensorKind> input_kind() const override {
    return TensorKind::kChannelled;
  }

  TensorShape output_shape(const TensorShape& input,
                           const ParamMap& params) const override {
    const std::int64_t k = positive_param(params, "conv1d", "kernel_size");
    const std::int64_t oc = positive_param(params, "conv1d", "out_channels");
    const std::int64_t s = positive_param(params, "conv1d", "stride");
    const std::int64_t p = int_param(params, "conv1d", "padding");
    if (p < 0) throw ParamError("conv1d.padding must be >= 0");
    const std::int64_t padded = input.length() + 2 * p;
    if (padded < k) {
      throw ShapeError("conv1d kernel " + std::to_string(k) +
                       " exceeds padded length " + std::to_string(padded) +
                       " of input " + input.to_string());
    }
    return TensorShape::channelled(oc, (padded - k) / s + 1);
  }

  LayerConfig build_layer(const TensorShape& input,
                          const ParamMap& params) const override {
    LayerConfig cfg;
    cfg.op = "conv1d";
    cfg.params = params;
    cfg.input = input;
    cfg.output = output_shape(input, params);
    const std::int64_t c = input.channels();
    const std::int64_t k = as_int(params.at("kernel_size"));
    const std::int64_t oc = cfg.output.channels();
    cfg.tensors = {{"weight", {oc, c, k}, c * k}, {"bias", {oc}, c * k}};
    return cfg;
  }

  std::int64_t macs(const LayerConfig& cfg) const override {
    return cfg.output.channels() * cfg.output.length() *
           cfg.input.channels() * as_int(cfg.params.at("kernel_size"));
  }
};

class MaxPoolBuilder final : public LayerBuilder {
 public:
  std::vector<ParamSpec> params() const override {
    // stride defaults to the kernel size.
    return {optional_int("kernel_size", 2),
            ParamSpec{"stride", ParamKind::kInt, false, {}}};
  }
  std::optional<TensorKind> input_kind() const override {
    return TensorKind::kChannelled;
  }

  TensorShape output_shape(const TensorShape& input,
                           const ParamMap& params) const override {
    const ParamMap p = resolved(params);
    const std::int64_t k = positive_param(p, "maxpool", "kernel_size");
    const std::int64_t s = positive_param(p, "maxpool", "stride");
    if (input.length() < k) {
      throw ShapeError("maxpool kernel " + std::to_string(k) +
                       " exceeds length of input " + input.to_string());
    }
    return TensorShape::channelled(input.channels(),
                                   (input.length() - k) / s + 1);
  }

  LayerConfig build_layer(const TensorShape& input,
                          const ParamMap& params) const override {
    LayerConfig cfg;
    cfg.op = "maxpool";
    cfg.params = resolved(params);
    cfg.input = input;
    cfg.output = output_shape(input, cfg.params);
    return cfg;
  }

 private:
  static ParamMap resolved(ParamMap params) {
    if (!params.contains("kernel_size")) params["kernel_size"] = std::int64_t{2};
    if (!params.contains("stride")) params["stride"] = params["kernel_size"];
    return params;
  }
};

// identity and relu: shape-preserving, any kind.
class ElementwiseBuilder final : public LayerBuilder {
 public:
  explicit ElementwiseBuilder(std::string op) : op_(std::move(op)) {}

  std::vector<ParamSpec> params() const override { return {}; }
  std::optional<TensorKind> input_kind() const override {
    return std::nullopt;
  }
  TensorShape output_shape(const TensorShape& input,
                           const ParamMap&) const override {
    return input;
  }
  LayerConfig build_layer(const TensorShape& input,
                          const ParamMap& params) const override {
    return LayerConfig{op_, params, input, input, {}, false};
  }

 private:
  std::string op_;
};

class FlattenBuilder final : public LayerBuilder {
 public:
  std::vector<ParamSpec> params() const override { return {}; }
  std::optional<TensorKind> input_kind() const override {
    return std::nullopt;
  }
  TensorShape output_shape(const TensorShape& input,
                           const ParamMap&) const override {
    return TensorShape::flat(input.elements());
  }
  LayerConfig build_layer(const TensorShape& input,
                          const ParamMap& params) const override {
    return LayerConfig{"flatten", params, input, output_shape(input, params),
                       {}, false};
  }
};

}  // namespace

Registry Registry::with_builtins() {
  Registry r;
  r.register_layer_as<LinearBuilder>("linear");
  r.register_layer_as<Conv1dBuilder>("conv1d");
  r.register_layer_as<MaxPoolBuilder>("maxpool");
  r.register_layer_as<ElementwiseBuilder>("identity", "identity");
  r.register_layer_as<ElementwiseBuilder>("relu", "relu");
  r.register_layer_as<FlattenBuilder>("flatten");

  auto flatten = std::make_shared<FlattenBuilder>();
  r.register_transition(TransitionEntry{
      TensorKind::kChannelled, TensorKind::kFlat,
      [flatten](const TensorShape& input) {
        LayerConfig cfg = flatten->build_layer(input, {});
        cfg.synthetic = true;
        return cfg;
      }});
  return r;
}

const Registry& default_registry() {
  static const Registry registry = Registry::with_builtins();
  return registry;
}

}  // namespace nasx
