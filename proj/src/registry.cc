#include "nasx/registry.h"

#include "nasx/errors.h"

namespace nasx {

std::int64_t LayerConfig::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& t : tensors) {
    std::int64_t n = 1;
    for (auto e : t.shape) n *= e;
    total += n;
  }
  return total;
}

LayerConfig LayerBuilder::get_last_layer(const TensorShape& input,
                                         const ParamMap& params,
                                         const TensorShape& output) const {
  LayerConfig cfg = build_layer(input, params);
  if (!(cfg.output == output)) {
    throw ShapeError("op " + cfg.op + " produces " + cfg.output.to_string() +
                     " but the network output is " + output.to_string());
  }
  return cfg;
}

void Registry::register_layer(std::string op_name,
                              std::shared_ptr<const LayerBuilder> builder) {
  if (!builder) throw std::invalid_argument("null layer builder");
  if (layers_.contains(op_name)) {
    throw DuplicateError("layer '" + op_name + "' is already registered");
  }
  layers_.emplace(std::move(op_name), std::move(builder));
}

void Registry::register_transition(TransitionEntry entry) {
  auto key = std::make_pair(entry.from, entry.to);
  if (transitions_.contains(key)) {
    throw DuplicateError("transition " + to_string(entry.from) + " -> " +
                         to_string(entry.to) + " is already registered");
  }
  transitions_.emplace(key, std::move(entry));
}

bool Registry::has_layer(std::string_view op_name) const {
  return layers_.find(op_name) != layers_.end();
}

const LayerBuilder* Registry::find_layer(std::string_view op_name) const {
  auto it = layers_.find(op_name);
  return it == layers_.end() ? nullptr : it->second.get();
}

const LayerBuilder& Registry::layer(std::string_view op_name) const {
  const LayerBuilder* b = find_layer(op_name);
  if (!b) {
    throw CapabilityError("no layer builder registered for '" +
                          std::string(op_name) + "'");
  }
  return *b;
}

std::vector<std::string> Registry::layer_names() const {
  std::vector<std::string> names;
  names.reserve(layers_.size());
  for (const auto& [name, _] : layers_) names.push_back(name);
  return names;
}

std::optional<TransitionEntry> Registry::resolve_transition(
    TensorKind from, TensorKind to) const {
  if (from == to) return std::nullopt;
  auto it = transitions_.find({from, to});
  if (it == transitions_.end()) {
    throw NoTransitionError("no adapter registered for " + to_string(from) +
                            " -> " + to_string(to));
  }
  return it->second;
}

ParamMap Registry::with_defaults(std::string_view op_name,
                                 ParamMap params) const {
  for (const auto& spec : layer(op_name).params()) {
    if (params.contains(spec.name)) continue;
    if (const auto* v = std::get_if<ParamValue>(&spec.default_value)) {
      params.emplace(spec.name, *v);
    }
  }
  return params;
}

}  // namespace nasx
