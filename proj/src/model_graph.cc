#include "nasx/model_graph.h"

#include <iomanip>
#include <sstream>

#include "nasx/errors.h"
#include "nasx/preprocess.h"

namespace nasx {
namespace {

void append_adapter(std::vector<LayerConfig>& layers, TensorShape& shape,
                    TensorKind want, const Registry& registry) {
  auto transition = registry.resolve_transition(shape.kind(), want);
  if (!transition) return;
  LayerConfig adapter = transition->adapt(shape);
  adapter.synthetic = true;
  shape = adapter.output;
  layers.push_back(std::move(adapter));
}

std::string params_text(const ParamMap& params) {
  std::string t;
  for (const auto& [k, v] : params) {
    t += (t.empty() ? "" : ",") + k + "=" + to_string(v);
  }
  return t;
}

}  // namespace

ModelGraph ModelGraph::create(TensorShape input,
                              std::vector<LayerConfig> layers,
                              TensorShape output) {
  if (layers.empty()) throw ShapeError("a model graph needs at least one layer");
  TensorShape current = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!(layers[i].input == current)) {
      throw ShapeError("layer " + std::to_string(i) + " (" + layers[i].op +
                       ") expects " + layers[i].input.to_string() +
                       " but receives " + current.to_string());
    }
    current = layers[i].output;
  }
  if (!(current == output)) {
    throw ShapeError("graph ends in " + current.to_string() +
                     ", expected output " + output.to_string());
  }
  ModelGraph g;
  g.input_ = std::move(input);
  g.output_ = std::move(output);
  g.layers_ = std::move(layers);
  return g;
}

std::int64_t ModelGraph::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

std::size_t ModelGraph::adapter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += (l.synthetic && l.op != "linear") ? 1 : 0;
  return n;
}

ModelGraph build_model(const ArchitectureIR& ir, const TensorShape& input,
                       const TensorShape& output, const Registry& registry,
                       const CapabilitySet* capabilities) {
  std::vector<LayerConfig> layers;
  TensorShape shape = input;
  bool terminated = false;
  for (std::size_t i = 0; i < ir.layers.size(); ++i) {
    const ResolvedLayer& rl = ir.layers[i];
    const LayerBuilder& builder = registry.layer(rl.op);
    if (auto want = builder.input_kind(); want && *want != shape.kind()) {
      append_adapter(layers, shape, *want, registry);
    }
    const ParamMap params = registry.with_defaults(rl.op, rl.params);
    const bool last = i + 1 == ir.layers.size();
    LayerConfig cfg = last && builder.head_capable()
                          ? builder.get_last_layer(shape, params, output)
                          : builder.build_layer(shape, params);
    terminated = last && builder.head_capable();
    shape = cfg.output;
    layers.push_back(std::move(cfg));
  }
  if (!terminated) {
    // Forced head: flatten (a no-op on flat vectors) then linear.
    const LayerBuilder& head = registry.layer("linear");
    LayerConfig flatten = registry.layer("flatten").build_layer(shape, {});
    flatten.synthetic = true;
    shape = flatten.output;
    layers.push_back(std::move(flatten));
    LayerConfig cfg = head.get_last_layer(
        shape, {{"width", output.elements()}}, output);
    cfg.synthetic = true;
    shape = cfg.output;
    layers.push_back(std::move(cfg));
  }
  if (capabilities) {
    for (const auto& l : layers) capabilities->check_layer(l.op, l.params);
  }
  return ModelGraph::create(input, std::move(layers), output);
}

TensorShape model_input_shape(const SearchSpaceSpec& spec,
                              const ArchitectureIR& ir) {
  const TensorShape raw = TensorShape::from_extents(spec.input_shape);
  if (!ir.preproc) return raw;
  return preproc_output_shape(*ir.preproc, raw);
}

ModelGraph build_candidate(const SearchSpaceSpec& spec,
                           const ArchitectureIR& ir, const Registry& registry,
                           const CapabilitySet* capabilities) {
  return build_model(ir, model_input_shape(spec, ir),
                     TensorShape::from_extents(spec.output_shape), registry,
                     capabilities);
}

GraphSummary describe(const ModelGraph& graph, const Registry& registry) {
  GraphSummary s;
  for (std::size_t i = 0; i < graph.layers().size(); ++i) {
    const LayerConfig& l = graph.layers()[i];
    LayerSummary row;
    row.index = i;
    row.op = l.op;
    row.params = params_text(l.params);
    row.input = l.input.to_string();
    row.output = l.output.to_string();
    row.parameters = l.parameter_count();
    row.flops = 2 * registry.layer(l.op).macs(l);
    row.synthetic = l.synthetic;
    s.total_parameters += row.parameters;
    s.total_flops += row.flops;
    s.layers.push_back(std::move(row));
  }
  return s;
}

std::string GraphSummary::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(4) << "#" << std::setw(10) << "op"
      << std::setw(36) << "params" << std::setw(12) << "in" << std::setw(12)
      << "out" << std::right << std::setw(10) << "params#" << std::setw(12)
      << "flops" << "\n";
  for (const auto& r : layers) {
    out << std::left << std::setw(4) << r.index
        << std::setw(10) << (r.synthetic ? r.op + "*" : r.op) << std::setw(36)
        << r.params << std::setw(12) << r.input << std::setw(12) << r.output
        << std::right << std::setw(10) << r.parameters << std::setw(12)
        << r.flops << "\n";
  }
  out << std::left << std::setw(74) << "total" << std::right << std::setw(10)
      << total_parameters << std::setw(12) << total_flops << "\n";
  return out.str();
}

}  // namespace nasx
