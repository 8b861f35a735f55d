#include "nasx/runtime.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "nasx/errors.h"
#include "nasx/kernels.h"
#include "nasx/seeding.h"

namespace nasx {
namespace {

const Tensor& tensor(const ParamStore& params, std::size_t layer,
                     const std::string& name) {
  if (layer >= params.layers.size()) {
    throw ShapeMismatch("parameter store has no entry for layer " +
                        std::to_string(layer));
  }
  auto it = params.layers[layer].find(name);
  if (it == params.layers[layer].end()) {
    throw ShapeMismatch("layer " + std::to_string(layer) + " lacks tensor '" +
                        name + "'");
  }
  return it->second;
}

Tensor run_layer(const LayerConfig& l, std::size_t index,
                 const ParamStore& params, const Tensor& x,
                 ExecutionMode mode, std::int64_t* macs) {
  Tensor y = Tensor::of(l.output);
  const bool par = mode == ExecutionMode::kParallel;
  if (l.op == "linear") {
    const kernels::LinearDims d{l.input.features(), l.output.features()};
    const auto& w = tensor(params, index, "weight");
    const auto& b = tensor(params, index, "bias");
    if (par) {
      kernels::parallel::linear(x.data(), w.data(), b.data(), y.data(), d);
    } else {
      kernels::reference::linear(x.data(), w.data(), b.data(), y.data(), d,
                                 macs);
    }
  } else if (l.op == "conv1d") {
    const kernels::Conv1dDims d{l.input.channels(),
                                l.input.length(),
                                l.output.channels(),
                                l.output.length(),
                                as_int(l.params.at("kernel_size")),
                                as_int(l.params.at("stride")),
                                as_int(l.params.at("padding"))};
    const auto& w = tensor(params, index, "weight");
    const auto& b = tensor(params, index, "bias");
    if (par) {
      kernels::parallel::conv1d(x.data(), w.data(), b.data(), y.data(), d);
    } else {
      kernels::reference::conv1d(x.data(), w.data(), b.data(), y.data(), d,
                                 macs);
    }
  } else if (l.op == "maxpool") {
    const kernels::PoolDims d{l.input.channels(), l.input.length(),
                              l.output.length(),
                              as_int(l.params.at("kernel_size")),
                              as_int(l.params.at("stride"))};
    if (par) {
      kernels::parallel::maxpool(x.data(), y.data(), d);
    } else {
      kernels::reference::maxpool(x.data(), y.data(), d);
    }
  } else if (l.op == "relu") {
    if (par) {
      kernels::parallel::relu(x.data(), y.data());
    } else {
      kernels::reference::relu(x.data(), y.data());
    }
  } else if (l.op == "identity" || l.op == "flatten") {
    y.values = x.values;
  } else {
    throw CapabilityError("the interpreter has no kernel for op '" + l.op +
                          "'");
  }
  return y;
}

void check_input(const ModelGraph& graph, const Tensor& input) {
  if (input.shape != graph.input_shape().extents()) {
    throw ShapeMismatch("input has shape of rank " +
                        std::to_string(input.shape.size()) +
                        ", graph expects " + graph.input_shape().to_string());
  }
  if (input.size() != graph.input_shape().elements()) {
    throw ShapeMismatch("input value count does not match its shape");
  }
}

}  // namespace

std::int64_t ParamStore::scalar_count() const {
  std::int64_t n = 0;
  for (const auto& layer : layers) {
    for (const auto& [_, t] : layer) n += t.size();
  }
  return n;
}

ParamStore init_params(const ModelGraph& graph, std::uint64_t seed) {
  ParamStore store;
  store.layers.resize(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const LayerConfig& l = graph.layers()[i];
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
    for (const auto& spec : l.tensors) {
      const float bound =
          1.0f / std::sqrt(static_cast<float>(std::max<std::int64_t>(spec.fan_in, 1)));
      std::uniform_real_distribution<float> dist(-bound, bound);
      Tensor t(spec.shape);
      for (auto& v : t.values) v = dist(rng);
      store.layers[i].emplace(spec.name, std::move(t));
    }
  }
  return store;
}

Tensor forward(const ModelGraph& graph, const ParamStore& params,
               const Tensor& input, ExecutionMode mode) {
  check_input(graph, input);
  Tensor x = input;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    x = run_layer(graph.layers()[i], i, params, x, mode, nullptr);
  }
  return x;
}

CountedForward forward_counted(const ModelGraph& graph,
                               const ParamStore& params, const Tensor& input) {
  check_input(graph, input);
  CountedForward result;
  Tensor x = input;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    Tensor y = run_layer(graph.layers()[i], i, params, x,
                         ExecutionMode::kReference, &result.macs);
    const auto live = static_cast<std::int64_t>(
        (x.values.size() + y.values.size()) * sizeof(float));
    result.peak_activation_bytes = std::max(result.peak_activation_bytes, live);
    x = std::move(y);
  }
  result.output = std::move(x);
  return result;
}

}  // namespace nasx
