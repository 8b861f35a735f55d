#include <algorithm>
#include <bit>
#include <cstring>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "nasx/backend.h"
#include "nasx/errors.h"

namespace nasx {
namespace {

static_assert(std::endian::native == std::endian::little,
              "weight blobs are little-endian float32");

namespace bai = boost::archive::iterators;

std::string encode_floats(const std::vector<float>& values) {
  using It = bai::base64_from_binary<bai::transform_width<const char*, 6, 8>>;
  const char* bytes = reinterpret_cast<const char*>(values.data());
  const std::size_t n = values.size() * sizeof(float);
  std::string out(It(bytes), It(bytes + n));
  out.append((4 - out.size() % 4) % 4, '=');
  return out;
}

std::vector<float> decode_floats(std::string text, std::size_t count) {
  using It = bai::transform_width<
      bai::binary_from_base64<std::string::const_iterator>, 8, 6>;
  const std::size_t padding =
      text.size() - std::min(text.size(), text.find_last_not_of('=') + 1);
  if (text.size() % 4 != 0 || padding > 2) {
    throw SchemaError("malformed base64 weight blob");
  }
  std::replace(text.end() - static_cast<std::ptrdiff_t>(padding), text.end(),
               '=', 'A');
  std::string bytes;
  try {
    bytes.assign(It(text.cbegin()), It(text.cend()));
  } catch (const std::exception&) {
    throw SchemaError("malformed base64 weight blob");
  }
  bytes.resize(bytes.size() - padding);
  if (bytes.size() != count * sizeof(float)) {
    throw SchemaError("weight blob holds " + std::to_string(bytes.size()) +
                      " bytes, expected " +
                      std::to_string(count * sizeof(float)));
  }
  std::vector<float> out(count);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

nlohmann::json param_json(const ParamValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

ParamValue param_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  throw SchemaError(where + ": parameter must be a scalar");
}

TensorShape shape_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array");
  std::vector<std::int64_t> extents;
  for (const auto& e : j) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
      throw SchemaError(where + " must hold positive integers");
    }
    extents.push_back(e.get<std::int64_t>());
  }
  return TensorShape::from_extents(extents);
}

const nlohmann::json& field(const nlohmann::json& obj, const char* key,
                            const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(where + ": missing '" + key + "'");
  }
  return *it;
}

std::string weight_ref(std::size_t layer, const std::string& tensor) {
  return "layer" + std::to_string(layer) + "." + tensor;
}

}  // namespace

nlohmann::json export_json(const ModelGraph& graph, const ParamStore* params,
                           std::optional<std::uint64_t> init_seed) {
  nlohmann::json doc;
  doc["format_version"] = kGraphFormatVersion;
  doc["input_shape"] = graph.input_shape().extents();
  doc["output_shape"] = graph.output_shape().extents();
  nlohmann::json layers = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const LayerConfig& l = graph.layers()[i];
    nlohmann::json layer;
    layer["op"] = l.op;
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : l.params) p[k] = param_json(v);
    layer["params"] = p;
    layer["in_shape"] = l.input.extents();
    layer["out_shape"] = l.output.extents();
    layer["synthetic"] = l.synthetic;
    nlohmann::json refs = nlohmann::json::array();
    for (const auto& t : l.tensors) {
      const std::string ref = weight_ref(i, t.name);
      refs.push_back({{"name", t.name},
                      {"ref", ref},
                      {"shape", t.shape},
                      {"fan_in", t.fan_in}});
      if (params != nullptr) {
        weights[ref] = encode_floats(params->layers.at(i).at(t.name).values);
      }
    }
    layer["weight_refs"] = std::move(refs);
    layers.push_back(std::move(layer));
  }
  doc["layers"] = std::move(layers);
  if (params != nullptr) doc["weights"] = std::move(weights);
  if (init_seed) doc["init_seed"] = *init_seed;
  return doc;
}

ImportedGraph import_json(const nlohmann::json& doc,
                          const Registry& registry) {
  if (!doc.is_object()) throw SchemaError("graph document must be an object");
  const auto& version = field(doc, "format_version", "graph");
  if (!version.is_number_integer() ||
      version.get<std::int64_t>() != kGraphFormatVersion) {
    throw VersionError("unsupported graph format_version " + version.dump() +
                       " (expected " + std::to_string(kGraphFormatVersion) +
                       ")");
  }
  const TensorShape input = shape_from_json(field(doc, "input_shape", "graph"),
                                            "input_shape");
  const TensorShape output = shape_from_json(
      field(doc, "output_shape", "graph"), "output_shape");
  const auto& layers_json = field(doc, "layers", "graph");
  if (!layers_json.is_array()) throw SchemaError("layers must be an array");

  const nlohmann::json* weights = nullptr;
  if (auto it = doc.find("weights"); it != doc.end()) {
    if (!it->is_object()) throw SchemaError("weights must be an object");
    weights = &*it;
  }

  std::vector<LayerConfig> layers;
  ParamStore store;
  bool has_data = false;
  bool missing_data = false;
  for (std::size_t i = 0; i < layers_json.size(); ++i) {
    const auto& lj = layers_json[i];
    const std::string where = "layer " + std::to_string(i);
    if (!lj.is_object()) throw SchemaError(where + " must be an object");
    LayerConfig l;
    const auto& op = field(lj, "op", where);
    if (!op.is_string()) throw SchemaError(where + ": op must be a string");
    l.op = op.get<std::string>();
    if (!registry.has_layer(l.op)) {
      throw CapabilityError(where + ": unknown op '" + l.op + "'");
    }
    const auto& pj = field(lj, "params", where);
    if (!pj.is_object()) throw SchemaError(where + ": params must be an object");
    for (const auto& [k, v] : pj.items()) {
      l.params[k] = param_from_json(v, where + "." + k);
    }
    l.input = shape_from_json(field(lj, "in_shape", where), where + ".in_shape");
    l.output =
        shape_from_json(field(lj, "out_shape", where), where + ".out_shape");
    if (auto it = lj.find("synthetic"); it != lj.end()) {
      l.synthetic = it->get<bool>();
    }
    const TensorShape expected =
        registry.layer(l.op).output_shape(l.input, l.params);
    if (expected != l.output) {
      throw ShapeError(where + ": " + l.op + " maps " + l.input.to_string() +
                       " to " + expected.to_string() + ", document says " +
                       l.output.to_string());
    }
    std::map<std::string, Tensor> tensors;
    for (const auto& tj : field(lj, "weight_refs", where)) {
      ParamTensorSpec spec;
      spec.name = field(tj, "name", where).get<std::string>();
      spec.shape = field(tj, "shape", where).get<std::vector<std::int64_t>>();
      spec.fan_in = field(tj, "fan_in", where).get<std::int64_t>();
      const std::string ref = tj.contains("ref")
                                  ? tj["ref"].get<std::string>()
                                  : weight_ref(i, spec.name);
      if (weights != nullptr && weights->contains(ref)) {
        has_data = true;
        const auto count = static_cast<std::size_t>(element_count(spec.shape));
        tensors.emplace(spec.name,
                        Tensor(spec.shape,
                               decode_floats((*weights)[ref].get<std::string>(),
                                             count)));
      } else {
        missing_data = true;
      }
      l.tensors.push_back(std::move(spec));
    }
    store.layers.push_back(std::move(tensors));
    layers.push_back(std::move(l));
  }
  if (has_data && missing_data) {
    throw SchemaError("weights present for some tensors but not all");
  }

  ImportedGraph result{ModelGraph::create(input, std::move(layers), output),
                       std::nullopt, std::nullopt};
  if (has_data) result.params = std::move(store);
  if (auto it = doc.find("init_seed"); it != doc.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) {
      throw SchemaError("init_seed must be an integer");
    }
    result.init_seed = it->get<std::uint64_t>();
  }
  return result;
}

}  // namespace nasx
