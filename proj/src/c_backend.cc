#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nasx/backend.h"
#include "nasx/errors.h"

namespace nasx {
namespace {

std::string c_float(float v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string text(buf, end);
  if (text.find_first_of(".e") == std::string::npos) text += ".0";
  return text + "f";
}

std::string num(std::int64_t v) { return std::to_string(v) + "L"; }

std::string emit_linear(const LayerConfig& l, const EmitContext& c) {
  const std::int64_t in = l.input.features();
  const std::int64_t out = l.output.features();
  std::ostringstream s;
  s << "  for (long o = 0; o < " << num(out) << "; ++o) {\n"
    << "    const float* w = " << c.weight << " + o * " << num(in) << ";\n"
    << "    float acc = 0.0f;\n"
    << "    for (long i = 0; i < " << num(in) << "; ++i) {\n"
    << "      acc += w[i] * " << c.in << "[i];\n"
    << "    }\n"
    << "    " << c.out << "[o] = acc + " << c.bias << "[o];\n"
    << "  }\n";
  return s.str();
}

std::string emit_conv1d(const LayerConfig& l, const EmitContext& c) {
  const std::int64_t ch = l.input.channels();
  const std::int64_t len = l.input.length();
  const std::int64_t oc = l.output.channels();
  const std::int64_t olen = l.output.length();
  const std::int64_t k = as_int(l.params.at("kernel_size"));
  const std::int64_t stride = as_int(l.params.at("stride"));
  const std::int64_t pad = as_int(l.params.at("padding"));
  std::ostringstream s;
  s << "  for (long oc = 0; oc < " << num(oc) << "; ++oc) {\n"
    << "    for (long t = 0; t < " << num(olen) << "; ++t) {\n"
    << "      float acc = 0.0f;\n"
    << "      for (long ic = 0; ic < " << num(ch) << "; ++ic) {\n"
    << "        const float* w = " << c.weight << " + (oc * " << num(ch)
    << " + ic) * " << num(k) << ";\n"
    << "        const float* x = " << c.in << " + ic * " << num(len) << ";\n"
    << "        for (long k = 0; k < " << num(k) << "; ++k) {\n"
    << "          const long idx = t * " << num(stride) << " + k - "
    << num(pad) << ";\n"
    << "          if (idx < 0 || idx >= " << num(len) << ") continue;\n"
    << "          acc += w[k] * x[idx];\n"
    << "        }\n"
    << "      }\n"
    << "      " << c.out << "[oc * " << num(olen) << " + t] = acc + " << c.bias
    << "[oc];\n"
    << "    }\n"
    << "  }\n";
  return s.str();
}

std::string emit_maxpool(const LayerConfig& l, const EmitContext& c) {
  const std::int64_t ch = l.input.channels();
  const std::int64_t len = l.input.length();
  const std::int64_t olen = l.output.length();
  const std::int64_t k = as_int(l.params.at("kernel_size"));
  const std::int64_t stride = as_int(l.params.at("stride"));
  std::ostringstream s;
  s << "  for (long ch = 0; ch < " << num(ch) << "; ++ch) {\n"
    << "    const float* x = " << c.in << " + ch * " << num(len) << ";\n"
    << "    for (long t = 0; t < " << num(olen) << "; ++t) {\n"
    << "      float m = x[t * " << num(stride) << "];\n"
    << "      for (long k = 1; k < " << num(k) << "; ++k) {\n"
    << "        const float v = x[t * " << num(stride) << " + k];\n"
    << "        m = m < v ? v : m;\n"
    << "      }\n"
    << "      " << c.out << "[ch * " << num(olen) << " + t] = m;\n"
    << "    }\n"
    << "  }\n";
  return s.str();
}

std::string emit_relu(const LayerConfig& l, const EmitContext& c) {
  std::ostringstream s;
  s << "  for (long i = 0; i < " << num(l.output.elements()) << "; ++i) {\n"
    << "    " << c.out << "[i] = " << c.in << "[i] < 0.0f ? 0.0f : " << c.in
    << "[i];\n"
    << "  }\n";
  return s.str();
}

std::string emit_copy(const LayerConfig& l, const EmitContext& c) {
  std::ostringstream s;
  s << "  for (long i = 0; i < " << num(l.output.elements()) << "; ++i) {\n"
    << "    " << c.out << "[i] = " << c.in << "[i];\n"
    << "  }\n";
  return s.str();
}

std::string array_name(std::size_t layer, const std::string& tensor) {
  return "nasx_layer" + std::to_string(layer) + "_" + tensor;
}

const char* kBenchMain = R"(#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <time.h>

#include "model.h"

static float input[MODEL_INPUT_SIZE];
static float output[MODEL_OUTPUT_SIZE];

/* Usage:
 *   bench [iterations]  time infer() on a fixed input
 *   bench --io          read whitespace-separated inputs from stdin, one
 *                       output line per input vector
 */
int main(int argc, char** argv) {
  long i;
  if (argc > 1 && strcmp(argv[1], "--io") == 0) {
    for (;;) {
      for (i = 0; i < MODEL_INPUT_SIZE; ++i) {
        if (scanf("%f", &input[i]) != 1) return i == 0 ? 0 : 1;
      }
      infer(input, output);
      for (i = 0; i < MODEL_OUTPUT_SIZE; ++i) {
        printf("%.9g%c", (double)output[i],
               i + 1 < MODEL_OUTPUT_SIZE ? ' ' : '\n');
      }
    }
  }
  {
    const long iterations = argc > 1 ? atol(argv[1]) : 100;
    double checksum = 0.0;
    clock_t start;
    clock_t end;
    long it;
    for (i = 0; i < MODEL_INPUT_SIZE; ++i) {
      input[i] = (float)((i % 17) - 8) / 8.0f;
    }
    start = clock();
    for (it = 0; it < iterations; ++it) infer(input, output);
    end = clock();
    for (i = 0; i < MODEL_OUTPUT_SIZE; ++i) checksum += output[i];
    printf("latency_us: %.3f\n", iterations > 0
               ? 1e6 * (double)(end - start) / CLOCKS_PER_SEC / (double)iterations
               : 0.0);
    printf("checksum: %.6g\n", checksum);
  }
  return 0;
}
)";

}  // namespace

void SourceBundle::write_to(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [name, text] : files) {
    std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
    if (!out) throw Error("cannot write " + dir + "/" + name);
    out << text;
  }
}

CBackend::CBackend()
    : emitters_{{"linear", emit_linear},   {"conv1d", emit_conv1d},
                {"maxpool", emit_maxpool}, {"relu", emit_relu},
                {"identity", emit_copy},   {"flatten", emit_copy}} {}

CapabilitySet CBackend::reflect() const {
  CapabilitySet caps;
  for (const auto& [op, _] : emitters_) caps.ops.insert(op);
  return caps;
}

void CBackend::override_emitter(std::string op, LayerEmitter emitter) {
  emitters_[std::move(op)] = std::move(emitter);
}

SourceBundle CBackend::generate(const ModelGraph& graph,
                                const ParamStore& params) const {
  for (const auto& l : graph.layers()) {
    if (!emitters_.contains(l.op)) {
      throw CapabilityError("C backend cannot generate op '" + l.op + "'");
    }
  }
  if (params.layers.size() != graph.size()) {
    throw ShapeMismatch("parameter store does not match the graph");
  }

  std::int64_t max_buffer = 1;
  for (std::size_t i = 0; i + 1 < graph.size(); ++i) {
    max_buffer = std::max(max_buffer, graph.layers()[i].output.elements());
  }

  std::ostringstream header;
  header << "#ifndef NASX_MODEL_H\n#define NASX_MODEL_H\n\n"
         << "#define MODEL_INPUT_SIZE " << graph.input_shape().elements()
         << "\n#define MODEL_OUTPUT_SIZE " << graph.output_shape().elements()
         << "\n\n/* input " << graph.input_shape().to_string() << ", output "
         << graph.output_shape().to_string() << " */\n"
         << "void infer(const float* in, float* out);\n\n#endif\n";

  std::ostringstream weights;
  std::ostringstream externs;
  weights << "/* Parameter tensors, row-major float32. */\n\n";
  for (std::size_t i = 0; i < graph.size(); ++i) {
    for (const auto& spec : graph.layers()[i].tensors) {
      auto it = params.layers[i].find(spec.name);
      if (it == params.layers[i].end()) {
        throw ShapeMismatch("missing tensor " + spec.name + " for layer " +
                            std::to_string(i));
      }
      const Tensor& t = it->second;
      const std::string name = array_name(i, spec.name);
      externs << "extern const float " << name << "[" << t.size() << "];\n";
      weights << "const float " << name << "[" << t.size() << "] = {";
      for (std::int64_t k = 0; k < t.size(); ++k) {
        weights << (k % 8 == 0 ? "\n  " : " ") << c_float(t.values[static_cast<std::size_t>(k)])
                << (k + 1 < t.size() ? "," : "");
      }
      weights << "\n};\n\n";
    }
  }

  if (externs.tellp() == 0) {
    // ISO C forbids an empty translation unit.
    weights << "typedef int nasx_no_weights;\n";
  }

  // Intermediate results alternate between two buffers; declare only the
  // ones this graph touches.
  std::ostringstream model;
  model << "#include \"model.h\"\n\n" << externs.str() << "\n";
  if (graph.size() >= 2) {
    model << "static float nasx_buffer_a[" << max_buffer << "];\n";
  }
  if (graph.size() >= 3) {
    model << "static float nasx_buffer_b[" << max_buffer << "];\n";
  }
  model << "\nvoid infer(const float* in, float* out) {\n"
        << "  const float* src = in;\n  float* dst = out;\n";
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const LayerConfig& l = graph.layers()[i];
    const bool last = i + 1 == graph.size();
    model << "\n  /* layer " << i << ": " << l.op << " "
          << l.input.to_string() << " -> " << l.output.to_string() << " */\n"
          << "  dst = " << (last ? "out" : (i % 2 == 0 ? "nasx_buffer_a" : "nasx_buffer_b"))
          << ";\n";
    EmitContext ctx{i, "src", "dst", "", ""};
    for (const auto& spec : l.tensors) {
      (spec.name == "weight" ? ctx.weight : ctx.bias) = array_name(i, spec.name);
    }
    model << emitters_.at(l.op)(l, ctx);
    if (!last) model << "  src = dst;\n";
  }
  model << "}\n";

  SourceBundle bundle;
  bundle.files["model.h"] = header.str();
  bundle.files["model.c"] = model.str();
  bundle.files["weights.c"] = weights.str();
  bundle.files["bench_main.c"] = kBenchMain;
  return bundle;
}

SourceBundle generate_c(const ModelGraph& graph, const ParamStore& params) {
  return CBackend().generate(graph, params);
}

CapabilitySet reflect(std::string_view backend, const Registry& registry) {
  if (backend == "c") return CBackend().reflect();
  if (backend == "json") {
    CapabilitySet caps;
    for (auto& name : registry.layer_names()) caps.ops.insert(name);
    return caps;
  }
  throw CapabilityError("unknown backend '" + std::string(backend) + "'");
}

}  // namespace nasx
