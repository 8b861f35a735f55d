#include <gtest/gtest.h>

#include <regex>

#include "nasx/architecture.h"
#include "nasx/backend.h"
#include "nasx/errors.h"
#include "nasx/estimators.h"
#include "nasx/model_graph.h"
#include "nasx/runtime.h"
#include "support.h"

namespace nasx {
namespace {

ModelGraph single(const std::string& op, const TensorShape& in,
                  ParamMap params = {}) {
  const Registry& reg = default_registry();
  const LayerConfig l =
      reg.layer(op).build_layer(in, reg.with_defaults(op, std::move(params)));
  return ModelGraph::create(in, {l}, l.output);
}

// Compiles the graph and checks it against forward() on `n` random inputs.
void expect_codegen_matches(const ModelGraph& g, std::uint64_t seed, int n,
                            const std::filesystem::path& dir) {
  const ParamStore store = init_params(g, seed);
  const testing::CompiledModel binary(generate_c(g, store), dir);
  std::mt19937_64 rng(seed);
  std::vector<Tensor> inputs;
  for (int i = 0; i < n; ++i) {
    inputs.push_back(testing::random_tensor(g.input_shape().extents(), rng));
  }
  const auto rows = binary.run(inputs);
  ASSERT_EQ(rows.size(), inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Tensor expected = forward(g, store, inputs[i]);
    EXPECT_LE(testing::max_relative_error(rows[i], expected.values), 1e-5);
  }
}

TEST(Reflect, CBackendOps) {
  const std::set<std::string> expected = {"linear", "conv1d", "maxpool",
                                          "relu",   "identity", "flatten"};
  EXPECT_EQ(reflect("c").ops, expected);
  EXPECT_EQ(CBackend().reflect().ops, expected);
  EXPECT_EQ(reflect("json").ops, expected);
  EXPECT_THROW(reflect("fpga"), CapabilityError);
}

TEST(GenerateC, BundleLayout) {
  const auto g = single("linear", TensorShape::flat(4), {{"width", std::int64_t{3}}});
  const auto bundle = generate_c(g, init_params(g, 1));
  for (const char* name : {"model.h", "model.c", "weights.c", "bench_main.c"}) {
    EXPECT_TRUE(bundle.files.contains(name)) << name;
  }
  EXPECT_NE(bundle.files.at("model.h").find("void infer(const float* in, float* out);"),
            std::string::npos);
  for (const auto& [name, text] : bundle.files) {
    EXPECT_EQ(text.find("malloc"), std::string::npos) << name;
  }
  EXPECT_NE(bundle.files.at("weights.c").find("const float nasx_layer0_weight[12]"),
            std::string::npos);
}

TEST(GenerateC, IdentityCopiesVerbatim) {
  testing::TempDir dir;
  const auto g = single("identity", TensorShape::flat(7));
  const testing::CompiledModel binary(generate_c(g, init_params(g, 0)), dir.path());
  const Tensor x({7}, {1.5f, -2.25f, 0.0f, 3.0e-7f, 1e6f, -0.1f, 42.0f});
  const auto rows = binary.run({x});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0], x.values);
}

TEST(GenerateC, ExampleSampleMatchesInterpreter) {
  testing::TempDir dir;
  const auto spec = testing::example_space();
  RandomTrialSource src(2024);
  const auto g = build_candidate(spec, sample_architecture(spec, src));
  expect_codegen_matches(g, 7, 20, dir.path());
}

TEST(GenerateC, EveryOpMatchesInterpreter) {
  testing::TempDir dir;
  const auto ch = TensorShape::channelled(3, 20);
  const std::vector<ModelGraph> graphs = {
      single("conv1d", ch,
             {{"kernel_size", std::int64_t{5}}, {"out_channels", std::int64_t{4}},
              {"stride", std::int64_t{2}}, {"padding", std::int64_t{1}}}),
      single("maxpool", ch, {{"kernel_size", std::int64_t{3}},
                             {"stride", std::int64_t{2}}}),
      single("relu", ch),
      single("flatten", ch),
      single("linear", TensorShape::flat(9), {{"width", std::int64_t{5}}}),
  };
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    expect_codegen_matches(graphs[i], i, 5, dir.path() / std::to_string(i));
  }
}

// Every architecture of a fully enumerated small space, 5 inputs each.
TEST(Property, CodegenEquivalenceOnEnumeratedSpace) {
  testing::TempDir dir;
  const auto spec = testing::example_space("[1]");
  std::size_t n = 0;
  for_each_configuration(spec, 100, [&](const ArchitectureIR& ir) {
    expect_codegen_matches(build_candidate(spec, ir), n, 5,
                           dir.path() / std::to_string(n));
    ++n;
  });
  EXPECT_EQ(n, 24u);
}

// A test-only op to exercise reflection completeness.
class SquareBuilder final : public LayerBuilder {
 public:
  std::vector<ParamSpec> params() const override { return {}; }
  std::optional<TensorKind> input_kind() const override { return {}; }
  TensorShape output_shape(const TensorShape& in, const ParamMap&) const override {
    return in;
  }
  LayerConfig build_layer(const TensorShape& in, const ParamMap& p) const override {
    return {"square", p, in, in, {}, false};
  }
};

TEST(Reflect, UnsupportedOpIsRejectedNotSkipped) {
  Registry reg = Registry::with_builtins();
  reg.register_layer_as<SquareBuilder>("square");
  const auto l = reg.layer("square").build_layer(TensorShape::flat(4), {});
  const auto g = ModelGraph::create(TensorShape::flat(4), {l}, l.output);
  const ParamStore store{std::vector<std::map<std::string, Tensor>>(1)};
  EXPECT_THROW(generate_c(g, store), CapabilityError);
  EXPECT_FALSE(reflect("c", reg).supports("square"));
  EXPECT_TRUE(reflect("json", reg).supports("square"));

  CBackend backend;
  backend.override_emitter("square", [](const LayerConfig& layer,
                                        const EmitContext& c) {
    return "  for (long i = 0; i < " + std::to_string(layer.output.elements()) +
           "; ++i) " + c.out + "[i] = " + c.in + "[i] * " + c.in + "[i];\n";
  });
  EXPECT_TRUE(backend.reflect().supports("square"));
  testing::TempDir dir;
  const testing::CompiledModel binary(backend.generate(g, store), dir.path());
  const auto rows = binary.run({Tensor({4}, {1, -2, 3, 0.5f})});
  EXPECT_EQ(rows.at(0), (std::vector<float>{1, 4, 9, 0.25f}));
}

TEST(GenerateC, OverrideReplacesBuiltinEmitter) {
  CBackend backend;
  backend.override_emitter("relu", [](const LayerConfig& l, const EmitContext& c) {
    return "  for (long i = 0; i < " + std::to_string(l.output.elements()) +
           "; ++i) " + c.out + "[i] = 0.0f * " + c.in + "[i];\n";
  });
  const auto g = single("relu", TensorShape::flat(3));
  testing::TempDir dir;
  const testing::CompiledModel binary(backend.generate(g, init_params(g, 0)),
                                      dir.path());
  EXPECT_EQ(binary.run({Tensor({3}, {1, 2, 3})}).at(0),
            (std::vector<float>{0, 0, 0}));
}

TEST(GenerateC, BenchHarnessReportsLatency) {
  testing::TempDir dir;
  const auto spec = testing::example_space("[1]");
  RandomTrialSource src(3);
  const auto g = build_candidate(spec, sample_architecture(spec, src));
  const testing::CompiledModel binary(generate_c(g, init_params(g, 1)), dir.path());
  const std::string out = binary.run_bench(3);
  EXPECT_TRUE(std::regex_search(out, std::regex(R"(latency_us: [0-9.]+)"))) << out;
  EXPECT_NE(out.find("checksum:"), std::string::npos);
}

TEST(GraphJson, RoundTripWithWeights) {
  const auto spec = testing::example_space();
  RandomTrialSource src(11);
  const auto g = build_candidate(spec, sample_architecture(spec, src));
  const ParamStore store = init_params(g, 5);
  const auto doc = export_json(g, &store, 5);
  EXPECT_EQ(doc.at("format_version"), kGraphFormatVersion);
  EXPECT_EQ(doc.at("layers").size(), g.size());
  const auto imported = import_json(nlohmann::json::parse(doc.dump()));
  EXPECT_EQ(imported.graph, g);
  ASSERT_TRUE(imported.params);
  EXPECT_EQ(*imported.params, store);
  EXPECT_EQ(imported.init_seed, std::optional<std::uint64_t>(5));
}

TEST(GraphJson, WeightsOmittedReinitialize) {
  const auto spec = testing::example_space("[2]");
  RandomTrialSource src(12);
  const auto g = build_candidate(spec, sample_architecture(spec, src));
  const auto doc = export_json(g);
  EXPECT_FALSE(doc.contains("weights"));
  const auto imported = import_json(doc);
  EXPECT_FALSE(imported.params);
  const ParamStore store = init_params(imported.graph, 9);
  std::mt19937_64 rng(1);
  const Tensor x = testing::random_tensor(g.input_shape().extents(), rng);
  EXPECT_EQ(forward(imported.graph, store, x),
            forward(g, init_params(g, 9), x));
}

TEST(GraphJson, ImportErrors) {
  const auto g = single("linear", TensorShape::flat(4), {{"width", std::int64_t{2}}});
  auto doc = export_json(g);
  auto bad_version = doc;
  bad_version["format_version"] = 99;
  EXPECT_THROW(import_json(bad_version), VersionError);
  auto bad_op = doc;
  bad_op["layers"][0]["op"] = "gelu";
  EXPECT_THROW(import_json(bad_op), CapabilityError);
  auto bad_shape = doc;
  bad_shape["layers"][0]["out_shape"] = nlohmann::json::array({3});
  bad_shape["output_shape"] = nlohmann::json::array({3});
  EXPECT_THROW(import_json(bad_shape), ShapeError);
  auto missing = doc;
  missing.erase("layers");
  EXPECT_THROW(import_json(missing), SchemaError);
}

TEST(Benchmark, ZeroJitterEqualsAnalyticEstimate) {
  const auto spec = testing::example_space();
  DeviceModel d;
  d.jitter = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RandomTrialSource src(seed);
    const auto g = build_candidate(spec, sample_architecture(spec, src));
    const auto m = benchmark(g, d, seed);
    EXPECT_EQ(m.latency_s, estimate_latency(g, d).value);
    EXPECT_EQ(m.peak_memory_bytes, estimate_memory(g).value);
  }
}

TEST(Benchmark, JitterWithinBoundAndDeterministic) {
  const auto spec = testing::example_space();
  DeviceModel d;
  d.jitter = 0.05;
  bool any_above = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomTrialSource src(seed + 100);
    const auto g = build_candidate(spec, sample_architecture(spec, src));
    const double est = estimate_latency(g, d).value;
    const auto m = benchmark(g, d, seed);
    EXPECT_GE(m.latency_s, est);
    EXPECT_LE(m.latency_s, 1.05 * est);
    EXPECT_EQ(m.latency_s, benchmark(g, d, seed).latency_s);
    any_above |= m.latency_s > est;
  }
  EXPECT_TRUE(any_above);
}

TEST(Benchmark, CapacityExceeded) {
  const auto g = single("linear", TensorShape::flat(5000),
                        {{"width", std::int64_t{100}}});
  DeviceModel d;
  d.memory_capacity = std::int64_t{1} << 20;
  ASSERT_GT(estimate_memory(g).value, 2e6);
  EXPECT_THROW(benchmark(g, d, 0), CapacityError);
  d.memory_capacity = std::int64_t{4} << 20;
  EXPECT_NO_THROW(benchmark(g, d, 0));
}

TEST(Benchmark, DeviceValidation) {
  DeviceModel d;
  d.jitter = 0.2;
  EXPECT_THROW(d.validate(), SchemaError);
  d.jitter = 0.0;
  d.throughput = 0.0;
  EXPECT_THROW(d.validate(), SchemaError);
}

// Appending a layer never lowers measured latency at a fixed seed.
TEST(Property, BenchmarkMonotoneInLayers) {
  const Registry& reg = default_registry();
  DeviceModel d;
  d.jitter = 0.1;
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto spec = testing::example_space();
    RandomTrialSource src(seed);
    const auto g = build_candidate(spec, sample_architecture(spec, src));
    auto layers = g.layers();
    const auto& last = layers.back();
    layers.push_back(rng() % 2 ? reg.layer("relu").build_layer(last.output, {})
                               : reg.layer("linear").build_layer(
                                     last.output, {{"width", std::int64_t{6}}}));
    const auto longer =
        ModelGraph::create(g.input_shape(), layers, layers.back().output);
    EXPECT_GE(benchmark(longer, d, seed).latency_s,
              benchmark(g, d, seed).latency_s);
  }
}

TEST(Pipeline, GenerationSucceedsDeploymentRejects) {
  const auto spec = testing::example_space();
  RandomTrialSource src(5);
  const auto ir = sample_architecture(spec, src);
  const auto g = build_candidate(spec, ir);
  EXPECT_NO_THROW(generate_c(g, init_params(g, 0)));
  DeviceModel tiny;
  tiny.memory_capacity = 64;
  EXPECT_THROW(GeneratorPipeline::simulated_c(tiny).run(spec, ir, 0),
               CapacityError);
  const auto ok = GeneratorPipeline::simulated_c(DeviceModel{}).run(spec, ir, 0);
  EXPECT_EQ(ok.graph, g);
  EXPECT_EQ(ok.bundle.files, generate_c(g, init_params(g, 0)).files);
  EXPECT_EQ(ok.measurement.latency_s, benchmark(g, DeviceModel{}, 0).latency_s);
}

}  // namespace
}  // namespace nasx
