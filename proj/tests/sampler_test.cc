#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "nasx/architecture.h"
#include "nasx/errors.h"
#include "support.h"

namespace nasx {
namespace {

using testing::example_space;

SearchSpaceSpec one_block(const std::string& mode, const std::string& depth,
                          const std::string& params) {
  return parse_spec(R"(input: [2, 64]
output: 3
sequence:
  - block: "body"
    op_candidates: ["conv1d"]
    type_repeat:
      type: ")" + mode + R"("
      depth: )" + depth + R"(
    conv1d:
)" + params);
}

std::set<std::string> key_set(const SearchSpaceSpec& spec) {
  std::set<std::string> keys;
  for (const auto& k : parameter_keys(spec)) keys.insert(k.key);
  return keys;
}

TEST(Sample, SameSeedSameIrAndTrace) {
  const auto spec = example_space();
  RandomTrialSource a(42), b(42);
  const auto x = sample_architecture(spec, a);
  const auto y = sample_architecture(spec, b);
  EXPECT_EQ(x, y);
  EXPECT_EQ(x.trace, y.trace);
  EXPECT_FALSE(x.trace.empty());
}

TEST(Sample, RepeatParamsSharesParameters) {
  const auto spec = one_block("repeat_params", "3",
                              "      kernel_size: [3, 5]\n"
                              "      out_channels: 8\n");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RandomTrialSource src(seed);
    const auto ir = sample_architecture(spec, src);
    ASSERT_EQ(ir.layers.size(), 3u);
    for (const auto& l : ir.layers) {
      EXPECT_EQ(l.params, ir.layers[0].params);
    }
  }
}

TEST(Sample, VaryAllDrawsPerLayer) {
  const auto spec = one_block("vary_all", "2",
                              "      kernel_size: 3\n"
                              "      out_channels: [8, 16]\n");
  bool differing = false;
  for (std::uint64_t seed = 0; seed < 200 && !differing; ++seed) {
    RandomTrialSource src(seed);
    const auto ir = sample_architecture(spec, src);
    differing = ir.layers[0].params.at("out_channels") !=
                ir.layers[1].params.at("out_channels");
  }
  EXPECT_TRUE(differing);
}

TEST(Sample, RepeatBlockResamples) {
  const auto spec = parse_spec(R"(input: [2, 64]
output: 3
sequence:
  - block: "first"
    op_candidates: ["conv1d", "relu"]
    conv1d:
      kernel_size: [1, 3]
      out_channels: 4
  - block: "again"
    type_repeat:
      type: "repeat_block"
      ref_block: "first"
)");
  bool differing = false;
  for (std::uint64_t seed = 0; seed < 100 && !differing; ++seed) {
    RandomTrialSource src(seed);
    const auto ir = sample_architecture(spec, src);
    ASSERT_EQ(ir.layers.size(), 2u);
    EXPECT_EQ(ir.layers[1].block_path, "again");
    differing = ir.layers[0].op != ir.layers[1].op ||
                ir.layers[0].params != ir.layers[1].params;
  }
  EXPECT_TRUE(differing);
}

TEST(ParameterKeys, ExampleSpaceHead) {
  const auto keys = parameter_keys(example_space());
  const auto it = std::find_if(keys.begin(), keys.end(), [](const auto& k) {
    return k.key == "head.linear.width";
  });
  ASSERT_NE(it, keys.end());
  EXPECT_EQ(it->domain,
            ParamDomain::choices({std::int64_t{32}, std::int64_t{64},
                                  std::int64_t{128}}));
  EXPECT_EQ(keys.front().key, "features.depth");
  EXPECT_TRUE(key_set(example_space()).contains(
      "features.rep0.conv-block.conv.conv1d.kernel_size"));
  EXPECT_TRUE(key_set(example_space()).contains(
      "features.rep5.conv-block.pool.op"));
}

TEST(ParameterKeys, FixedDomainsAreNotDecisions) {
  const auto spec = parse_spec(R"(input: [2, 64]
output: 3
sequence:
  - block: "c"
    op_candidates: "conv1d"
    conv1d:
      kernel_size: 3
      out_channels: 4
  - block: "p"
    op_candidates: "maxpool"
)");
  EXPECT_TRUE(parameter_keys(spec).empty());
  RandomTrialSource src(1);
  EXPECT_TRUE(sample_architecture(spec, src).trace.empty());
}

TEST(ParameterKeys, RepeatsNeverCollide) {
  const auto spec = example_space("[1, 2]");
  const auto keys = parameter_keys(spec);
  EXPECT_EQ(key_set(spec).size(), keys.size());
  // Keys materialized by every enumerated IR are unique within the trace.
  for_each_configuration(spec, 1000, [&](const ArchitectureIR& ir) {
    std::set<std::string> seen;
    for (const auto& [key, _] : ir.trace) {
      EXPECT_TRUE(seen.insert(key).second) << key;
    }
  });
}

// Replay: the trace alone reproduces the IR.
TEST(Property, ReplayReproducesIr) {
  const auto spec = example_space();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    RandomTrialSource src(seed);
    const auto ir = sample_architecture(spec, src);
    EXPECT_EQ(replay_architecture(spec, ir.trace), ir);
  }
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto s = parse_spec(testing::random_spec_yaml(rng));
    RandomTrialSource src(static_cast<std::uint64_t>(i));
    const auto ir = sample_architecture(s, src);
    EXPECT_EQ(replay_architecture(s, ir.trace), ir);
  }
}

TEST(Replay, MissingOrInvalidValuesAreResolutionErrors) {
  const auto spec = example_space("[1]");
  RandomTrialSource src(3);
  auto ir = sample_architecture(spec, src);
  SamplingTrace missing = ir.trace;
  missing.pop_back();
  EXPECT_THROW(replay_architecture(spec, missing), ResolutionError);
  SamplingTrace invalid = ir.trace;
  invalid.back().second = std::int64_t{999};
  EXPECT_THROW(replay_architecture(spec, invalid), ResolutionError);
}

// No dead keys: a trace holds exactly the keys consumed, each once, all
// of them declared by parameter_keys.
TEST(Property, TraceKeysAreDeclaredAndUsedOnce) {
  const auto spec = example_space();
  const auto declared = key_set(spec);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomTrialSource src(seed);
    const auto ir = sample_architecture(spec, src);
    std::set<std::string> seen;
    for (const auto& [key, _] : ir.trace) {
      EXPECT_TRUE(declared.contains(key)) << key;
      EXPECT_TRUE(seen.insert(key).second) << key;
    }
    // Depth d materializes 3 keys per repetition plus depth and width.
    EXPECT_EQ(ir.trace.size(), 3 * (ir.layers.size() - 1) / 2 + 2);
  }
}

// Coupon collector: 20 000 uniform trials cover a <= 200-config space.
TEST(Property, RandomSamplingCoversSmallSpaces) {
  for (const std::string depth : {"[1]", "[1, 2]"}) {
    auto text = testing::example_space_text(depth);
    // Fix the head width so depth {1,2} stays under 200 configurations.
    text.replace(text.find("[32, 64, 128]"), 13, "32");
    const auto spec = parse_spec(text);
    const auto total = static_cast<std::size_t>(count_configurations(spec));
    ASSERT_LE(total, 200u);
    std::set<std::string> hit;
    for (std::uint64_t seed = 0; seed < 20000; ++seed) {
      RandomTrialSource src(seed);
      hit.insert(describe_ir(sample_architecture(spec, src)));
    }
    EXPECT_EQ(hit.size(), total) << depth;
  }
}

// Mode separation over full enumeration.
TEST(Property, ModeSeparation) {
  const std::string params = "      kernel_size: [1, 3]\n"
                             "      out_channels: [2, 4]\n";
  const std::string body = R"(input: [2, 64]
output: 3
sequence:
  - block: "body"
    op_candidates: ["conv1d", "maxpool"]
    type_repeat:
      type: "MODE"
      depth: [1, 2, 3]
    conv1d:
)" + params;
  auto with_mode = [&](const std::string& mode) {
    std::string t = body;
    t.replace(t.find("MODE"), 4, mode);
    return parse_spec(t);
  };
  bool vary_ops = false, vary_params = false;
  for_each_configuration(with_mode("repeat_params"), 10000,
                         [](const ArchitectureIR& ir) {
    for (const auto& l : ir.layers) {
      EXPECT_EQ(l.op, ir.layers[0].op);
      EXPECT_EQ(l.params, ir.layers[0].params);
    }
  });
  bool op_params_differ = false;
  for_each_configuration(with_mode("repeat_op"), 10000,
                         [&](const ArchitectureIR& ir) {
    for (const auto& l : ir.layers) {
      EXPECT_EQ(l.op, ir.layers[0].op);
      op_params_differ |= l.params != ir.layers[0].params;
    }
  });
  EXPECT_TRUE(op_params_differ);
  for_each_configuration(with_mode("vary_all"), 10000,
                         [&](const ArchitectureIR& ir) {
    for (const auto& l : ir.layers) {
      vary_ops |= l.op != ir.layers[0].op;
      vary_params |= l.op == ir.layers[0].op && l.params != ir.layers[0].params;
    }
  });
  EXPECT_TRUE(vary_ops);
  EXPECT_TRUE(vary_params);
}

TEST(Describe, IrTextIsStable) {
  const auto irs = enumerate_space(example_space("[1]"), 100);
  EXPECT_EQ(describe_ir(irs.front()),
            "features.rep0.conv-block.conv:conv1d(kernel_size=3,out_channels=8)"
            " | features.rep0.conv-block.pool:maxpool() | head:linear(width=32)");
}

// The random source is uniform over configurations, not per decision:
// chi-square of 100 draws per configuration against the enumeration, for
// every repeat mode (ops of unequal sub-space size make the weights matter).
TEST(Property, RandomSamplingIsUniformOverConfigurations) {
  for (const std::string mode : {"vary_all", "repeat_op", "repeat_params"}) {
    const auto spec = parse_spec(R"(input: [2, 64]
output: 3
sequence:
  - block: "body"
    op_candidates: ["conv1d", "maxpool"]
    type_repeat:
      type: ")" + mode + R"("
      depth: [1, 2, 3]
    conv1d:
      kernel_size: [1, 3]
      out_channels: [2, 4]
)");
    std::map<std::string, int> counts;
    for_each_configuration(spec, 10000, [&](const ArchitectureIR& ir) {
      counts[describe_ir(ir)] = 0;
    });
    const std::size_t n = counts.size();
    const int draws = static_cast<int>(100 * n);
    for (int i = 0; i < draws; ++i) {
      RandomTrialSource src(static_cast<std::uint64_t>(i));
      const auto it = counts.find(describe_ir(sample_architecture(spec, src)));
      ASSERT_NE(it, counts.end());
      ++it->second;
    }
    double chi2 = 0.0;
    for (const auto& [_, k] : counts) chi2 += (k - 100.0) * (k - 100.0) / 100.0;
    // Wilson-Hilferty approximation of the 99.9th percentile.
    const double df = static_cast<double>(n - 1);
    const double h = 2.0 / (9.0 * df);
    const double critical = df * std::pow(1.0 - h + 3.09 * std::sqrt(h), 3);
    EXPECT_LT(chi2, critical) << mode << " over " << n << " configurations";
  }
}

}  // namespace
}  // namespace nasx
