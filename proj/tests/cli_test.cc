#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <sstream>

#include "nasx/backend.h"
#include "nasx/cli.h"
#include "nasx/errors.h"
#include "support.h"

namespace nasx {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nasx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Study over the example space (depth 1..3) with an accuracy objective,
// a latency objective and a parameter budget.
fs::path write_study(const fs::path& dir, const std::string& extra = "") {
  write(dir / "space.yaml", testing::example_space_text("[1, 2, 3]"));
  write(dir / "study.yaml",
        "space: space.yaml\n"
        "output: out\n"
        "budget: 25\n"
        "seed: 3\n"
        "criteria:\n"
        "  - {estimator: accuracy, kind: objective, weight: 1.0}\n"
        "  - {estimator: latency, kind: objective, weight: 0.2, bounds: [0.0, 0.001]}\n"
        "  - {estimator: params, kind: hard, threshold: 60000}\n" +
            extra);
  return dir / "study.yaml";
}

TEST(StudyFile, ParsesAllKeys) {
  const auto f = parse_study_file(
      "space: s.yaml\noutput: o\nbudget: 7\nseed: 9\nsampler: evolutionary\n"
      "evolution: {population: 4, offspring: 3, mutation_rate: 0.5, "
      "elite_fraction: 0.25}\nparallelism: 2\nhardware_in_loop: true\n"
      "backend: c\nproxy: {seed: 5, noise: 0.2}\nsignal_seed: 11\n"
      "device: {throughput: 2e9, layer_overhead: 0.0, memory_capacity: 1000, "
      "jitter: 0.05}\n"
      "criteria:\n  - {estimator: accuracy, kind: objective, weight: 2}\n"
      "  - {estimator: memory, kind: soft, weight: 0.5, threshold: 100, "
      "bounds: [0, 1000]}\n",
      "/base");
  EXPECT_EQ(f.space_path, "/base/s.yaml");
  EXPECT_EQ(f.output_dir, "/base/o");
  const StudyConfig& c = f.config;
  EXPECT_EQ(c.budget, 7u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.sampler, SamplerKind::kEvolutionary);
  EXPECT_EQ(c.evolution.population, 4u);
  EXPECT_EQ(c.evolution.offspring, 3u);
  EXPECT_EQ(c.evolution.mutation_rate, 0.5);
  EXPECT_EQ(c.evolution.elite_fraction, 0.25);
  EXPECT_EQ(c.parallelism, 2);
  EXPECT_TRUE(c.hardware_in_loop);
  EXPECT_EQ(c.backend, "c");
  EXPECT_EQ(c.proxy_seed, 5u);
  EXPECT_EQ(c.proxy_noise, 0.2);
  EXPECT_EQ(c.signal_seed, std::optional<std::uint64_t>(11));
  EXPECT_EQ(c.device.throughput, 2e9);
  EXPECT_EQ(c.device.memory_capacity, 1000);
  ASSERT_EQ(c.criteria.size(), 2u);
  EXPECT_EQ(c.criteria[1].kind, CriterionKind::kSoftConstraint);
  EXPECT_EQ(c.criteria[1].threshold, std::optional<double>(100));
  EXPECT_EQ(c.criteria[1].bounds.hi, 1000);
}

TEST(StudyFile, RejectsUnknownKeys) {
  EXPECT_THROW(parse_study_file("space: s.yaml\nbudgte: 3\ncriteria: []\n"),
               SchemaError);
  EXPECT_THROW(parse_study_file("space: [\n"), SyntaxError);
}

TEST(Cli, InspectValidSpace) {
  testing::TempDir dir;
  write(dir.path() / "space.yaml", testing::example_space_text());
  const auto r = cli({"inspect", (dir.path() / "space.yaml").string(),
                      "--sample", "2", "--seed", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("valid; 898776 configurations"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("parameters:"), std::string::npos);
  EXPECT_NE(r.out.find("kernel_size"), std::string::npos);
  EXPECT_NE(r.out.find("sample 1: "), std::string::npos);
}

TEST(Cli, InspectInvalidSpaceExits2) {
  const auto r = cli({"inspect", testing::data_path("dangling_ref.yaml")});
  EXPECT_EQ(r.code, kExitInvalid);
  EXPECT_NE(r.err.find("feature"), std::string::npos) << r.err;
  // An unreadable file breaks a precondition; it is not an invalid spec.
  EXPECT_EQ(cli({"inspect", "/nonexistent/space.yaml"}).code, kExitOther);
}

TEST(Cli, UsageErrorsAndHelp) {
  EXPECT_EQ(cli({}).code, kExitOther);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitOther);
  EXPECT_EQ(cli({"--help"}).code, kExitOk);
}

TEST(Cli, ExploreWritesArtifactsDeterministically) {
  testing::TempDir dir;
  const auto study = write_study(dir.path()).string();
  const auto a = cli({"explore", study, "--out", (dir.path() / "a").string()});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  const auto b = cli({"explore", study, "--out", (dir.path() / "b").string(),
                      "--parallelism", "4"});
  ASSERT_EQ(b.code, kExitOk) << b.err;
  const std::string ha = testing::read_text((dir.path() / "a/history.jsonl").string());
  EXPECT_EQ(ha, testing::read_text((dir.path() / "b/history.jsonl").string()));
  EXPECT_EQ(std::count(ha.begin(), ha.end(), '\n'), 25);
  EXPECT_EQ(testing::read_text((dir.path() / "a/best.json").string()),
            testing::read_text((dir.path() / "b/best.json").string()));
  const std::string summary =
      testing::read_text((dir.path() / "a/summary.txt").string());
  EXPECT_NE(summary.find("trials: 25"), std::string::npos) << summary;
  EXPECT_NE(summary.find("best trial:"), std::string::npos);
  // The output key in the file is honoured when --out is absent.
  ASSERT_EQ(cli({"explore", study, "--budget", "3"}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.path() / "out/history.jsonl"));
}

TEST(Cli, ExploreWithoutCompleteTrialExits3) {
  testing::TempDir dir;
  write(dir.path() / "space.yaml", testing::example_space_text("[1]"));
  write(dir.path() / "study.yaml",
        "space: space.yaml\nbudget: 5\ncriteria:\n"
        "  - {estimator: accuracy, kind: objective, weight: 1}\n"
        "  - {estimator: params, kind: hard, threshold: 10}\n");
  const auto r = cli({"explore", (dir.path() / "study.yaml").string(), "--out",
                      (dir.path() / "o").string()});
  EXPECT_EQ(r.code, kExitNoCompleteTrial);
  EXPECT_TRUE(fs::exists(dir.path() / "o/history.jsonl"));
  EXPECT_FALSE(fs::exists(dir.path() / "o/best.json"));
}

TEST(Cli, HardwareInLoopOnlyChangesLatency) {
  testing::TempDir dir;
  const auto study = write_study(dir.path(), "device: {jitter: 0.05}\n").string();
  ASSERT_EQ(cli({"explore", study, "--out", (dir.path() / "a").string()}).code, 0);
  ASSERT_EQ(cli({"explore", study, "--hardware-in-loop", "--out",
                 (dir.path() / "b").string()})
                .code,
            0);
  std::ifstream fa(dir.path() / "a/history.jsonl"), fb(dir.path() / "b/history.jsonl");
  const auto ha = read_history(fa), hb = read_history(fb);
  ASSERT_EQ(ha.size(), hb.size());
  bool latency_changed = false;
  for (std::size_t i = 0; i < ha.size(); ++i) {
    EXPECT_EQ(ha[i].trace, hb[i].trace);
    ASSERT_EQ(ha[i].metrics.size(), hb[i].metrics.size());
    for (std::size_t m = 0; m < ha[i].metrics.size(); ++m) {
      if (ha[i].metrics[m].name == "latency") {
        EXPECT_GE(hb[i].metrics[m].value, ha[i].metrics[m].value);
        EXPECT_LE(hb[i].metrics[m].value, 1.05 * ha[i].metrics[m].value);
        latency_changed |= hb[i].metrics[m].value != ha[i].metrics[m].value;
      } else {
        EXPECT_EQ(hb[i].metrics[m].value, ha[i].metrics[m].value);
      }
    }
  }
  EXPECT_TRUE(latency_changed);
}

TEST(Cli, EmitCompilesAndJsonRoundTrips) {
  testing::TempDir dir;
  const auto study = write_study(dir.path()).string();
  ASSERT_EQ(cli({"explore", study}).code, kExitOk);
  const auto best = (dir.path() / "out/best.json").string();

  const auto c = cli({"emit", best, "--target", "c", "--out",
                      (dir.path() / "c").string()});
  ASSERT_EQ(c.code, kExitOk) << c.err;
  SourceBundle bundle;
  for (const char* name : {"model.h", "model.c", "weights.c", "bench_main.c"}) {
    bundle.files[name] = testing::read_text((dir.path() / "c" / name).string());
  }
  const testing::CompiledModel binary(bundle, dir.path() / "cc");
  EXPECT_TRUE(std::regex_search(binary.run_bench(2), std::regex("latency_us: ")));

  const auto j = cli({"emit", best, "--target", "json", "--out",
                      (dir.path() / "j").string()});
  ASSERT_EQ(j.code, kExitOk) << j.err;
  const auto model = (dir.path() / "j/model.json").string();
  const auto doc = nlohmann::json::parse(testing::read_text(model));
  EXPECT_TRUE(doc.contains("weights"));
  const auto r = cli({"inspect", model});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("valid graph;"), std::string::npos);

  // The embedded weights are the ones the C bundle was generated from.
  const auto imported = import_json(doc);
  EXPECT_EQ(generate_c(imported.graph, *imported.params).files, bundle.files);
}

TEST(Cli, EmitUnsupportedOpExits4) {
  testing::TempDir dir;
  nlohmann::json doc = {
      {"format_version", 1},
      {"input_shape", {4}},
      {"output_shape", {4}},
      {"layers",
       {{{"op", "gelu"}, {"params", nlohmann::json::object()},
         {"in_shape", {4}}, {"out_shape", {4}}, {"synthetic", false},
         {"weight_refs", nlohmann::json::array()}}}}};
  write(dir.path() / "g.json", doc.dump());
  const auto r = cli({"emit", (dir.path() / "g.json").string(), "--out",
                      (dir.path() / "o").string()});
  EXPECT_EQ(r.code, kExitCapability) << r.err;
  EXPECT_NE(r.err.find("gelu"), std::string::npos);
}

TEST(Cli, BinarySmokeTest) {
  std::string out;
  const int code =
      testing::run_command(std::string(NASX_CLI) + " inspect " +
                               testing::data_path("example_space.yaml") + " 2>&1",
                           &out);
  EXPECT_EQ(code, 0) << out;
  EXPECT_NE(out.find("898776"), std::string::npos);
}

}  // namespace
}  // namespace nasx
