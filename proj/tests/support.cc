#include "support.h"

#include <unistd.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nasx::testing {

std::string data_path(const std::string& name) {
  return std::string(NASX_TEST_DATA) + "/" + name;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string example_space_text(const std::string& depth) {
  std::string text = read_text(data_path("example_space.yaml"));
  const std::string full = "[1, 2, 3, 4, 5, 6]";
  const auto pos = text.find(full);
  if (pos == std::string::npos) throw std::runtime_error("example space changed");
  text.replace(pos, full.size(), depth);
  return text;
}

SearchSpaceSpec example_space(const std::string& depth) {
  return parse_spec(example_space_text(depth));
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("nasx-test-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

namespace {

template <typename T>
T pick(std::mt19937_64& rng, const std::vector<T>& xs) {
  return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

bool coin(std::mt19937_64& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

// Non-empty random subset, original order kept.
std::vector<std::string> subset(std::mt19937_64& rng,
                                const std::vector<std::string>& xs) {
  std::vector<std::string> out;
  while (out.empty()) {
    out.clear();
    for (const auto& x : xs) {
      if (coin(rng)) out.push_back(x);
    }
  }
  return out;
}

std::string list(const std::vector<std::string>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
  return s + "]";
}

std::string params_for(std::mt19937_64& rng, const std::string& op,
                       const std::string& indent) {
  std::string s;
  if (op == "conv1d") {
    s += indent + "conv1d:\n";
    s += indent + "  kernel_size: " + list(subset(rng, {"1", "3"})) + "\n";
    if (coin(rng)) {
      s += indent + "  out_channels: " + list(subset(rng, {"2", "4"})) + "\n";
    }
  } else if (op == "linear") {
    s += indent + "linear:\n";
    s += indent + "  width: " + list(subset(rng, {"3", "5"})) + "\n";
  } else if (op == "maxpool" && coin(rng)) {
    s += indent + "maxpool:\n";
    s += indent + "  kernel_size: " + list(subset(rng, {"2", "3"})) + "\n";
  }
  return s;
}

std::string block_yaml(std::mt19937_64& rng, const std::string& name,
                       const std::vector<std::string>& ops,
                       const std::vector<std::string>& earlier,
                       const std::string& indent, bool allow_repeat) {
  std::string s = indent + "- block: \"" + name + "\"\n";
  const std::string in = indent + "  ";
  const int mode = allow_repeat ? std::uniform_int_distribution<int>(0, 4)(rng)
                                : 0;
  if (mode == 4 && !earlier.empty()) {
    s += in + "type_repeat:\n";
    s += in + "  type: \"repeat_block\"\n";
    s += in + "  ref_block: \"" + pick(rng, earlier) + "\"\n";
    return s;
  }
  const auto candidates = subset(rng, ops);
  s += in + "op_candidates: " + list(candidates) + "\n";
  if (mode >= 1 && mode <= 3) {
    static const char* kModes[] = {"", "vary_all", "repeat_params",
                                   "repeat_op"};
    s += in + "type_repeat:\n";
    s += in + "  type: \"" + kModes[mode] + "\"\n";
    s += in + "  depth: " + list(subset(rng, {"1", "2"})) + "\n";
  }
  for (const auto& op : candidates) s += params_for(rng, op, in);
  return s;
}

}  // namespace

std::string random_spec_yaml(std::mt19937_64& rng) {
  std::string s = "input: [2, 64]\noutput: 3\n";
  const bool with_cell = coin(rng);
  std::vector<std::string> ops = {"conv1d", "maxpool", "relu", "identity"};
  if (with_cell) ops.push_back("cell");
  s += "sequence:\n";
  std::vector<std::string> earlier;
  const int blocks = std::uniform_int_distribution<int>(1, 3)(rng);
  for (int b = 0; b < blocks; ++b) {
    const std::string name = "b" + std::to_string(b);
    s += block_yaml(rng, name, ops, earlier, "  ", true);
    earlier.push_back(name);
  }
  if (coin(rng)) s += block_yaml(rng, "head", {"linear"}, {}, "  ", false);
  s += "default_op_params:\n  conv1d:\n    kernel_size: [1, 3]\n"
       "    out_channels: 2\n";
  if (with_cell) {
    s += "composites:\n  cell:\n    sequence:\n";
    s += block_yaml(rng, "c0", {"conv1d", "identity"}, {}, "      ", false);
    s += block_yaml(rng, "c1", {"relu", "maxpool"}, {}, "      ", false);
  }
  return s;
}

Tensor random_tensor(const std::vector<std::int64_t>& shape,
                     std::mt19937_64& rng, float lo, float hi) {
  Tensor t(shape);
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& v : t.values) v = u(rng);
  return t;
}

int run_command(const std::string& command, std::string* out) {
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed: " + command);
  std::array<char, 4096> buf{};
  std::string text;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    text.append(buf.data(), n);
  }
  const int status = ::pclose(pipe);
  if (out != nullptr) *out = std::move(text);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

CompiledModel::CompiledModel(const SourceBundle& bundle,
                             const std::filesystem::path& dir) {
  bundle.write_to(dir.string());
  binary_ = dir / "bench";
  const std::string cmd =
      std::string(NASX_C_COMPILER) +
      " -std=c99 -pedantic-errors -Wall -Wextra -Werror -O1 -o " +
      binary_.string() + " " + (dir / "model.c").string() + " " +
      (dir / "weights.c").string() + " " + (dir / "bench_main.c").string() +
      " 2>&1";
  std::string log;
  if (run_command(cmd, &log) != 0) {
    throw std::runtime_error("C compile failed:\n" + log);
  }
}

std::vector<std::vector<float>> CompiledModel::run(
    const std::vector<Tensor>& inputs) const {
  const auto in_path = binary_.parent_path() / "inputs.txt";
  {
    std::ofstream f(in_path);
    char buf[32];
    for (const auto& t : inputs) {
      for (float v : t.values) {
        std::snprintf(buf, sizeof(buf), "%.9g ", static_cast<double>(v));
        f << buf;
      }
      f << "\n";
    }
  }
  std::string out;
  if (run_command(binary_.string() + " --io < " + in_path.string(), &out) !=
      0) {
    throw std::runtime_error("generated binary failed");
  }
  std::vector<std::vector<float>> rows;
  std::istringstream lines(out);
  for (std::string line; std::getline(lines, line);) {
    std::istringstream fields(line);
    std::vector<float> row;
    for (std::string tok; fields >> tok;) row.push_back(std::strtof(tok.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string CompiledModel::run_bench(int iterations) const {
  std::string out;
  if (run_command(binary_.string() + " " + std::to_string(iterations), &out) !=
      0) {
    throw std::runtime_error("generated benchmark failed");
  }
  return out;
}

double max_relative_error(const std::vector<float>& a,
                          const std::vector<float>& b) {
  if (a.size() != b.size()) return INFINITY;
  double scale = 0.0;
  for (float v : b) scale = std::max(scale, std::fabs(static_cast<double>(v)));
  const double floor = std::max(1e-3 * scale, 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max(std::fabs(static_cast<double>(b[i])), floor);
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - b[i]) / denom);
  }
  return worst;
}

double norm_relative_error(const std::vector<float>& a,
                           const std::vector<float>& b) {
  if (a.size() != b.size()) return INFINITY;
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::fabs(static_cast<double>(a[i]) - b[i]));
    scale = std::max(scale, std::fabs(static_cast<double>(b[i])));
  }
  return scale > 0.0 ? diff / scale : diff;
}

}  // namespace nasx::testing
