#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nasx/backend.h"
#include "nasx/search_space.h"
#include "nasx/tensor.h"

namespace nasx::testing {

std::string data_path(const std::string& name);
std::string read_text(const std::string& path);
// The conv-block example space (tests/data/example_space.yaml), optionally
// with the features depth list replaced.
std::string example_space_text(const std::string& depth = "[1, 2, 3, 4, 5, 6]");
SearchSpaceSpec example_space(const std::string& depth = "[1, 2, 3, 4, 5, 6]");

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// YAML text of a small random spec mixing all repeat modes, composites and
// default parameters. Bounded so enumeration stays cheap.
std::string random_spec_yaml(std::mt19937_64& rng);

Tensor random_tensor(const std::vector<std::int64_t>& shape,
                     std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f);

// Compiles a generated C bundle with the strict C99 toolchain and runs it
// in --io mode over `inputs`. Throws std::runtime_error on failure.
class CompiledModel {
 public:
  CompiledModel(const SourceBundle& bundle, const std::filesystem::path& dir);
  std::vector<std::vector<float>> run(const std::vector<Tensor>& inputs) const;
  std::string run_bench(int iterations) const;
  const std::filesystem::path& binary() const { return binary_; }

 private:
  std::filesystem::path binary_;
};

// Runs `command` through the shell; returns exit status, captures stdout.
int run_command(const std::string& command, std::string* out = nullptr);

// Max over elements of |a - b| / max(|b|, 1e-3 * scale), where scale is
// the largest |b|: relative error with a floor for near-zero outputs.
double max_relative_error(const std::vector<float>& a,
                          const std::vector<float>& b);

// Norm-wise relative error max|a - b| / max|b|.
double norm_relative_error(const std::vector<float>& a,
                           const std::vector<float>& b);

}  // namespace nasx::testing
