#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nasx/param.h"
#include "nasx/preprocess.h"
#include "nasx/registry.h"
#include "nasx/search_space.h"

namespace nasx {

// Ordered (key, chosen value) pairs, one per decision point.
using SamplingTrace = std::vector<std::pair<std::string, ParamValue>>;

struct ResolvedLayer {
  std::string block_path;  // e.g. features.rep0.conv-block.conv
  std::string op;
  ParamMap params;  // sampled parameters only; builders add defaults

  bool operator==(const ResolvedLayer&) const = default;
};

// One fully resolved candidate.
struct ArchitectureIR {
  std::vector<ResolvedLayer> layers;
  std::optional<ResolvedPreproc> preproc;
  SamplingTrace trace;

  bool operator==(const ArchitectureIR&) const = default;
};

// Source of decisions for the sampler. Only domains with more than one
// value are ever suggested.
class TrialSource {
 public:
  virtual ~TrialSource() = default;
  virtual ParamValue suggest(const std::string& key,
                             const ParamDomain& domain) = 0;

  // Structural decisions (depth, op) also carry the number of
  // configurations below each value. The default ignores them.
  virtual ParamValue suggest_structural(const std::string& key,
                                        const ParamDomain& domain,
                                        const std::vector<double>& weights) {
    (void)weights;
    return suggest(key, domain);
  }
};

// Uniform over configurations: structural choices are weighted by the size
// of the sub-space they lead to, parameter values are drawn uniformly.
// Driven by a seeded 64-bit Mersenne twister.
class RandomTrialSource final : public TrialSource {
 public:
  explicit RandomTrialSource(std::uint64_t seed) : rng_(seed) {}
  ParamValue suggest(const std::string& key,
                     const ParamDomain& domain) override;
  ParamValue suggest_structural(const std::string& key,
                                const ParamDomain& domain,
                                const std::vector<double>& weights) override;

 private:
  std::mt19937_64 rng_;
};

// Replays a recorded trace. Throws ResolutionError for a missing key or a
// value outside the domain.
class ReplaySource final : public TrialSource {
 public:
  explicit ReplaySource(const SamplingTrace& trace);
  ParamValue suggest(const std::string& key,
                     const ParamDomain& domain) override;

 private:
  std::map<std::string, ParamValue> values_;
};

ArchitectureIR sample_architecture(const SearchSpaceSpec& spec,
                                   TrialSource& trial,
                                   const Registry& registry =
                                       default_registry());

ArchitectureIR replay_architecture(const SearchSpaceSpec& spec,
                                   const SamplingTrace& trace,
                                   const Registry& registry =
                                       default_registry());

struct ParameterKey {
  std::string key;
  ParamDomain domain;
};

// Every key any trial can materialize, in sampling order (pre-processing,
// then blocks in document order; depth keys before per-layer keys).
std::vector<ParameterKey> parameter_keys(const SearchSpaceSpec& spec,
                                         const Registry& registry =
                                             default_registry());

// Visits every distinct IR once in canonical order. Throws LimitError when
// the space holds more than `limit` configurations.
void for_each_configuration(
    const SearchSpaceSpec& spec, std::uint64_t limit,
    const std::function<void(const ArchitectureIR&)>& visit,
    const Registry& registry = default_registry());

std::vector<ArchitectureIR> enumerate_space(const SearchSpaceSpec& spec,
                                            std::uint64_t limit,
                                            const Registry& registry =
                                                default_registry());

// Stable single-line text form of an IR's structure (no trace).
std::string describe_ir(const ArchitectureIR& ir);

}  // namespace nasx
