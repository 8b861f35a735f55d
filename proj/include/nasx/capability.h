#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "nasx/param.h"
#include "nasx/registry.h"
#include "nasx/search_space.h"

namespace nasx {

// What a backend can deploy: op names plus optional inclusive upper
// bounds on integer parameters (e.g. conv1d.out_channels <= 32).
struct CapabilitySet {
  std::set<std::string> ops;
  std::map<std::string, std::map<std::string, std::int64_t>> max_params;

  bool supports(std::string_view op) const;
  bool within_limits(std::string_view op, const std::string& param,
                     const ParamValue& value) const;
  // Throws CapabilityError naming the first unsupported op or limit.
  void check_layer(std::string_view op, const ParamMap& params) const;

  bool operator==(const CapabilitySet&) const = default;
};

// Removes unsupported ops from every candidate list and out-of-limit
// values from every domain. Throws CapabilityError when the capability set
// is empty or a block is left without candidates.
SearchSpaceSpec restrict_to_capabilities(const SearchSpaceSpec& spec,
                                         const CapabilitySet& caps,
                                         const Registry& registry =
                                             default_registry());

}  // namespace nasx
