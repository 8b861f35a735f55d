#include "nasx/capability.h"

#include "nasx/errors.h"

namespace nasx {
namespace {

void restrict_domains(OpParamDomains& params, const CapabilitySet& caps,
                      const std::string& where) {
  for (auto& [op, section] : params) {
    for (auto& [name, domain] : section) {
      auto kept = domain.filtered([&](const ParamValue& v) {
        return caps.within_limits(op, name, v);
      });
      if (kept.empty()) {
        throw CapabilityError(where + ": no value of " + op + "." + name +
                              " is within backend limits");
      }
      if (kept.size() != domain.size()) {
        domain = domain.is_fixed() ? ParamDomain::fixed(kept.front())
                                   : ParamDomain::choices(std::move(kept));
      }
    }
  }
}

void restrict_sequence(std::vector<BlockSpec>& seq, const SearchSpaceSpec& spec,
                       const CapabilitySet& caps) {
  for (auto& block : seq) {
    if (block.repeat && block.repeat->mode == RepeatMode::kRepeatBlock) {
      continue;
    }
    std::vector<std::string> kept;
    for (const auto& op : block.op_candidates) {
      if (spec.is_composite(op) || caps.supports(op)) kept.push_back(op);
    }
    if (kept.empty()) {
      throw CapabilityError("block '" + block.name +
                            "' has no candidate supported by the backend");
    }
    for (auto it = block.local_params.begin();
         it != block.local_params.end();) {
      if (std::find(kept.begin(), kept.end(), it->first) == kept.end()) {
        it = block.local_params.erase(it);
      } else {
        ++it;
      }
    }
    block.op_candidates = std::move(kept);
    restrict_domains(block.local_params, caps, "block '" + block.name + "'");
  }
}

}  // namespace

bool CapabilitySet::supports(std::string_view op) const {
  return ops.find(std::string(op)) != ops.end();
}

bool CapabilitySet::within_limits(std::string_view op, const std::string& param,
                                  const ParamValue& value) const {
  auto op_it = max_params.find(std::string(op));
  if (op_it == max_params.end()) return true;
  auto it = op_it->second.find(param);
  if (it == op_it->second.end()) return true;
  if (kind_of(value) == ParamKind::kInt) return as_int(value) <= it->second;
  if (kind_of(value) == ParamKind::kFloat) {
    return as_double(value) <= static_cast<double>(it->second);
  }
  return true;
}

void CapabilitySet::check_layer(std::string_view op,
                                const ParamMap& params) const {
  if (!supports(op)) {
    throw CapabilityError("op '" + std::string(op) +
                          "' is not supported by the bound backend");
  }
  for (const auto& [name, value] : params) {
    if (!within_limits(op, name, value)) {
      throw CapabilityError(std::string(op) + "." + name + "=" +
                            to_string(value) + " exceeds the backend limit");
    }
  }
}

SearchSpaceSpec restrict_to_capabilities(const SearchSpaceSpec& spec,
                                         const CapabilitySet& caps,
                                         const Registry& registry) {
  if (caps.ops.empty()) {
    throw CapabilityError("backend declares an empty capability set");
  }
  SearchSpaceSpec out = spec;
  restrict_sequence(out.sequence, spec, caps);
  for (auto& [name, seq] : out.composites) restrict_sequence(seq, spec, caps);
  restrict_domains(out.default_op_params, caps, "default_op_params");
  validate_spec(out, registry);
  return out;
}

}  // namespace nasx
