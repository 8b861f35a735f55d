#include "nasx/search_space.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "nasx/errors.h"

namespace nasx {
namespace {

std::string where(const YAML::Node& node) {
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) return "";
  return "line " + std::to_string(mark.line + 1) + ", column " +
         std::to_string(mark.column + 1) + ": ";
}

[[noreturn]] void schema_fail(const YAML::Node& node, const std::string& msg) {
  throw SchemaError(where(node) + msg);
}

// Map entries in document order; duplicate keys are rejected.
std::vector<std::pair<std::string, YAML::Node>> map_entries(
    const YAML::Node& node, const std::string& what) {
  if (!node.IsMap()) schema_fail(node, what + " must be a mapping");
  std::vector<std::pair<std::string, YAML::Node>> entries;
  std::set<std::string> seen;
  for (const auto& kv : node) {
    if (!kv.first.IsScalar()) schema_fail(kv.first, what + " keys must be scalars");
    std::string key = kv.first.Scalar();
    if (!seen.insert(key).second) {
      schema_fail(kv.first, "duplicate key '" + key + "' in " + what);
    }
    entries.emplace_back(std::move(key), kv.second);
  }
  return entries;
}

ParamValue parse_scalar(const YAML::Node& node) {
  if (!node.IsScalar()) schema_fail(node, "expected a scalar value");
  const std::string& text = node.Scalar();
  // Quoted scalars are always strings.
  if (node.Tag() == "!") return text;
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  static const std::regex int_re("[-+]?[0-9]+");
  if (std::regex_match(text, int_re)) {
    std::int64_t v = 0;
    const char* first = text.data() + (text[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      schema_fail(node, "integer out of range: " + text);
    }
    return v;
  }
  static const std::regex float_re(
      "[-+]?([0-9]+\\.?[0-9]*|\\.[0-9]+)([eE][-+]?[0-9]+)?");
  if (std::regex_match(text, float_re)) {
    return std::stod(text);
  }
  return text;
}

ParamDomain parse_domain(const YAML::Node& node) {
  try {
    if (node.IsSequence()) {
      std::vector<ParamValue> values;
      for (const auto& item : node) values.push_back(parse_scalar(item));
      return ParamDomain::choices(std::move(values));
    }
    return ParamDomain::fixed(parse_scalar(node));
  } catch (const std::invalid_argument& e) {
    schema_fail(node, e.what());
  }
}

std::string parse_name(const YAML::Node& node, const std::string& what) {
  if (!node.IsScalar() || node.Scalar().empty()) {
    schema_fail(node, what + " must be a non-empty string");
  }
  return node.Scalar();
}

std::vector<std::string> parse_name_list(const YAML::Node& node,
                                         const std::string& what) {
  std::vector<std::string> names;
  if (node.IsSequence()) {
    for (const auto& item : node) names.push_back(parse_name(item, what));
  } else {
    names.push_back(parse_name(node, what));
  }
  if (names.empty()) schema_fail(node, what + " must not be empty");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      schema_fail(node, "duplicate entry '" + n + "' in " + what);
    }
  }
  return names;
}

std::vector<std::int64_t> parse_extents(const YAML::Node& node,
                                        const std::string& what) {
  std::vector<std::int64_t> extents;
  auto take = [&](const YAML::Node& item) {
    ParamValue v = parse_scalar(item);
    if (kind_of(v) != ParamKind::kInt || std::get<std::int64_t>(v) < 1) {
      schema_fail(item, what + " extents must be positive integers");
    }
    extents.push_back(std::get<std::int64_t>(v));
  };
  if (node.IsSequence()) {
    for (const auto& item : node) take(item);
  } else {
    take(node);
  }
  if (extents.empty()) schema_fail(node, what + " must not be empty");
  return extents;
}

std::map<std::string, ParamDomain> parse_param_map(const YAML::Node& node,
                                                   const std::string& what) {
  std::map<std::string, ParamDomain> params;
  if (node.IsNull()) return params;
  for (auto& [name, value] : map_entries(node, what)) {
    params.emplace(name, parse_domain(value));
  }
  return params;
}

RepeatMode parse_mode(const YAML::Node& node) {
  const std::string text = parse_name(node, "type_repeat.type");
  if (text == "repeat_op") return RepeatMode::kRepeatOp;
  if (text == "repeat_params") return RepeatMode::kRepeatParams;
  if (text == "vary_all") return RepeatMode::kVaryAll;
  if (text == "repeat_block") return RepeatMode::kRepeatBlock;
  schema_fail(node, "unknown repeat type '" + text + "'");
}

RepeatSpec parse_repeat(const YAML::Node& node) {
  RepeatSpec repeat;
  bool has_type = false;
  for (auto& [key, value] : map_entries(node, "type_repeat")) {
    if (key == "type") {
      repeat.mode = parse_mode(value);
      has_type = true;
    } else if (key == "depth") {
      repeat.depth = parse_domain(value);
    } else if (key == "ref_block" || key == "reference_block") {
      repeat.ref_block = parse_name(value, "ref_block");
    } else {
      schema_fail(value, "unknown key '" + key + "' in type_repeat");
    }
  }
  if (!has_type) schema_fail(node, "type_repeat requires 'type'");
  return repeat;
}

// Shared by sequence blocks and pre-processing stages: name key, op
// candidates, optional extra keys, and one parameter section per candidate.
template <typename ExtraKey>
void parse_op_section(const YAML::Node& node, const std::string& name_key,
                      std::string& name, std::vector<std::string>& candidates,
                      OpParamDomains& params, const Registry& registry,
                      ExtraKey&& extra) {
  const auto entries = map_entries(node, "block");
  bool has_name = false;
  for (const auto& [key, value] : entries) {
    if (key == name_key) {
      name = parse_name(value, name_key);
      has_name = true;
    } else if (key == "op_candidates") {
      candidates = parse_name_list(value, "op_candidates");
    }
  }
  if (!has_name) schema_fail(node, "missing '" + name_key + "' key");
  for (const auto& [key, value] : entries) {
    if (key == name_key || key == "op_candidates" || extra(key, value)) {
      continue;
    }
    if (std::find(candidates.begin(), candidates.end(), key) !=
        candidates.end()) {
      params.emplace(key, parse_param_map(value, key + " parameters"));
    } else if (registry.has_layer(key) || is_preproc_op(key)) {
      schema_fail(value, "parameters for '" + key + "' in '" + name +
                             "', which is not one of its op_candidates");
    } else {
      schema_fail(value, "unknown key '" + key + "' in '" + name + "'");
    }
  }
}

BlockSpec parse_block(const YAML::Node& node, const Registry& registry) {
  BlockSpec block;
  parse_op_section(node, "block", block.name, block.op_candidates,
                   block.local_params, registry,
                   [&](const std::string& key, const YAML::Node& value) {
                     if (key != "type_repeat") return false;
                     block.repeat = parse_repeat(value);
                     return true;
                   });
  const bool is_ref =
      block.repeat && block.repeat->mode == RepeatMode::kRepeatBlock;
  if (block.op_candidates.empty() && !is_ref) {
    schema_fail(node, "block '" + block.name + "' needs op_candidates");
  }
  if (!block.op_candidates.empty() && is_ref) {
    schema_fail(node, "repeat_block block '" + block.name +
                          "' reuses its reference's op_candidates and must "
                          "not declare its own");
  }
  return block;
}

std::vector<BlockSpec> parse_sequence(const YAML::Node& node,
                                      const Registry& registry) {
  if (!node.IsSequence()) schema_fail(node, "sequence must be a list");
  std::vector<BlockSpec> blocks;
  for (const auto& item : node) blocks.push_back(parse_block(item, registry));
  if (blocks.empty()) schema_fail(node, "sequence must not be empty");
  return blocks;
}

PreprocSpaceSpec parse_preprocessing(const YAML::Node& node,
                                     const Registry& registry) {
  if (!node.IsSequence()) schema_fail(node, "preprocessing must be a list");
  PreprocSpaceSpec pre;
  for (const auto& item : node) {
    PreprocStageSpec stage;
    parse_op_section(item, "stage", stage.name, stage.op_candidates,
                     stage.params, registry,
                     [](const std::string&, const YAML::Node&) {
                       return false;
                     });
    if (stage.op_candidates.empty()) {
      schema_fail(item, "stage '" + stage.name + "' needs op_candidates");
    }
    pre.stages.push_back(std::move(stage));
  }
  return pre;
}

// ---- semantic validation -------------------------------------------------

std::optional<std::vector<ParamSpec>> declared_params(
    std::string_view op, const Registry& registry) {
  if (const LayerBuilder* b = registry.find_layer(op)) return b->params();
  if (is_preproc_op(op)) return preproc_op_params(op);
  return std::nullopt;
}

void check_domain_kind(const std::string& where_text, const ParamSpec& spec,
                       const ParamDomain& domain) {
  const ParamKind k = domain.kind();
  const bool ok = k == spec.kind ||
                  (spec.kind == ParamKind::kFloat && k == ParamKind::kInt);
  if (!ok) {
    throw SchemaError(where_text + ": parameter '" + spec.name + "' expects " +
                      std::string(kind_name(spec.kind)) + ", got " +
                      std::string(kind_name(k)));
  }
}

void check_param_section(const std::string& where_text, std::string_view op,
                         const std::map<std::string, ParamDomain>& params,
                         const Registry& registry) {
  const auto declared = declared_params(op, registry);
  if (!declared) {
    throw SchemaError(where_text + ": unknown op '" + std::string(op) + "'");
  }
  const std::vector<ParamSpec>& specs = *declared;
  for (const auto& [name, domain] : params) {
    auto it = std::find_if(specs.begin(), specs.end(),
                           [&](const ParamSpec& s) { return s.name == name; });
    if (it == specs.end()) {
      throw SchemaError(where_text + ": op '" + std::string(op) +
                        "' has no parameter '" + name + "'");
    }
    check_domain_kind(where_text, *it, domain);
    if (is_preproc_op(op) && !registry.has_layer(op)) {
      for (const auto& v : domain.values()) check_preproc_value(op, name, v);
    }
  }
}

void validate_block_sequence(const SearchSpaceSpec& spec,
                             const std::vector<BlockSpec>& seq,
                             const std::string& context,
                             const Registry& registry) {
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const BlockSpec& b = seq[i];
    const std::string here = context + " block '" + b.name + "'";
    if (b.repeat) {
      const RepeatSpec& r = *b.repeat;
      if (r.mode == RepeatMode::kRepeatBlock) {
        if (!r.ref_block) {
          throw SchemaError(here + ": repeat_block requires ref_block");
        }
        if (r.depth) {
          throw SchemaError(here + ": repeat_block does not take a depth");
        }
        if (!b.op_candidates.empty() || !b.local_params.empty()) {
          throw SchemaError(here +
                            ": repeat_block reuses the referenced block's "
                            "candidates and parameters");
        }
        auto found = std::find_if(
            seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(i),
            [&](const BlockSpec& o) { return o.name == *r.ref_block; });
        if (found == seq.begin() + static_cast<std::ptrdiff_t>(i)) {
          throw ReferenceError(here + ": ref_block '" + *r.ref_block +
                               "' does not name an earlier block of the same "
                               "sequence");
        }
        continue;
      }
      if (r.ref_block) {
        throw SchemaError(here + ": ref_block is only valid with repeat_block");
      }
      if (!r.depth) {
        throw SchemaError(here + ": depth of type_repeat must be set for " +
                          std::string(to_string(r.mode)));
      }
      for (const auto& v : r.depth->values()) {
        if (kind_of(v) != ParamKind::kInt || std::get<std::int64_t>(v) < 1) {
          throw SchemaError(here + ": depth values must be integers >= 1");
        }
      }
    }
    if (b.op_candidates.empty()) {
      throw SchemaError(here + ": op_candidates must not be empty");
    }
    for (const auto& op : b.op_candidates) {
      if (!spec.is_composite(op) && !registry.has_layer(op)) {
        throw ReferenceError(here + ": unknown op or composite '" + op + "'");
      }
    }
    for (const auto& [op, params] : b.local_params) {
      if (std::find(b.op_candidates.begin(), b.op_candidates.end(), op) ==
          b.op_candidates.end()) {
        throw SchemaError(here + ": parameters for '" + op +
                          "', which is not a candidate");
      }
      if (spec.is_composite(op)) {
        throw SchemaError(here + ": composite '" + op +
                          "' takes no parameter section");
      }
      check_param_section(here, op, params, registry);
    }
    for (const auto& op : b.op_candidates) {
      if (spec.is_composite(op)) continue;
      resolve_param_domains(spec, b.local_params, op,
                            registry.layer(op).params());
    }
  }
}

void collect_block_names(const std::vector<BlockSpec>& seq,
                         std::set<std::string>& names,
                         const std::string& context) {
  for (const auto& b : seq) {
    if (!names.insert(b.name).second) {
      throw SchemaError(context + ": block name '" + b.name +
                        "' is not unique");
    }
  }
}

void check_composite_cycles(const SearchSpaceSpec& spec) {
  enum class Mark { kNone, kActive, kDone };
  std::map<std::string, Mark> marks;
  std::function<void(const std::string&, std::vector<std::string>&)> visit =
      [&](const std::string& name, std::vector<std::string>& stack) {
        Mark& m = marks[name];
        if (m == Mark::kDone) return;
        stack.push_back(name);
        if (m == Mark::kActive) {
          std::string path;
          for (const auto& s : stack) path += (path.empty() ? "" : " -> ") + s;
          throw ReferenceError("cyclic composite reference: " + path);
        }
        m = Mark::kActive;
        for (const auto& b : spec.composite(name)) {
          for (const auto& op : b.op_candidates) {
            if (spec.is_composite(op)) visit(op, stack);
          }
        }
        marks[name] = Mark::kDone;
        stack.pop_back();
      };
  for (const auto& [name, _] : spec.composites) {
    std::vector<std::string> stack;
    visit(name, stack);
  }
}

void validate_preprocessing(const SearchSpaceSpec& spec,
                            const Registry& registry) {
  const PreprocSpaceSpec& pre = *spec.preprocessing;
  if (spec.input_shape.size() != 2) {
    throw SchemaError(
        "preprocessing needs a [channels, length] input shape");
  }
  std::set<std::string> names;
  std::size_t window_stages = 0;
  for (const auto& stage : pre.stages) {
    const std::string here = "preprocessing stage '" + stage.name + "'";
    if (!names.insert(stage.name).second) {
      throw SchemaError(here + ": stage name is not unique");
    }
    if (stage.op_candidates.empty()) {
      throw SchemaError(here + ": op_candidates must not be empty");
    }
    bool windows = false;
    for (const auto& op : stage.op_candidates) {
      if (!is_preproc_op(op)) {
        throw ReferenceError(here + ": unknown pre-processing op '" + op + "'");
      }
      windows = windows || is_window_op(op);
    }
    window_stages += windows ? 1 : 0;
    for (const auto& [op, params] : stage.params) {
      if (std::find(stage.op_candidates.begin(), stage.op_candidates.end(),
                    op) == stage.op_candidates.end()) {
        throw SchemaError(here + ": parameters for '" + op +
                          "', which is not a candidate");
      }
      const auto& specs = preproc_op_params(op);
      for (const auto& [name, domain] : params) {
        auto it = std::find_if(specs.begin(), specs.end(), [&](const auto& s) {
          return s.name == name;
        });
        if (it == specs.end()) {
          throw SchemaError(here + ": op '" + op + "' has no parameter '" +
                            name + "'");
        }
        check_domain_kind(here, *it, domain);
        for (const auto& v : domain.values()) check_preproc_value(op, name, v);
      }
    }
    for (const auto& op : stage.op_candidates) {
      resolve_param_domains(spec, stage.params, op, preproc_op_params(op));
    }
  }
  if (window_stages > 1) {
    throw SchemaError("preprocessing may contain at most one windowing stage");
  }
  (void)registry;
}

BigCount count_sequence(const SearchSpaceSpec& spec,
                        const std::vector<BlockSpec>& seq,
                        const Registry& registry);

BigCount count_op(const SearchSpaceSpec& spec, const BlockSpec& def,
                  const std::string& op, const Registry& registry) {
  if (spec.is_composite(op)) {
    return count_sequence(spec, spec.composite(op), registry);
  }
  BigCount n = 1;
  for (const auto& [name, domain] : resolve_param_domains(
           spec, def.local_params, op, registry.layer(op).params())) {
    n *= domain.size();
  }
  return n;
}

BigCount count_block(const SearchSpaceSpec& spec,
                     const std::vector<BlockSpec>& seq, std::size_t index,
                     const Registry& registry) {
  const BlockSpec& def = block_definition(seq, index);
  std::vector<BigCount> per_op;
  BigCount single = 0;
  for (const auto& op : def.op_candidates) {
    per_op.push_back(count_op(spec, def, op, registry));
    single += per_op.back();
  }
  if (!def.repeat) return single;
  BigCount total = 0;
  for (const auto& dv : def.repeat->depth->values()) {
    const auto depth = static_cast<unsigned>(as_int(dv));
    switch (def.repeat->mode) {
      case RepeatMode::kVaryAll:
        total += boost::multiprecision::pow(single, depth);
        break;
      case RepeatMode::kRepeatParams:
        total += single;
        break;
      case RepeatMode::kRepeatOp:
        for (const auto& p : per_op) total += boost::multiprecision::pow(p, depth);
        break;
      case RepeatMode::kRepeatBlock:
        throw ReferenceError("unresolved repeat_block in '" + def.name + "'");
    }
  }
  return total;
}

BigCount count_sequence(const SearchSpaceSpec& spec,
                        const std::vector<BlockSpec>& seq,
                        const Registry& registry) {
  BigCount n = 1;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    n *= count_block(spec, seq, i, registry);
  }
  return n;
}

// ---- canonical YAML -------------------------------------------------------

void emit_value(YAML::Emitter& out, const ParamValue& v) {
  if (kind_of(v) == ParamKind::kString) {
    out << YAML::DoubleQuoted << std::get<std::string>(v);
  } else {
    out << to_string(v);
  }
}

void emit_domain(YAML::Emitter& out, const ParamDomain& d) {
  if (d.is_fixed()) {
    emit_value(out, d.at(0));
    return;
  }
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& v : d.values()) emit_value(out, v);
  out << YAML::EndSeq;
}

void emit_extents(YAML::Emitter& out, const std::vector<std::int64_t>& e) {
  out << YAML::Flow << YAML::BeginSeq;
  for (auto x : e) out << x;
  out << YAML::EndSeq;
}

void emit_names(YAML::Emitter& out, const std::vector<std::string>& names) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& n : names) out << YAML::DoubleQuoted << n;
  out << YAML::EndSeq;
}

void emit_params(YAML::Emitter& out, const OpParamDomains& params) {
  for (const auto& [op, section] : params) {
    out << YAML::Key << op << YAML::Value << YAML::BeginMap;
    for (const auto& [name, domain] : section) {
      out << YAML::Key << name << YAML::Value;
      emit_domain(out, domain);
    }
    out << YAML::EndMap;
  }
}

void emit_sequence(YAML::Emitter& out, const std::vector<BlockSpec>& seq) {
  out << YAML::BeginSeq;
  for (const auto& b : seq) {
    out << YAML::BeginMap;
    out << YAML::Key << "block" << YAML::Value << YAML::DoubleQuoted << b.name;
    if (!b.op_candidates.empty()) {
      out << YAML::Key << "op_candidates" << YAML::Value;
      emit_names(out, b.op_candidates);
    }
    if (b.repeat) {
      out << YAML::Key << "type_repeat" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "type" << YAML::Value
          << std::string(to_string(b.repeat->mode));
      if (b.repeat->depth) {
        out << YAML::Key << "depth" << YAML::Value;
        emit_domain(out, *b.repeat->depth);
      }
      if (b.repeat->ref_block) {
        out << YAML::Key << "ref_block" << YAML::Value << YAML::DoubleQuoted
            << *b.repeat->ref_block;
      }
      out << YAML::EndMap;
    }
    emit_params(out, b.local_params);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
}

}  // namespace

std::string_view to_string(RepeatMode mode) {
  switch (mode) {
    case RepeatMode::kRepeatOp:
      return "repeat_op";
    case RepeatMode::kRepeatParams:
      return "repeat_params";
    case RepeatMode::kVaryAll:
      return "vary_all";
    case RepeatMode::kRepeatBlock:
      return "repeat_block";
  }
  return "?";
}

bool SearchSpaceSpec::is_composite(std::string_view op) const {
  return composites.find(std::string(op)) != composites.end();
}

const std::vector<BlockSpec>& SearchSpaceSpec::composite(
    std::string_view name) const {
  auto it = composites.find(std::string(name));
  if (it == composites.end()) {
    throw ReferenceError("unknown composite '" + std::string(name) + "'");
  }
  return it->second;
}

SearchSpaceSpec parse_spec(std::string_view yaml_text,
                           const Registry& registry) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::ParserException& e) {
    throw SyntaxError("line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  SearchSpaceSpec spec;
  bool has_input = false, has_output = false, has_sequence = false;
  try {
    for (auto& [key, value] : map_entries(root, "search space")) {
      if (key == "input") {
        spec.input_shape = parse_extents(value, "input");
        has_input = true;
      } else if (key == "output") {
        spec.output_shape = parse_extents(value, "output");
        if (spec.output_shape.size() != 1) {
          schema_fail(value, "output must be an integer or a rank-1 shape");
        }
        has_output = true;
      } else if (key == "sequence") {
        spec.sequence = parse_sequence(value, registry);
        has_sequence = true;
      } else if (key == "default_op_params") {
        if (value.IsNull()) continue;
        for (auto& [op, params] : map_entries(value, "default_op_params")) {
          spec.default_op_params.emplace(
              op, parse_param_map(params, op + " defaults"));
        }
      } else if (key == "composites") {
        if (value.IsNull()) continue;
        for (auto& [name, body] : map_entries(value, "composites")) {
          auto entries = map_entries(body, "composite '" + name + "'");
          std::optional<std::vector<BlockSpec>> seq;
          for (auto& [ck, cv] : entries) {
            if (ck != "sequence") {
              schema_fail(cv, "unknown key '" + ck + "' in composite '" +
                                  name + "'");
            }
            seq = parse_sequence(cv, registry);
          }
          if (!seq) schema_fail(body, "composite '" + name + "' needs a sequence");
          spec.composites.emplace(name, std::move(*seq));
        }
      } else if (key == "preprocessing") {
        spec.preprocessing = parse_preprocessing(value, registry);
      } else {
        schema_fail(value, "unknown top-level key '" + key + "'");
      }
    }
  } catch (const YAML::Exception& e) {
    throw SchemaError(std::string("malformed search space: ") + e.what());
  }
  if (!has_input) schema_fail(root, "missing 'input'");
  if (!has_output) schema_fail(root, "missing 'output'");
  if (!has_sequence) schema_fail(root, "missing 'sequence'");
  validate_spec(spec, registry);
  return spec;
}

SearchSpaceSpec load_spec(const std::string& path, const Registry& registry) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_spec(buf.str(), registry);
  } catch (const SyntaxError& e) {
    throw SyntaxError(path + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  } catch (const ReferenceError& e) {
    throw ReferenceError(path + ": " + e.what());
  } catch (const ParamError& e) {
    throw ParamError(path + ": " + e.what());
  }
}

void validate_spec(const SearchSpaceSpec& spec, const Registry& registry) {
  if (spec.input_shape.empty() || spec.input_shape.size() > 2) {
    throw SchemaError("input must have rank 1 or 2");
  }
  for (auto e : spec.input_shape) {
    if (e < 1) throw SchemaError("input extents must be positive");
  }
  if (spec.output_shape.size() != 1 || spec.output_shape[0] < 1) {
    throw SchemaError("output must be a positive integer");
  }
  if (spec.sequence.empty()) throw SchemaError("sequence must not be empty");

  std::set<std::string> names;
  collect_block_names(spec.sequence, names, "sequence");
  for (const auto& [name, seq] : spec.composites) {
    if (registry.has_layer(name)) {
      throw SchemaError("composite '" + name +
                        "' shadows a registered layer of the same name");
    }
    if (seq.empty()) {
      throw SchemaError("composite '" + name + "' has an empty sequence");
    }
    collect_block_names(seq, names, "composite '" + name + "'");
  }
  for (const auto& [op, params] : spec.default_op_params) {
    if (!registry.has_layer(op) && !is_preproc_op(op)) {
      throw SchemaError("default_op_params: unknown op '" + op + "'");
    }
    check_param_section("default_op_params", op, params, registry);
  }
  check_composite_cycles(spec);
  validate_block_sequence(spec, spec.sequence, "sequence", registry);
  for (const auto& [name, seq] : spec.composites) {
    validate_block_sequence(spec, seq, "composite '" + name + "'", registry);
  }
  if (spec.preprocessing) validate_preprocessing(spec, registry);
}

std::vector<std::pair<std::string, ParamDomain>> resolve_param_domains(
    const SearchSpaceSpec& spec, const OpParamDomains& local,
    std::string_view op, const std::vector<ParamSpec>& declared) {
  std::vector<std::pair<std::string, ParamDomain>> out;
  const std::string op_name(op);
  auto local_it = local.find(op_name);
  auto global_it = spec.default_op_params.find(op_name);
  for (const auto& p : declared) {
    const ParamDomain* found = nullptr;
    if (local_it != local.end()) {
      auto it = local_it->second.find(p.name);
      if (it != local_it->second.end()) found = &it->second;
    }
    if (!found && global_it != spec.default_op_params.end()) {
      auto it = global_it->second.find(p.name);
      if (it != global_it->second.end()) found = &it->second;
    }
    if (!found) {
      if (p.mandatory) {
        throw ParamError("op '" + op_name + "': mandatory parameter '" +
                         p.name +
                         "' is defined neither locally nor in "
                         "default_op_params");
      }
      continue;
    }
    out.emplace_back(p.name, p.kind == ParamKind::kFloat ? found->as_float()
                                                         : *found);
  }
  return out;
}

const BlockSpec& block_definition(const std::vector<BlockSpec>& sequence,
                                  std::size_t index) {
  const BlockSpec* b = &sequence.at(index);
  std::size_t limit = index;
  while (b->repeat && b->repeat->mode == RepeatMode::kRepeatBlock) {
    auto it = std::find_if(sequence.begin(),
                           sequence.begin() + static_cast<std::ptrdiff_t>(limit),
                           [&](const BlockSpec& o) {
                             return o.name == *b->repeat->ref_block;
                           });
    if (it == sequence.begin() + static_cast<std::ptrdiff_t>(limit)) {
      throw ReferenceError("ref_block '" + b->repeat->ref_block.value_or("") +
                           "' does not name an earlier block");
    }
    limit = static_cast<std::size_t>(it - sequence.begin());
    b = &*it;
  }
  return *b;
}

BigCount count_configurations(const SearchSpaceSpec& spec,
                              const Registry& registry) {
  BigCount n = count_sequence(spec, spec.sequence, registry);
  if (spec.preprocessing) {
    for (const auto& stage : spec.preprocessing->stages) {
      BigCount per_stage = 0;
      for (const auto& op : stage.op_candidates) {
        per_stage += count_preproc_op_configurations(spec, stage, op);
      }
      n *= per_stage;
    }
  }
  return n;
}

BigCount count_op_configurations(const SearchSpaceSpec& spec,
                                 const BlockSpec& def, const std::string& op,
                                 const Registry& registry) {
  return count_op(spec, def, op, registry);
}

BigCount count_preproc_op_configurations(const SearchSpaceSpec& spec,
                                         const PreprocStageSpec& stage,
                                         const std::string& op) {
  BigCount n = 1;
  for (const auto& [name, d] :
       resolve_param_domains(spec, stage.params, op, preproc_op_params(op))) {
    n *= d.size();
  }
  return n;
}

std::string to_yaml(const SearchSpaceSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "input" << YAML::Value;
  emit_extents(out, spec.input_shape);
  out << YAML::Key << "output" << YAML::Value << spec.output_shape.at(0);
  out << YAML::Key << "sequence" << YAML::Value;
  emit_sequence(out, spec.sequence);
  if (!spec.default_op_params.empty()) {
    out << YAML::Key << "default_op_params" << YAML::Value << YAML::BeginMap;
    emit_params(out, spec.default_op_params);
    out << YAML::EndMap;
  }
  if (!spec.composites.empty()) {
    out << YAML::Key << "composites" << YAML::Value << YAML::BeginMap;
    for (const auto& [name, seq] : spec.composites) {
      out << YAML::Key << name << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "sequence" << YAML::Value;
      emit_sequence(out, seq);
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  if (spec.preprocessing) {
    out << YAML::Key << "preprocessing" << YAML::Value << YAML::BeginSeq;
    for (const auto& stage : spec.preprocessing->stages) {
      out << YAML::BeginMap;
      out << YAML::Key << "stage" << YAML::Value << YAML::DoubleQuoted
          << stage.name;
      out << YAML::Key << "op_candidates" << YAML::Value;
      emit_names(out, stage.op_candidates);
      emit_params(out, stage.params);
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace nasx
