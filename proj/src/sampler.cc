#include <algorithm>
#include <set>

#include "nasx/architecture.h"
#include "nasx/errors.h"

namespace nasx {
namespace {

ParamDomain op_domain(const std::vector<std::string>& ops) {
  std::vector<ParamValue> values(ops.begin(), ops.end());
  return ParamDomain::choices(std::move(values));
}

std::string rep(const std::string& path, std::int64_t r) {
  return path + ".rep" + std::to_string(r);
}

// Walks the spec in canonical order, asking the trial source at every
// decision point. Single-valued domains are constants and leave no trace.
class Sampler {
 public:
  Sampler(const SearchSpaceSpec& spec, const Registry& registry,
          TrialSource& source)
      : spec_(spec), registry_(registry), source_(source) {}

  ArchitectureIR run() {
    if (spec_.preprocessing) {
      ResolvedPreproc pre;
      for (const auto& stage : spec_.preprocessing->stages) {
        const std::string kp = "preprocessing." + stage.name;
        const ParamDomain ops = op_domain(stage.op_candidates);
        std::vector<double> weights;
        for (const auto& v : ops.values()) {
          weights.push_back(to_weight(
              count_preproc_op_configurations(spec_, stage, as_string(v))));
        }
        const std::string op =
            as_string(choose_structural(kp + ".op", ops, weights));
        ParamMap params;
        for (const auto& [name, dom] :
             domains(stage.params, op, preproc_op_params(op))) {
          params[name] = choose(kp + "." + op + "." + name, dom);
        }
        pre.stages.push_back({op, preproc_with_defaults(op, params)});
      }
      ir_.preproc = std::move(pre);
    }
    sequence(spec_.sequence, "", "");
    return std::move(ir_);
  }

 private:
  ParamValue choose(const std::string& key, const ParamDomain& domain) {
    if (domain.size() == 1) return domain.at(0);
    ParamValue v = source_.suggest(key, domain);
    if (!domain.contains(v)) {
      throw ResolutionError("value " + to_string(v) + " for '" + key +
                            "' is outside its domain");
    }
    ir_.trace.emplace_back(key, v);
    return v;
  }

  ParamValue choose_structural(const std::string& key,
                               const ParamDomain& domain,
                               const std::vector<double>& weights) {
    if (domain.size() == 1) return domain.at(0);
    ParamValue v = source_.suggest_structural(key, domain, weights);
    if (!domain.contains(v)) {
      throw ResolutionError("value " + to_string(v) + " for '" + key +
                            "' is outside its domain");
    }
    ir_.trace.emplace_back(key, v);
    return v;
  }

  static double to_weight(const BigCount& n) {
    return n.convert_to<double>();
  }

  // Configurations below each op of `ops`, raised to `power` (repeat_op
  // fixes one op for every repetition).
  std::vector<double> op_weights(const BlockSpec& def, const ParamDomain& ops,
                                 unsigned power = 1) const {
    std::vector<double> w;
    for (const auto& v : ops.values()) {
      w.push_back(to_weight(boost::multiprecision::pow(
          count_op_configurations(spec_, def, as_string(v), registry_), power)));
    }
    return w;
  }

  std::vector<double> depth_weights(const BlockSpec& def,
                                    const ParamDomain& ops) const {
    BigCount single = 0;
    std::vector<BigCount> per_op;
    for (const auto& v : ops.values()) {
      per_op.push_back(count_op_configurations(spec_, def, as_string(v), registry_));
      single += per_op.back();
    }
    std::vector<double> w;
    for (const auto& dv : def.repeat->depth->values()) {
      const auto depth = static_cast<unsigned>(as_int(dv));
      BigCount n = 0;
      switch (def.repeat->mode) {
        case RepeatMode::kVaryAll:
          n = boost::multiprecision::pow(single, depth);
          break;
        case RepeatMode::kRepeatOp:
          for (const auto& p : per_op) n += boost::multiprecision::pow(p, depth);
          break;
        default:
          n = single;
      }
      w.push_back(to_weight(n));
    }
    return w;
  }

  std::vector<std::pair<std::string, ParamDomain>> domains(
      const OpParamDomains& local, const std::string& op,
      const std::vector<ParamSpec>& declared) {
    try {
      return resolve_param_domains(spec_, local, op, declared);
    } catch (const ParamError& e) {
      throw ResolutionError(e.what());
    }
  }

  void sequence(const std::vector<BlockSpec>& seq, const std::string& kp,
                const std::string& lp) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      block(seq, i, kp + seq[i].name, lp + seq[i].name);
    }
  }

  void block(const std::vector<BlockSpec>& seq, std::size_t index,
             const std::string& kp, const std::string& lp) {
    const BlockSpec& def = block_definition(seq, index);
    const ParamDomain ops = op_domain(def.op_candidates);
    if (!def.repeat) {
      emit_op(def, as_string(choose_structural(kp + ".op", ops, op_weights(def, ops))),
              kp, lp);
      return;
    }
    const std::int64_t depth = as_int(choose_structural(
        kp + ".depth", *def.repeat->depth, depth_weights(def, ops)));
    switch (def.repeat->mode) {
      case RepeatMode::kVaryAll:
        for (std::int64_t r = 0; r < depth; ++r) {
          const std::string kr = rep(kp, r);
          emit_op(def,
                  as_string(choose_structural(kr + ".op", ops, op_weights(def, ops))),
                  kr, rep(lp, r));
        }
        break;
      case RepeatMode::kRepeatOp: {
        const std::string op = as_string(choose_structural(
            kp + ".op", ops,
            op_weights(def, ops, static_cast<unsigned>(depth))));
        for (std::int64_t r = 0; r < depth; ++r) {
          emit_op(def, op, rep(kp, r), rep(lp, r));
        }
        break;
      }
      case RepeatMode::kRepeatParams: {
        const std::string op = as_string(
            choose_structural(kp + ".op", ops, op_weights(def, ops)));
        const std::size_t first = ir_.layers.size();
        const std::string base = rep(lp, 0);
        emit_op(def, op, kp, base);
        const std::vector<ResolvedLayer> once(
            ir_.layers.begin() + static_cast<std::ptrdiff_t>(first),
            ir_.layers.end());
        for (std::int64_t r = 1; r < depth; ++r) {
          for (ResolvedLayer layer : once) {
            layer.block_path = rep(lp, r) + layer.block_path.substr(base.size());
            ir_.layers.push_back(std::move(layer));
          }
        }
        break;
      }
      case RepeatMode::kRepeatBlock:
        throw ResolutionError("unresolved repeat_block in '" + def.name + "'");
    }
  }

  void emit_op(const BlockSpec& def, const std::string& op,
               const std::string& kp, const std::string& lp) {
    if (spec_.is_composite(op)) {
      sequence(spec_.composite(op), kp + "." + op + ".", lp + "." + op + ".");
      return;
    }
    ParamMap params;
    for (const auto& [name, dom] :
         domains(def.local_params, op, registry_.layer(op).params())) {
      params[name] = choose(kp + "." + op + "." + name, dom);
    }
    ir_.layers.push_back({lp, op, std::move(params)});
  }

  const SearchSpaceSpec& spec_;
  const Registry& registry_;
  TrialSource& source_;
  ArchitectureIR ir_;
};

class KeyCollector {
 public:
  KeyCollector(const SearchSpaceSpec& spec, const Registry& registry)
      : spec_(spec), registry_(registry) {}

  std::vector<ParameterKey> run() {
    if (spec_.preprocessing) {
      for (const auto& stage : spec_.preprocessing->stages) {
        const std::string kp = "preprocessing." + stage.name;
        add(kp + ".op", op_domain(stage.op_candidates));
        for (const auto& op : stage.op_candidates) {
          for (const auto& [name, dom] : resolve_param_domains(
                   spec_, stage.params, op, preproc_op_params(op))) {
            add(kp + "." + op + "." + name, dom);
          }
        }
      }
    }
    sequence(spec_.sequence, "");
    return std::move(keys_);
  }

 private:
  void add(const std::string& key, const ParamDomain& domain) {
    if (domain.size() > 1 && seen_.insert(key).second) {
      keys_.push_back({key, domain});
    }
  }

  void sequence(const std::vector<BlockSpec>& seq, const std::string& kp) {
    for (std::size_t i = 0; i < seq.size(); ++i) block(seq, i, kp + seq[i].name);
  }

  void block(const std::vector<BlockSpec>& seq, std::size_t index,
             const std::string& kp) {
    const BlockSpec& def = block_definition(seq, index);
    const ParamDomain ops = op_domain(def.op_candidates);
    if (!def.repeat) {
      add(kp + ".op", ops);
      all_ops(def, kp);
      return;
    }
    add(kp + ".depth", *def.repeat->depth);
    std::int64_t max_depth = 0;
    for (const auto& d : def.repeat->depth->values()) {
      max_depth = std::max(max_depth, as_int(d));
    }
    switch (def.repeat->mode) {
      case RepeatMode::kVaryAll:
        for (std::int64_t r = 0; r < max_depth; ++r) {
          add(rep(kp, r) + ".op", ops);
          all_ops(def, rep(kp, r));
        }
        break;
      case RepeatMode::kRepeatOp:
        add(kp + ".op", ops);
        for (std::int64_t r = 0; r < max_depth; ++r) all_ops(def, rep(kp, r));
        break;
      case RepeatMode::kRepeatParams:
        add(kp + ".op", ops);
        all_ops(def, kp);
        break;
      case RepeatMode::kRepeatBlock:
        break;
    }
  }

  void all_ops(const BlockSpec& def, const std::string& kp) {
    for (const auto& op : def.op_candidates) {
      if (spec_.is_composite(op)) {
        sequence(spec_.composite(op), kp + "." + op + ".");
        continue;
      }
      for (const auto& [name, dom] : resolve_param_domains(
               spec_, def.local_params, op, registry_.layer(op).params())) {
        add(kp + "." + op + "." + name, dom);
      }
    }
  }

  const SearchSpaceSpec& spec_;
  const Registry& registry_;
  std::vector<ParameterKey> keys_;
  std::set<std::string> seen_;
};

// Follows a script of choice indices, extending it with zeros, and
// records each decision's radix so the caller can advance an odometer.
class ScriptedSource final : public TrialSource {
 public:
  std::vector<std::size_t> choices;
  std::vector<std::size_t> radices;
  std::size_t position = 0;

  ParamValue suggest(const std::string&, const ParamDomain& domain) override {
    if (position == choices.size()) choices.push_back(0);
    if (position == radices.size()) radices.push_back(0);
    radices[position] = domain.size();
    return domain.at(choices[position++]);
  }

  // Moves to the next decision sequence; false when exhausted.
  bool advance() {
    choices.resize(position);
    radices.resize(position);
    position = 0;
    while (!choices.empty()) {
      if (choices.back() + 1 < radices.back()) {
        ++choices.back();
        return true;
      }
      choices.pop_back();
      radices.pop_back();
    }
    return false;
  }
};

}  // namespace

ParamValue RandomTrialSource::suggest(const std::string&,
                                      const ParamDomain& domain) {
  std::uniform_int_distribution<std::size_t> pick(0, domain.size() - 1);
  return domain.at(pick(rng_));
}

ParamValue RandomTrialSource::suggest_structural(
    const std::string&, const ParamDomain& domain,
    const std::vector<double>& weights) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return domain.at(pick(rng_));
}

ReplaySource::ReplaySource(const SamplingTrace& trace) {
  for (const auto& [key, value] : trace) values_.emplace(key, value);
}

ParamValue ReplaySource::suggest(const std::string& key,
                                 const ParamDomain& domain) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ResolutionError("trace has no value for '" + key + "'");
  }
  if (domain.contains(it->second)) return it->second;
  // Integer-valued entries re-read from JSON for float domains.
  if (domain.kind() == ParamKind::kFloat &&
      kind_of(it->second) == ParamKind::kInt) {
    ParamValue widened = as_double(it->second);
    if (domain.contains(widened)) return widened;
  }
  throw ResolutionError("trace value " + to_string(it->second) + " for '" +
                        key + "' is outside its domain");
}

ArchitectureIR sample_architecture(const SearchSpaceSpec& spec,
                                   TrialSource& trial,
                                   const Registry& registry) {
  return Sampler(spec, registry, trial).run();
}

ArchitectureIR replay_architecture(const SearchSpaceSpec& spec,
                                   const SamplingTrace& trace,
                                   const Registry& registry) {
  ReplaySource source(trace);
  ArchitectureIR ir = sample_architecture(spec, source, registry);
  if (ir.trace.size() != trace.size()) {
    throw ResolutionError("trace holds " + std::to_string(trace.size()) +
                          " decisions, replay consumed " +
                          std::to_string(ir.trace.size()));
  }
  return ir;
}

std::vector<ParameterKey> parameter_keys(const SearchSpaceSpec& spec,
                                         const Registry& registry) {
  return KeyCollector(spec, registry).run();
}

void for_each_configuration(
    const SearchSpaceSpec& spec, std::uint64_t limit,
    const std::function<void(const ArchitectureIR&)>& visit,
    const Registry& registry) {
  const BigCount total = count_configurations(spec, registry);
  if (total > limit) {
    throw LimitError("space holds " + total.str() +
                     " configurations, limit is " + std::to_string(limit));
  }
  ScriptedSource source;
  do {
    visit(sample_architecture(spec, source, registry));
  } while (source.advance());
}

std::vector<ArchitectureIR> enumerate_space(const SearchSpaceSpec& spec,
                                            std::uint64_t limit,
                                            const Registry& registry) {
  std::vector<ArchitectureIR> out;
  for_each_configuration(
      spec, limit, [&](const ArchitectureIR& ir) { out.push_back(ir); },
      registry);
  return out;
}

std::string describe_ir(const ArchitectureIR& ir) {
  std::string out;
  auto params_text = [](const ParamMap& params) {
    std::string t;
    for (const auto& [k, v] : params) {
      t += (t.empty() ? "" : ",") + k + "=" + to_string(v);
    }
    return t;
  };
  if (ir.preproc) {
    for (const auto& s : ir.preproc->stages) {
      out += "pre:" + s.op + "(" + params_text(s.params) + ") | ";
    }
  }
  for (std::size_t i = 0; i < ir.layers.size(); ++i) {
    const auto& l = ir.layers[i];
    if (i) out += " | ";
    out += l.block_path + ":" + l.op + "(" + params_text(l.params) + ")";
  }
  return out;
}

}  // namespace nasx
