#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nasx {

enum class ParamKind { kInt, kFloat, kBool, kString };

using ParamValue = std::variant<std::int64_t, double, bool, std::string>;

// Fully resolved parameters of one layer or pre-processing stage.
using ParamMap = std::map<std::string, ParamValue>;

ParamKind kind_of(const ParamValue& value);
std::string_view kind_name(ParamKind kind);

// Canonical text form: integers in decimal, floats with round-trip
// precision, booleans as true/false, strings verbatim.
std::string to_string(const ParamValue& value);

std::int64_t as_int(const ParamValue& value);
double as_double(const ParamValue& value);  // accepts int or float
const std::string& as_string(const ParamValue& value);

// A searchable parameter: either one fixed scalar or a finite list of
// choices of a single kind. Choice lists are non-empty and duplicate-free.
class ParamDomain {
 public:
  // Throws std::invalid_argument on an empty list, mixed kinds or duplicates.
  static ParamDomain fixed(ParamValue value);
  static ParamDomain choices(std::vector<ParamValue> values);

  bool is_fixed() const { return fixed_; }
  std::size_t size() const { return values_.size(); }
  ParamKind kind() const { return kind_of(values_.front()); }
  const std::vector<ParamValue>& values() const { return values_; }
  const ParamValue& at(std::size_t index) const { return values_.at(index); }
  bool contains(const ParamValue& value) const;
  std::size_t index_of(const ParamValue& value) const;  // size() when absent

  // Same domain with integer values widened to floats.
  ParamDomain as_float() const;
  // Keeps only values accepted by `keep`; may return an empty list, which
  // callers must treat as an error.
  template <typename Pred>
  std::vector<ParamValue> filtered(Pred keep) const {
    std::vector<ParamValue> out;
    for (const auto& v : values_) {
      if (keep(v)) out.push_back(v);
    }
    return out;
  }

  bool operator==(const ParamDomain&) const = default;

 private:
  ParamDomain(std::vector<ParamValue> values, bool fixed)
      : values_(std::move(values)), fixed_(fixed) {}

  std::vector<ParamValue> values_;
  bool fixed_ = true;
};

// Declared parameter of an operation.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kInt;
  bool mandatory = false;
  // Used when the parameter is optional and no domain is declared. Empty
  // means the op derives the value itself (e.g. pooling stride).
  std::variant<std::monostate, ParamValue> default_value;
};

}  // namespace nasx
