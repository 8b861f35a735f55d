#include "nasx/param.h"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace nasx {

ParamKind kind_of(const ParamValue& value) {
  switch (value.index()) {
    case 0:
      return ParamKind::kInt;
    case 1:
      return ParamKind::kFloat;
    case 2:
      return ParamKind::kBool;
    default:
      return ParamKind::kString;
  }
}

std::string_view kind_name(ParamKind kind) {
  switch (kind) {
    case ParamKind::kInt:
      return "int";
    case ParamKind::kFloat:
      return "float";
    case ParamKind::kBool:
      return "bool";
    case ParamKind::kString:
      return "string";
  }
  return "?";
}

std::string to_string(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    return std::to_string(*i);
  }
  if (const auto* d = std::get_if<double>(&value)) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *d);
    std::string text(buf, end);
    // Keep floats recognisable as floats when re-read.
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    return text;
  }
  if (const auto* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  return std::get<std::string>(value);
}

std::int64_t as_int(const ParamValue& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return *i;
  throw std::invalid_argument("expected an integer, got " + to_string(value));
}

double as_double(const ParamValue& value) {
  if (const auto* d = std::get_if<double>(&value)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&value)) {
    return static_cast<double>(*i);
  }
  throw std::invalid_argument("expected a number, got " + to_string(value));
}

const std::string& as_string(const ParamValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  throw std::invalid_argument("expected a string, got " + to_string(value));
}

ParamDomain ParamDomain::fixed(ParamValue value) {
  return ParamDomain({std::move(value)}, true);
}

ParamDomain ParamDomain::choices(std::vector<ParamValue> values) {
  if (values.empty()) throw std::invalid_argument("empty choice list");
  const ParamKind kind = kind_of(values.front());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (kind_of(values[i]) != kind) {
      throw std::invalid_argument("choice list mixes " +
                                  std::string(kind_name(kind)) + " and " +
                                  std::string(kind_name(kind_of(values[i]))));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (values[j] == values[i]) {
        throw std::invalid_argument("duplicate choice " +
                                    to_string(values[i]));
      }
    }
  }
  return ParamDomain(std::move(values), false);
}

bool ParamDomain::contains(const ParamValue& value) const {
  return index_of(value) != values_.size();
}

std::size_t ParamDomain::index_of(const ParamValue& value) const {
  return static_cast<std::size_t>(
      std::find(values_.begin(), values_.end(), value) - values_.begin());
}

ParamDomain ParamDomain::as_float() const {
  std::vector<ParamValue> widened;
  widened.reserve(values_.size());
  for (const auto& v : values_) widened.emplace_back(as_double(v));
  if (fixed_) return fixed(widened.front());
  return choices(std::move(widened));
}

}  // namespace nasx
