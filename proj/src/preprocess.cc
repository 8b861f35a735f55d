#include "nasx/preprocess.h"

#include <algorithm>
#include <cmath>

#include "nasx/errors.h"

namespace nasx {
namespace {

const std::map<std::string, std::vector<ParamSpec>, std::less<>>& table() {
  static const std::map<std::string, std::vector<ParamSpec>, std::less<>> ops{
      {"filter",
       {{"kind", ParamKind::kString, false, ParamValue(std::string("moving_average"))},
        {"length", ParamKind::kInt, true, {}}}},
      {"downsample", {{"factor", ParamKind::kInt, true, {}}}},
      {"window_sequential",
       {{"size", ParamKind::kInt, true, {}},
        {"stride", ParamKind::kInt, false, {}}}},
      {"window_event",
       {{"threshold", ParamKind::kFloat, true, {}},
        {"size", ParamKind::kInt, true, {}}}},
      {"normalize",
       {{"method", ParamKind::kString, false, ParamValue(std::string("zscore"))}}},
      {"identity", {}},
  };
  return ops;
}

// Channels x length view over a rank-2 tensor.
struct Signal {
  std::int64_t channels;
  std::int64_t length;
};

Signal dims(const Tensor& t) {
  if (t.shape.size() != 2) {
    throw ShapeMismatch("pre-processing expects [channels, length] signals");
  }
  return {t.shape[0], t.shape[1]};
}

Tensor moving_average(const Tensor& in, std::int64_t m) {
  const auto [c, len] = dims(in);
  if (m > len) {
    throw GeometryError("filter length " + std::to_string(m) +
                        " exceeds signal length " + std::to_string(len));
  }
  Tensor out({c, len});
  const std::int64_t valid = len - m + 1;
  const std::int64_t lead = (m - 1) / 2;
  std::vector<double> avg(static_cast<std::size_t>(valid));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const float* x = in.values.data() + ch * len;
    for (std::int64_t i = 0; i < valid; ++i) {
      double sum = 0.0;
      for (std::int64_t j = 0; j < m; ++j) sum += x[i + j];
      avg[static_cast<std::size_t>(i)] = sum / static_cast<double>(m);
    }
    float* y = out.values.data() + ch * len;
    for (std::int64_t t = 0; t < len; ++t) {
      const std::int64_t src = std::clamp<std::int64_t>(t - lead, 0, valid - 1);
      y[t] = static_cast<float>(avg[static_cast<std::size_t>(src)]);
    }
  }
  return out;
}

Tensor downsample(const Tensor& in, std::int64_t f) {
  const auto [c, len] = dims(in);
  const std::int64_t out_len = len / f;
  if (out_len < 1) {
    throw GeometryError("downsample factor " + std::to_string(f) +
                        " empties a signal of length " + std::to_string(len));
  }
  Tensor out({c, out_len});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t i = 0; i < out_len; ++i) {
      out.values[static_cast<std::size_t>(ch * out_len + i)] =
          in.values[static_cast<std::size_t>(ch * len + i * f)];
    }
  }
  return out;
}

Tensor slice(const Tensor& in, std::int64_t start, std::int64_t size) {
  const auto [c, len] = dims(in);
  Tensor out({c, size});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    std::copy_n(in.values.begin() + ch * len + start, size,
                out.values.begin() + ch * size);
  }
  return out;
}

void check_window(std::int64_t size, std::int64_t len) {
  if (size > len) {
    throw GeometryError("window size " + std::to_string(size) +
                        " exceeds signal length " + std::to_string(len));
  }
}

std::vector<Tensor> sequential_windows(const Tensor& in, std::int64_t size,
                                       std::int64_t stride) {
  const auto [c, len] = dims(in);
  check_window(size, len);
  std::vector<Tensor> out;
  for (std::int64_t start = 0; start + size <= len; start += stride) {
    out.push_back(slice(in, start, size));
  }
  return out;
}

std::vector<Tensor> event_windows(const Tensor& in, double threshold,
                                  std::int64_t size) {
  const auto [c, len] = dims(in);
  check_window(size, len);
  auto loud = [&](std::int64_t t) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      if (std::fabs(in.values[static_cast<std::size_t>(ch * len + t)]) >=
          threshold) {
        return true;
      }
    }
    return false;
  };
  std::vector<Tensor> out;
  bool previous_loud = loud(0);
  for (std::int64_t t = 1; t < len; ++t) {
    const bool now = loud(t);
    if (now && !previous_loud && t + size <= len) {
      out.push_back(slice(in, t, size));
    }
    previous_loud = now;
  }
  return out;
}

Tensor normalize(const Tensor& in, const std::string& method) {
  const auto [c, len] = dims(in);
  Tensor out({c, len});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const float* x = in.values.data() + ch * len;
    float* y = out.values.data() + ch * len;
    if (method == "minmax") {
      const auto [lo, hi] = std::minmax_element(x, x + len);
      const double span = static_cast<double>(*hi) - *lo;
      for (std::int64_t t = 0; t < len; ++t) {
        y[t] = span > 0 ? static_cast<float>((x[t] - *lo) / span) : 0.0f;
      }
    } else {
      double mean = 0.0;
      for (std::int64_t t = 0; t < len; ++t) mean += x[t];
      mean /= static_cast<double>(len);
      double var = 0.0;
      for (std::int64_t t = 0; t < len; ++t) {
        var += (x[t] - mean) * (x[t] - mean);
      }
      const double sd = std::sqrt(var / static_cast<double>(len));
      for (std::int64_t t = 0; t < len; ++t) {
        y[t] = sd > 0 ? static_cast<float>((x[t] - mean) / sd) : 0.0f;
      }
    }
  }
  return out;
}

std::int64_t stride_of(const ParamMap& p) {
  auto it = p.find("stride");
  return it == p.end() ? as_int(p.at("size")) : as_int(it->second);
}

}  // namespace

bool is_preproc_op(std::string_view op) { return table().contains(op); }

bool is_window_op(std::string_view op) {
  return op == "window_sequential" || op == "window_event";
}

const std::vector<ParamSpec>& preproc_op_params(std::string_view op) {
  auto it = table().find(op);
  if (it == table().end()) {
    throw ReferenceError("unknown pre-processing op '" + std::string(op) + "'");
  }
  return it->second;
}

const std::vector<std::string>& preproc_op_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, _] : table()) n.push_back(k);
    return n;
  }();
  return names;
}

void check_preproc_value(std::string_view op, const std::string& param,
                         const ParamValue& value) {
  const std::string where = std::string(op) + "." + param;
  if (op == "filter" && param == "kind") {
    if (as_string(value) != "moving_average") {
      throw ParamError(where + ": unsupported filter kind '" +
                       as_string(value) + "'");
    }
  } else if (op == "normalize" && param == "method") {
    const auto& m = as_string(value);
    if (m != "minmax" && m != "zscore") {
      throw ParamError(where + ": unsupported method '" + m + "'");
    }
  } else if (op == "window_event" && param == "threshold") {
    if (as_double(value) < 0) throw ParamError(where + " must be >= 0");
  } else if (kind_of(value) == ParamKind::kInt && as_int(value) < 1) {
    throw ParamError(where + " must be >= 1");
  }
}

ParamMap preproc_with_defaults(std::string_view op, ParamMap params) {
  for (const auto& spec : preproc_op_params(op)) {
    if (params.contains(spec.name)) continue;
    if (const auto* v = std::get_if<ParamValue>(&spec.default_value)) {
      params.emplace(spec.name, *v);
    }
  }
  if (op == "window_sequential" && !params.contains("stride")) {
    params["stride"] = params.at("size");
  }
  return params;
}

TensorShape preproc_output_shape(const ResolvedPreproc& pipeline,
                                 const TensorShape& input) {
  std::int64_t c = input.channels();
  std::int64_t len = input.length();
  for (const auto& stage : pipeline.stages) {
    const ParamMap p = preproc_with_defaults(stage.op, stage.params);
    if (stage.op == "filter") {
      if (as_int(p.at("length")) > len) {
        throw GeometryError("filter length exceeds signal length " +
                            std::to_string(len));
      }
    } else if (stage.op == "downsample") {
      len /= as_int(p.at("factor"));
      if (len < 1) throw GeometryError("downsample empties the signal");
    } else if (is_window_op(stage.op)) {
      const std::int64_t size = as_int(p.at("size"));
      check_window(size, len);
      len = size;
    }
  }
  return TensorShape::channelled(c, len);
}

std::vector<Tensor> apply_preproc(const ResolvedPreproc& pipeline,
                                  const Tensor& signal) {
  dims(signal);
  std::vector<Tensor> current{signal};
  for (const auto& stage : pipeline.stages) {
    const ParamMap p = preproc_with_defaults(stage.op, stage.params);
    std::vector<Tensor> next;
    for (const auto& t : current) {
      if (stage.op == "filter") {
        next.push_back(moving_average(t, as_int(p.at("length"))));
      } else if (stage.op == "downsample") {
        next.push_back(downsample(t, as_int(p.at("factor"))));
      } else if (stage.op == "window_sequential") {
        auto w = sequential_windows(t, as_int(p.at("size")), stride_of(p));
        std::move(w.begin(), w.end(), std::back_inserter(next));
      } else if (stage.op == "window_event") {
        auto w = event_windows(t, as_double(p.at("threshold")),
                               as_int(p.at("size")));
        std::move(w.begin(), w.end(), std::back_inserter(next));
      } else if (stage.op == "normalize") {
        next.push_back(normalize(t, as_string(p.at("method"))));
      } else {
        next.push_back(t);
      }
    }
    current = std::move(next);
  }
  return current;
}

}  // namespace nasx
