#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nasx/tensor_shape.h"

namespace nasx {

// Dense row-major float32 tensor.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  Tensor() = default;
  explicit Tensor(std::vector<std::int64_t> extents);
  Tensor(std::vector<std::int64_t> extents, std::vector<float> data);

  static Tensor of(const TensorShape& s) { return Tensor(s.extents()); }

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  std::span<float> data() { return values; }
  std::span<const float> data() const { return values; }

  bool operator==(const Tensor&) const = default;
};

std::int64_t element_count(const std::vector<std::int64_t>& extents);

}  // namespace nasx
