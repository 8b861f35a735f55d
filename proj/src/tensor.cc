#include "nasx/tensor.h"

#include <numeric>
#include <stdexcept>

#include "nasx/errors.h"

namespace nasx {

std::string to_string(TensorKind kind) {
  return kind == TensorKind::kFlat ? "flat-vector" : "channelled-sequence";
}

TensorShape TensorShape::flat(std::int64_t features) {
  if (features < 1) {
    throw ShapeError("flat shape needs a positive extent, got " +
                     std::to_string(features));
  }
  return TensorShape(TensorKind::kFlat, {features});
}

TensorShape TensorShape::channelled(std::int64_t channels,
                                    std::int64_t length) {
  if (channels < 1 || length < 1) {
    throw ShapeError("channelled shape needs positive extents, got [" +
                     std::to_string(channels) + "," + std::to_string(length) +
                     "]");
  }
  return TensorShape(TensorKind::kChannelled, {channels, length});
}

TensorShape TensorShape::from_extents(
    const std::vector<std::int64_t>& extents) {
  if (extents.size() == 1) return flat(extents[0]);
  if (extents.size() == 2) return channelled(extents[0], extents[1]);
  throw ShapeError("unsupported tensor rank " +
                   std::to_string(extents.size()));
}

std::int64_t TensorShape::elements() const { return element_count(extents_); }

std::int64_t TensorShape::features() const {
  if (kind_ != TensorKind::kFlat) throw ShapeError("not a flat shape");
  return extents_[0];
}

std::int64_t TensorShape::channels() const {
  if (kind_ != TensorKind::kChannelled) {
    throw ShapeError("not a channelled shape");
  }
  return extents_[0];
}

std::int64_t TensorShape::length() const {
  if (kind_ != TensorKind::kChannelled) {
    throw ShapeError("not a channelled shape");
  }
  return extents_[1];
}

std::string TensorShape::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < extents_.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(extents_[i]);
  }
  return out + "]";
}

std::int64_t element_count(const std::vector<std::int64_t>& extents) {
  return std::accumulate(extents.begin(), extents.end(), std::int64_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(std::vector<std::int64_t> extents)
    : shape(std::move(extents)),
      values(static_cast<std::size_t>(element_count(shape)), 0.0f) {}

Tensor::Tensor(std::vector<std::int64_t> extents, std::vector<float> data)
    : shape(std::move(extents)), values(std::move(data)) {
  if (static_cast<std::int64_t>(values.size()) != element_count(shape)) {
    throw ShapeMismatch("tensor data holds " + std::to_string(values.size()) +
                        " values, shape needs " +
                        std::to_string(element_count(shape)));
  }
}

}  // namespace nasx
