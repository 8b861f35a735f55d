#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nasx {

// flat-vector: rank 1 [features]; channelled-sequence: rank 2 [channels, length].
enum class TensorKind { kFlat, kChannelled };

std::string to_string(TensorKind kind);

class TensorShape {
 public:
  TensorShape() = default;

  static TensorShape flat(std::int64_t features);
  static TensorShape channelled(std::int64_t channels, std::int64_t length);
  // Rank 1 maps to flat, rank 2 to channelled; anything else is a ShapeError.
  static TensorShape from_extents(const std::vector<std::int64_t>& extents);

  TensorKind kind() const { return kind_; }
  const std::vector<std::int64_t>& extents() const { return extents_; }
  std::size_t rank() const { return extents_.size(); }
  std::int64_t elements() const;

  std::int64_t features() const;  // flat only
  std::int64_t channels() const;  // channelled only
  std::int64_t length() const;    // channelled only

  std::string to_string() const;

  bool operator==(const TensorShape&) const = default;

 private:
  TensorShape(TensorKind kind, std::vector<std::int64_t> extents)
      : kind_(kind), extents_(std::move(extents)) {}

  TensorKind kind_ = TensorKind::kFlat;
  std::vector<std::int64_t> extents_{1};
};

}  // namespace nasx
