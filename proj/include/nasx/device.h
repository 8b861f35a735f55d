#pragma once

#include <cstdint>

namespace nasx {

// Simulated deployment target.
struct DeviceModel {
  double throughput = 1e9;         // FLOP/s, > 0
  double layer_overhead = 1e-5;    // seconds per layer
  std::int64_t memory_capacity = std::int64_t{64} << 20;  // bytes
  double jitter = 0.0;             // multiplicative noise bound, [0, 0.1]

  // Throws SchemaError when a field is out of range.
  void validate() const;
};

}  // namespace nasx
