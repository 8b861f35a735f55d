#pragma once

#include <cstdint>
#include <span>

// Layer kernels over row-major float buffers. `reference` is the serial
// oracle; `parallel` splits the outer output loop across OpenMP threads
// and keeps the per-output accumulation order, so both produce identical
// bits.
namespace nasx::kernels {

struct LinearDims {
  std::int64_t in_features;
  std::int64_t out_features;
};

struct Conv1dDims {
  std::int64_t in_channels;
  std::int64_t in_length;
  std::int64_t out_channels;
  std::int64_t out_length;
  std::int64_t kernel;
  std::int64_t stride;
  std::int64_t padding;
};

struct PoolDims {
  std::int64_t channels;
  std::int64_t in_length;
  std::int64_t out_length;
  std::int64_t kernel;
  std::int64_t stride;
};

namespace reference {

// `macs`, when non-null, is incremented once per multiply-accumulate.
void linear(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const LinearDims& d, std::int64_t* macs = nullptr);
void conv1d(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const Conv1dDims& d, std::int64_t* macs = nullptr);
void maxpool(std::span<const float> in, std::span<float> out,
             const PoolDims& d);
void relu(std::span<const float> in, std::span<float> out);

}  // namespace reference

namespace parallel {

void linear(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const LinearDims& d);
void conv1d(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const Conv1dDims& d);
void maxpool(std::span<const float> in, std::span<float> out,
             const PoolDims& d);
void relu(std::span<const float> in, std::span<float> out);

}  // namespace parallel

}  // namespace nasx::kernels
