#include <algorithm>

#include "nasx/kernels.h"

namespace nasx::kernels::reference {

void linear(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const LinearDims& d, std::int64_t* macs) {
  for (std::int64_t o = 0; o < d.out_features; ++o) {
    const float* w = weight.data() + o * d.in_features;
    float acc = 0.0f;
    for (std::int64_t i = 0; i < d.in_features; ++i) {
      acc += w[i] * in[static_cast<std::size_t>(i)];
      if (macs) ++*macs;
    }
    out[static_cast<std::size_t>(o)] = acc + bias[static_cast<std::size_t>(o)];
  }
}

void conv1d(std::span<const float> in, std::span<const float> weight,
            std::span<const float> bias, std::span<float> out,
            const Conv1dDims& d, std::int64_t* macs) {
  for (std::int64_t oc = 0; oc < d.out_channels; ++oc) {
    for (std::int64_t t = 0; t < d.out_length; ++t) {
      float acc = 0.0f;
      for (std::int64_t ic = 0; ic < d.in_channels; ++ic) {
        const float* w = weight.data() + (oc * d.in_channels + ic) * d.kernel;
        const float* x = in.data() + ic * d.in_length;
        for (std::int64_t k = 0; k < d.kernel; ++k) {
          if (macs) ++*macs;
          const std::int64_t idx = t * d.stride + k - d.padding;
          if (idx < 0 || idx >= d.in_length) continue;
          acc += w[k] * x[idx];
        }
      }
      out[static_cast<std::size_t>(oc * d.out_length + t)] =
          acc + bias[static_cast<std::size_t>(oc)];
    }
  }
}

void maxpool(std::span<const float> in, std::span<float> out,
             const PoolDims& d) {
  for (std::int64_t c = 0; c < d.channels; ++c) {
    const float* x = in.data() + c * d.in_length;
    for (std::int64_t t = 0; t < d.out_length; ++t) {
      float m = x[t * d.stride];
      for (std::int64_t k = 1; k < d.kernel; ++k) {
        m = std::max(m, x[t * d.stride + k]);
      }
      out[static_cast<std::size_t>(c * d.out_length + t)] = m;
    }
  }
}

void relu(std::span<const float> in, std::span<float> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::max(in[i], 0.0f);
}

}  // namespace nasx::kernels::reference
