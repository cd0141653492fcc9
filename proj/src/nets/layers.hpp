#pragma once

#include <cstdint>
#include <string>

#include "common/rng.hpp"
#include "nets/params.hpp"
#include "tensor/tensor.hpp"

// Parameter creation and lookup shared by the network builders. A layer
// named "x" owns "x.w" [out, in, k, k], "x.b" [1, out, 1, 1] and, when it has
// a PReLU, "x.a" [1, out, 1, 1].
namespace focusfuse::FOCUSFUSE_PRECISION::layers {

class ParamFactory {
 public:
  ParamFactory(NetworkParams& params, uint64_t seed) : params_(params), rng_(seed) {}

  void conv(const std::string& name, int in, int out, int kernel);
  void conv_prelu(const std::string& name, int in, int out, int kernel);

 private:
  NetworkParams& params_;
  Rng rng_;
};

Tensor conv(const NetworkParams& params, const std::string& name, const Tensor& x, int stride,
            int padding, int dilation = 1);
Tensor conv_prelu(const NetworkParams& params, const std::string& name, const Tensor& x,
                  int stride, int padding, int dilation = 1);

constexpr int64_t conv_params(int64_t in, int64_t out, int64_t kernel) {
  return out * in * kernel * kernel + out;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION::layers
