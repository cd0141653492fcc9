#include "nets/layers.hpp"

#include <cmath>

#include "tensor/ops.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION::layers {

void ParamFactory::conv(const std::string& name, int in, int out, int kernel) {
  Tensor w(Shape{out, in, kernel, kernel});
  const double bound = std::sqrt(6.0 / static_cast<double>(in * kernel * kernel));
  for (real& v : w.data()) v = static_cast<real>(rng_.uniform(-bound, bound));
  params_.add(name + ".w", std::move(w));
  params_.add(name + ".b", Tensor(Shape{1, out, 1, 1}, 0.0f));
}

void ParamFactory::conv_prelu(const std::string& name, int in, int out, int kernel) {
  conv(name, in, out, kernel);
  params_.add(name + ".a", Tensor(Shape{1, out, 1, 1}, 0.25f));
}

Tensor conv(const NetworkParams& params, const std::string& name, const Tensor& x, int stride,
            int padding, int dilation) {
  return ops::conv2d(x, params.at(name + ".w"), params.at(name + ".b"), stride, padding, dilation);
}

Tensor conv_prelu(const NetworkParams& params, const std::string& name, const Tensor& x,
                  int stride, int padding, int dilation) {
  return ops::prelu(conv(params, name, x, stride, padding, dilation), params.at(name + ".a"));
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION::layers
