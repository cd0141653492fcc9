#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tensor/tensor.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

using ScalarFn = std::function<double(const Tensor&)>;

// Central differences (f(x + h) - f(x - h)) / 2h for every coordinate of x.
// x is perturbed in place and restored; the step actually representable in
// single precision is used as the denominator.
Tensor finite_diff_grad(const ScalarFn& f, Tensor& x, double step);

// Same, restricted to the given flat coordinates.
std::vector<double> finite_diff_grad_at(const ScalarFn& f, Tensor& x,
                                        std::span<const int64_t> coords, double step);

// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor);

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int64_t coords_checked = 0;
  bool passed() const { return max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double step = 1e-2;
  double tolerance = 1e-3;
  // Denominator floor of the relative error, as a fraction of the largest
  // analytic gradient magnitude of the tensor being checked. Single-precision
  // forwards leave ~1e-6 absolute noise in the differences, so coordinates
  // whose gradient is orders of magnitude below the tensor's scale are
  // compared against that scale instead of against themselves.
  double scale_floor = 1e-2;
  // 0 checks every coordinate, otherwise this many sampled per tensor.
  int64_t coords_per_tensor = 0;
  uint64_t seed = 0;
};

// Compares autodiff gradients against finite differences for the scalar
// sum(R * forward()), where R is a fixed random projection with the shape of
// forward()'s output. Every tensor in `wrt` must be read by `forward`; they
// are perturbed in place during the finite-difference sweep and restored.
GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& forward,
                                std::span<Tensor> wrt, const GradCheckOptions& options);

}  // namespace focusfuse::FOCUSFUSE_PRECISION
