#include "tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "tensor/ops.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

namespace {

double central_difference(const ScalarFn& f, Tensor& x, int64_t i, double step) {
  real& v = x.data()[static_cast<size_t>(i)];
  const real original = v;
  const auto plus = static_cast<real>(original + step);
  const auto minus = static_cast<real>(original - step);
  v = plus;
  const double f_plus = f(x);
  v = minus;
  const double f_minus = f(x);
  v = original;
  return (f_plus - f_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
}

}  // namespace

Tensor finite_diff_grad(const ScalarFn& f, Tensor& x, double step) {
  if (!(step > 0.0)) throw UsageError("finite_diff_grad: step must be positive");
  Tensor out(x.shape());
  for (int64_t i = 0; i < x.numel(); ++i) {
    out.data()[static_cast<size_t>(i)] = static_cast<real>(central_difference(f, x, i, step));
  }
  return out;
}

std::vector<double> finite_diff_grad_at(const ScalarFn& f, Tensor& x,
                                        std::span<const int64_t> coords, double step) {
  if (!(step > 0.0)) throw UsageError("finite_diff_grad_at: step must be positive");
  std::vector<double> out;
  out.reserve(coords.size());
  for (int64_t i : coords) {
    if (i < 0 || i >= x.numel()) throw UsageError("finite_diff_grad_at: coordinate out of range");
    out.push_back(central_difference(f, x, i, step));
  }
  return out;
}

double relative_error(double a, double b, double floor) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}

GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& forward,
                                std::span<Tensor> wrt, const GradCheckOptions& options) {
  Rng rng(mix_seed(options.seed, 0x67726164));
  const Tensor probe = forward();
  Tensor projection(probe.shape());
  for (real& v : projection.data()) v = static_cast<real>(rng.uniform(0.5, 1.5));

  const ScalarFn objective = [&](const Tensor&) {
    const Tensor out = forward();
    double acc = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) {
      acc += static_cast<double>(out.data()[static_cast<size_t>(i)]) *
             static_cast<double>(projection.data()[static_cast<size_t>(i)]);
    }
    return acc;
  };

  std::vector<bool> previous(wrt.size());
  for (size_t i = 0; i < wrt.size(); ++i) {
    previous[i] = wrt[i].requires_grad();
    wrt[i].set_requires_grad(true);
    wrt[i].clear_grad();
  }
  {
    Tape tape;
    Tape::Scope scope(tape);
    const Tensor root = ops::sum(ops::mul(forward(), projection));
    tape.backward(root);
  }

  GradCheckResult result{name, 0.0, options.tolerance, 0};
  for (size_t t = 0; t < wrt.size(); ++t) {
    Tensor& x = wrt[t];
    std::vector<int64_t> coords;
    if (options.coords_per_tensor <= 0 || options.coords_per_tensor >= x.numel()) {
      coords.resize(static_cast<size_t>(x.numel()));
      for (int64_t i = 0; i < x.numel(); ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int64_t k = 0; k < options.coords_per_tensor; ++k) {
        coords.push_back(rng.uniform_int(0, x.numel() - 1));
      }
    }
    const std::vector<real> analytic(x.grad().begin(), x.grad().end());
    double scale = 0.0;
    for (real g : analytic) scale = std::max(scale, static_cast<double>(std::abs(g)));
    const double floor = std::max(options.scale_floor * scale, 1e-6);
    const auto numeric = finite_diff_grad_at(objective, x, coords, options.step);
    for (size_t k = 0; k < coords.size(); ++k) {
      const double a = analytic.empty() ? 0.0 : analytic[static_cast<size_t>(coords[k])];
      result.max_rel_error = std::max(result.max_rel_error, relative_error(a, numeric[k], floor));
    }
    result.coords_checked += static_cast<int64_t>(coords.size());
    x.clear_grad();
    x.set_requires_grad(previous[t]);
  }
  return result;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
