#include "nets/grad_suite.hpp"

#include <algorithm>
#include <functional>
#include <iterator>

#include "common/rng.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"

namespace focusfuse {
namespace {

constexpr double kOpTolerance = 1e-3;

Tensor random_tensor(Shape s, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (real& v : t.data()) v = static_cast<real>(rng.uniform(lo, hi));
  return t;
}

// Shifted away from zero so a central difference never straddles a kink.
Tensor random_off_kink(Shape s, uint64_t seed) {
  Tensor t = random_tensor(s, seed);
  for (real& v : t.data()) v = v >= 0 ? v + real(0.05) : v - real(0.05);
  return t;
}

// Distinct values 0.02 apart, so a perturbation never reorders a window.
Tensor distinct_values(Shape s, uint64_t seed) {
  Tensor t(s);
  Rng rng(seed);
  const auto order = rng.permutation(static_cast<size_t>(t.numel()));
  for (size_t i = 0; i < order.size(); ++i) {
    t.data()[i] = real(0.02) * static_cast<real>(order[i]) - 1;
  }
  return t;
}

class OpChecker {
 public:
  explicit OpChecker(const GradSuiteOptions& options) : options_(options) {}

  void check(const std::string& name, double step, const std::function<Tensor()>& forward,
             std::vector<Tensor> wrt, int seed) {
    GradCheckOptions opt;
    opt.step = step;
    opt.tolerance = kOpTolerance;
    opt.seed = mix_seed(options_.seed, static_cast<uint64_t>(seed));
    const GradCheckResult r = check_gradients(name, forward, wrt, opt);
    auto it = std::find_if(lines_.begin(), lines_.end(),
                           [&](const GradSuiteLine& l) { return l.name == name; });
    if (it == lines_.end()) {
      lines_.push_back(GradSuiteLine{name, 0.0, kOpTolerance, 0});
      it = std::prev(lines_.end());
    }
    it->max_rel_error = std::max(it->max_rel_error, r.max_rel_error);
    it->coords_checked += r.coords_checked;
  }

  std::vector<GradSuiteLine> take() { return std::move(lines_); }

 private:
  const GradSuiteOptions& options_;
  std::vector<GradSuiteLine> lines_;
};

}  // namespace

std::vector<GradSuiteLine> run_op_gradchecks(const GradSuiteOptions& options) {
  OpChecker c(options);
  for (int s = 0; s < options.seeds; ++s) {
    const uint64_t base = mix_seed(options.seed, 1000 + static_cast<uint64_t>(s));
    auto seed_of = [&](uint64_t k) { return mix_seed(base, k); };

    Tensor x = random_tensor(Shape{1, 2, 5, 5}, seed_of(1));
    Tensor w = random_tensor(Shape{3, 2, 3, 3}, seed_of(2));
    Tensor b = random_tensor(Shape{1, 3, 1, 1}, seed_of(3));
    c.check("conv2d", 1e-2, [&] { return ops::conv2d(x, w, b, 1, 1); }, {x, w, b}, s);
    c.check("conv2d stride 2", 1e-2, [&] { return ops::conv2d(x, w, b, 2, 1); }, {x, w, b}, s);
    Tensor xd = random_tensor(Shape{1, 2, 9, 9}, seed_of(4));
    Tensor wd = random_tensor(Shape{2, 2, 3, 3}, seed_of(5));
    c.check("conv2d dilated", 1e-2, [&] { return ops::conv2d(xd, wd, Tensor(), 1, 2, 2); },
            {xd, wd}, s);

    Tensor p = random_tensor(Shape{2, 2, 6, 6}, seed_of(6));
    c.check("avg_pool2d", 1e-2, [&] { return ops::avg_pool2d(p, 2, 2); }, {p}, s);
    Tensor m = distinct_values(Shape{1, 2, 8, 8}, seed_of(7));
    c.check("max_pool2d", 1e-3, [&] { return ops::max_pool2d(m, 2, 2); }, {m}, s);
    Tensor u = random_tensor(Shape{2, 2, 3, 4}, seed_of(8));
    c.check("upsample_bilinear_x2", 1e-2, [&] { return ops::upsample_bilinear_x2(u); }, {u}, s);
    Tensor ca = random_tensor(Shape{2, 2, 3, 3}, seed_of(9));
    Tensor cb = random_tensor(Shape{2, 1, 3, 3}, seed_of(10));
    c.check("concat_channels", 1e-2, [&] { return ops::concat_channels({ca, cb, ca}); }, {ca, cb},
            s);

    Tensor r = random_off_kink(Shape{2, 3, 4, 4}, seed_of(11));
    Tensor slopes = random_tensor(Shape{1, 3, 1, 1}, seed_of(12), 0.05, 0.5);
    c.check("prelu", 1e-3, [&] { return ops::prelu(r, slopes); }, {r, slopes}, s);
    c.check("leaky_relu", 1e-3, [&] { return ops::leaky_relu(r, real(0.2)); }, {r}, s);
    c.check("sigmoid", 1e-3, [&] { return ops::sigmoid(r); }, {r}, s);
    c.check("tanh_unit", 1e-3, [&] { return ops::tanh_unit(r); }, {r}, s);

    Tensor e = random_tensor(Shape{1, 2, 3, 3}, seed_of(13));
    Tensor f = random_tensor(Shape{1, 2, 3, 3}, seed_of(14));
    c.check("add", 1e-2, [&] { return ops::add(e, f); }, {e, f}, s);
    c.check("sub", 1e-2, [&] { return ops::sub(e, f); }, {e, f}, s);
    c.check("mul", 1e-2, [&] { return ops::mul(e, f); }, {e, f}, s);
    c.check("scale", 1e-2, [&] { return ops::scale(e, real(-1.5)); }, {e}, s);
    c.check("sum", 1e-2, [&] { return ops::sum(e); }, {e}, s);
    c.check("mean", 1e-2, [&] { return ops::mean(e); }, {e}, s);
  }
  return c.take();
}

std::vector<GradSuiteLine> run_gradient_suite(const GradSuiteOptions& options) {
  std::vector<GradSuiteLine> lines = run_op_gradchecks(options);
  for (auto& l : run_network_gradchecks(options)) lines.push_back(std::move(l));
  return lines;
}

}  // namespace focusfuse
