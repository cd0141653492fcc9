#include <vector>

#include "common/rng.hpp"
#include "nets/grad_suite.hpp"
#include "nets/networks.hpp"
#include "tensor/gradcheck.hpp"

namespace focusfuse {
namespace {

constexpr double kNetworkTolerance = 1e-2;
constexpr double kNetworkStep = 1e-6;

Tensor random_image(Shape s, uint64_t seed) {
  Rng rng(seed);
  Tensor t(s);
  for (real& v : t.data()) v = static_cast<real>(rng.uniform());
  return t;
}

GradSuiteLine check_network(const std::string& name, NetworkParams& params,
                            const std::function<Tensor()>& forward,
                            const GradSuiteOptions& options, uint64_t seed) {
  std::vector<Tensor> wrt;
  for (auto& [pname, t] : params) wrt.push_back(t);
  GradCheckOptions opt;
  opt.step = kNetworkStep;
  opt.tolerance = kNetworkTolerance;
  opt.coords_per_tensor = options.coords_per_tensor;
  opt.seed = seed;
  const GradCheckResult r = check_gradients(name, forward, wrt, opt);
  return GradSuiteLine{name, r.max_rel_error, r.tolerance, r.coords_checked};
}

}  // namespace

// Compiled only into the double-precision engine build.
std::vector<GradSuiteLine> run_network_gradchecks(const GradSuiteOptions& options) {
  static_assert(sizeof(real) == sizeof(double));
  const int64_t size = options.image_size;
  std::vector<GradSuiteLine> lines;

  GeneratorConfig g;
  g.base_width = options.generator_base_width;
  g.growth_rate = options.generator_growth_rate;
  NetworkParams gp = build_generator(g, mix_seed(options.seed, 1));
  const Tensor gx = random_image(Shape{1, g.in_channels(), size, size}, mix_seed(options.seed, 2));
  lines.push_back(check_network(
      "generator", gp, [&] { return generator_forward(gp, g, gx); }, options,
      mix_seed(options.seed, 3)));

  DiscriminatorConfig d;
  NetworkParams dp = build_discriminator(d, mix_seed(options.seed, 4));
  const Tensor dx = random_image(Shape{1, 3, size, size}, mix_seed(options.seed, 5));
  lines.push_back(check_network(
      "discriminator", dp, [&] { return discriminator_forward(dp, d, dx); }, options,
      mix_seed(options.seed, 6)));

  BlurModelConfig b;
  NetworkParams bp = build_blur_model(b, mix_seed(options.seed, 7));
  const Tensor bx = random_image(Shape{1, 3, size, size}, mix_seed(options.seed, 8));
  lines.push_back(check_network(
      "blur_model", bp, [&] { return blur_model_forward(bp, b, bx); }, options,
      mix_seed(options.seed, 9)));
  return lines;
}

}  // namespace focusfuse
