#include <cmath>
#include <string>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"
#include "nets/grad_suite.hpp"
#include "nets/networks.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"

using namespace focusfuse;

namespace {

Tensor random_tensor(Shape s, uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  Tensor t(s);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

GeneratorConfig small_generator() {
  GeneratorConfig cfg;
  cfg.base_width = 4;
  cfg.growth_rate = 4;
  return cfg;
}

DiscriminatorConfig small_discriminator() {
  DiscriminatorConfig cfg;
  cfg.widths = {4, 4, 8, 8, 8, 8, 8, 8};
  return cfg;
}

BlurModelConfig small_blur_model() {
  BlurModelConfig cfg;
  cfg.encoder_widths = {4, 8, 8};
  cfg.aspp_width = 4;
  return cfg;
}

void check_open_unit(const Tensor& t) {
  for (float v : t.data()) {
    REQUIRE(v > 0.0f);
    REQUIRE(v < 1.0f);
  }
}

}  // namespace

TEST_CASE("generator head weight follows the 4k input channels") {
  GeneratorConfig cfg;
  CHECK(build_generator(cfg, 1).at("head.w").shape() == Shape{64, 4, 9, 9});
  cfg.k_layers = 3;
  CHECK(build_generator(cfg, 1).at("head.w").shape() == Shape{64, 12, 9, 9});
}

TEST_CASE("generator at 64x64 keeps shape and stays in (0,1)") {
  const GeneratorConfig cfg = small_generator();
  const NetworkParams p = build_generator(cfg, 3);
  const Tensor y = generator_forward(p, cfg, random_tensor(Shape{2, 4, 64, 64}, 9));
  CHECK(y.shape() == Shape{2, 3, 64, 64});
  check_open_unit(y);
}

TEST_CASE("generator rejects sizes the pooling stages cannot halve") {
  const GeneratorConfig cfg = small_generator();
  const NetworkParams p = build_generator(cfg, 3);
  CHECK_THROWS_AS(generator_forward(p, cfg, Tensor(Shape{1, 4, 68, 64})), ShapeError);
  CHECK_THROWS_AS(generator_forward(p, cfg, Tensor(Shape{1, 4, 32, 32})), ShapeError);
  CHECK_THROWS_AS(generator_forward(p, cfg, Tensor(Shape{1, 3, 64, 64})), ShapeError);
}

TEST_CASE("builders are deterministic per seed") {
  CHECK(build_generator(small_generator(), 5).bit_equal(build_generator(small_generator(), 5)));
  CHECK_FALSE(build_generator(small_generator(), 5).bit_equal(build_generator(small_generator(), 6)));
  CHECK(build_discriminator(small_discriminator(), 5)
            .bit_equal(build_discriminator(small_discriminator(), 5)));
  CHECK(build_blur_model(small_blur_model(), 5).bit_equal(build_blur_model(small_blur_model(), 5)));
}

TEST_CASE("forwards are deterministic") {
  const GeneratorConfig cfg = small_generator();
  const NetworkParams p = build_generator(cfg, 3);
  const Tensor x = random_tensor(Shape{1, 4, 64, 64}, 10);
  const Tensor a = generator_forward(p, cfg, x);
  const Tensor b = generator_forward(p, cfg, x);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST_CASE("parameter counts match the fingerprint") {
  // Default generator by hand: head 4*64*81+64+64, then per stage
  // common (in*w*9+2w) + 2 * (sum_l ((w+32l)*32*9+64) + (w+96)*w+2w).
  auto stage = [](int64_t in, int64_t w) {
    int64_t t = in * w * 9 + 2 * w;
    for (int b = 0; b < 2; ++b) {
      for (int l = 0; l < 3; ++l) t += (w + 32 * l) * 32 * 9 + 64;
      t += (w + 96) * w + 2 * w;
    }
    return t;
  };
  int64_t expected = 4 * 64 * 81 + 128;
  expected += stage(64, 64) + stage(64, 128) + stage(128, 256);
  expected += 256 * 512 * 9 + 1024 + 2 * (512 * 512 * 9 + 1024);
  expected += stage(256 + 512, 256) + stage(128 + 256, 128) + stage(64 + 128, 64);
  expected += 64 * 3 * 81 + 3;

  GeneratorConfig g;
  const NetworkParams gp = build_generator(g, 0);
  CHECK(generator_param_count(g) == expected);
  CHECK(gp.parameter_count() == expected);
  CHECK(gp.fingerprint() == generator_fingerprint(g));
  CHECK(gp.fingerprint().ends_with(";params=" + std::to_string(expected)));

  DiscriminatorConfig d;
  int64_t d_expected = 0;
  int in = 3;
  for (int w : d.widths) {
    d_expected += in * w * 9 + w;
    in = w;
  }
  d_expected += 512 + 1;
  CHECK(build_discriminator(d, 0).parameter_count() == d_expected);
  CHECK(discriminator_param_count(d) == d_expected);

  BlurModelConfig bm;
  const int64_t bm_expected = (3 * 32 * 9 + 64) + (32 * 64 * 9 + 128) + (64 * 128 * 9 + 256) +
                              (128 * 64 + 128) + 4 * (128 * 64 * 9 + 128) + (320 * 64 + 128) +
                              (64 * 2 + 2);
  CHECK(build_blur_model(bm, 0).parameter_count() == bm_expected);
  CHECK(blur_model_param_count(bm) == bm_expected);
}

TEST_CASE("fingerprints reconstruct their configs") {
  GeneratorConfig g = small_generator();
  g.k_layers = 3;
  const GeneratorConfig g2 = generator_config_from_fingerprint(generator_fingerprint(g));
  CHECK(generator_fingerprint(g2) == generator_fingerprint(g));
  CHECK(g2.k_layers == 3);

  DiscriminatorConfig d = small_discriminator();
  CHECK(discriminator_fingerprint(discriminator_config_from_fingerprint(
            discriminator_fingerprint(d))) == discriminator_fingerprint(d));
  BlurModelConfig b = small_blur_model();
  CHECK(blur_model_fingerprint(blur_model_config_from_fingerprint(blur_model_fingerprint(b))) ==
        blur_model_fingerprint(b));

  CHECK_THROWS_AS(generator_config_from_fingerprint(blur_model_fingerprint(b)), FormatError);
  std::string tampered = generator_fingerprint(g);
  tampered.replace(tampered.find("params=") + 7, std::string::npos, "1");
  CHECK_THROWS_AS(generator_config_from_fingerprint(tampered), FormatError);
}

TEST_CASE("dense block layer inputs grow by the growth rate") {
  const GeneratorConfig cfg;
  const NetworkParams p = build_generator(cfg, 0);
  for (int s = 0; s < cfg.n_scales; ++s) {
    for (const char* side : {"enc", "dec"}) {
      const std::string stage = side + std::to_string(s);
      const int64_t block_in = p.at(stage + ".common.w").shape().n;
      for (int b = 0; b < cfg.blocks_per_stage; ++b) {
        const std::string block = stage + ".db" + std::to_string(b);
        for (int l = 0; l < cfg.dense_layers_per_block; ++l) {
          const Shape w = p.at(block + ".l" + std::to_string(l) + ".w").shape();
          CHECK(w.c == block_in + l * cfg.growth_rate);
          CHECK(w.n == cfg.growth_rate);
        }
        const Shape t = p.at(block + ".trans.w").shape();
        CHECK(t.c == block_in + cfg.dense_layers_per_block * cfg.growth_rate);
        CHECK(t.n == block_in);
      }
    }
  }
  CHECK(p.at("enc0.common.w").shape().n == 64);
  CHECK(p.at("enc1.common.w").shape().n == 128);
  CHECK(p.at("enc2.common.w").shape().n == 256);
  CHECK(p.at("bottom.l2.w").shape().n == 512);
  CHECK(p.at("dec2.common.w").shape().c == 256 + 512);
  CHECK(p.at("top.w").shape() == Shape{3, 64, 9, 9});
}

TEST_CASE("initialization is He-uniform with zero bias and 0.25 slopes") {
  const NetworkParams p = build_generator(GeneratorConfig{}, 0);
  const double bound = std::sqrt(6.0 / (4.0 * 81.0));
  double max_abs = 0.0;
  for (float v : p.at("head.w").data()) max_abs = std::max(max_abs, std::abs(double(v)));
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.9 * bound);
  for (float v : p.at("head.b").data()) CHECK(v == 0.0f);
  for (float v : p.at("head.a").data()) CHECK(v == 0.25f);
}

TEST_CASE("discriminator output is one cell per 64x64 patch") {
  const DiscriminatorConfig cfg = small_discriminator();
  const NetworkParams p = build_discriminator(cfg, 2);
  CHECK(cfg.reduction() == 64);
  const Tensor y64 = discriminator_forward(p, cfg, random_tensor(Shape{1, 3, 64, 64}, 1));
  CHECK(y64.shape() == Shape{1, 1, 1, 1});
  const Tensor y256 = discriminator_forward(p, cfg, random_tensor(Shape{1, 3, 256, 256}, 1));
  CHECK(y256.shape() == Shape{1, 1, 4, 4});
  check_open_unit(y256);
  CHECK_THROWS_AS(discriminator_forward(p, cfg, Tensor(Shape{1, 3, 96, 96})), ShapeError);
}

TEST_CASE("blur model logits match the input size") {
  const BlurModelConfig cfg = small_blur_model();
  const NetworkParams p = build_blur_model(cfg, 4);
  const Tensor logits = blur_model_forward(p, cfg, random_tensor(Shape{2, 3, 64, 64}, 2));
  CHECK(logits.shape() == Shape{2, 2, 64, 64});
  const Tensor prob = ops::softmax_channels(logits);
  for (int64_t i = 0; i < 64 * 64; ++i) {
    const double s = double(prob.data()[size_t(i)]) + double(prob.data()[size_t(64 * 64 + i)]);
    REQUIRE(std::abs(s - 1.0) < 1e-6);
  }
  CHECK_THROWS_AS(blur_model_forward(p, cfg, Tensor(Shape{1, 3, 60, 60})), ShapeError);
}

TEST_CASE("binarize_mask takes the argmax with ties to class 0") {
  const Tensor all_blurred =
      binarize_mask(Tensor(Shape{1, 2, 2, 2}, std::vector<float>{0, 0, 0, 0, 1, 1, 1, 1}));
  for (float v : all_blurred.data()) CHECK(v == 1.0f);
  const Tensor tie = binarize_mask(Tensor(Shape{1, 2, 2, 2}, 0.5f));
  for (float v : tie.data()) CHECK(v == 0.0f);

  Tensor logits = random_tensor(Shape{2, 2, 8, 8}, 7, -3.0, 3.0);
  Tensor shifted = logits.clone();
  Rng rng(8);
  for (int64_t n = 0; n < 2; ++n) {
    for (int64_t y = 0; y < 8; ++y) {
      for (int64_t x = 0; x < 8; ++x) {
        const float c = static_cast<float>(rng.uniform_int(-4, 4));
        shifted.at(n, 0, y, x) += c;
        shifted.at(n, 1, y, x) += c;
      }
    }
  }
  const Tensor a = binarize_mask(logits);
  const Tensor b = binarize_mask(shifted);
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  CHECK_THROWS_AS(binarize_mask(Tensor(Shape{1, 3, 2, 2})), ShapeError);
}

TEST_CASE("full networks pass a sampled gradient check") {
  GradSuiteOptions opt;
  opt.coords_per_tensor = 2;
  for (const GradSuiteLine& line : run_network_gradchecks(opt)) {
    INFO(line.name << " max rel err " << line.max_rel_error);
    CHECK(line.passed());
    CHECK(line.coords_checked > 0);
  }
}
