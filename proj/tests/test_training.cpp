#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"
#include "train/adam.hpp"
#include "train/checkpoint.hpp"
#include "train/losses.hpp"
#include "train/trainer.hpp"

using namespace focusfuse;
namespace fs = std::filesystem;

namespace {

Tensor filled(Shape s, float v) { return Tensor(s, v); }

Tensor random_tensor(Shape s, uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  Tensor t(s);
  for (float& v : t.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

Image random_image(int c, int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(c, h, w);
  const double fx = rng.uniform(0.05, 0.2);
  const double fy = rng.uniform(0.05, 0.2);
  for (int ch = 0; ch < c; ++ch) {
    const double phase = rng.uniform(0.0, 6.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        img.at(ch, y, x) = static_cast<float>(0.5 + 0.35 * std::sin(fx * x + fy * y + phase));
      }
    }
  }
  return img;
}

std::vector<SamplePair> toy_pairs(int n, uint64_t seed) {
  std::vector<SamplePair> out;
  for (int i = 0; i < n; ++i) {
    SamplePair s;
    s.target = random_image(3, 64, 64, mix_seed(seed, static_cast<uint64_t>(i)));
    s.layers.push_back(random_image(3, 64, 64, mix_seed(seed, 100 + static_cast<uint64_t>(i))));
    Image mask(1, 64, 64);
    for (int x = 0; x < 32; ++x) {
      for (int y = 0; y < 64; ++y) mask.at(0, y, x) = 1.0f;
    }
    s.masks.push_back(mask);
    out.push_back(std::move(s));
  }
  return out;
}

GeneratorConfig tiny_generator() {
  GeneratorConfig cfg;
  cfg.base_width = 2;
  cfg.growth_rate = 2;
  cfg.blocks_per_stage = 1;
  cfg.dense_layers_per_block = 2;
  return cfg;
}

DiscriminatorConfig tiny_discriminator() {
  DiscriminatorConfig cfg;
  cfg.widths = {2, 2, 4, 4, 4, 4, 4, 4};
  return cfg;
}

BlurModelConfig tiny_blur_model() {
  BlurModelConfig cfg;
  cfg.encoder_widths = {4, 4, 4};
  cfg.aspp_width = 4;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_path(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "focusfuse_test_training";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("content loss is the mean absolute difference") {
  const Shape s{1, 3, 8, 8};
  CHECK(content_loss(filled(s, 0.2f), filled(s, 0.5f)).item() == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(content_loss(filled(s, 0.5f), filled(s, 0.5f)).item() == 0.0f);
  CHECK_THROWS_AS(content_loss(filled(s, 0.0f), filled(Shape{1, 3, 8, 4}, 0.0f)), ShapeError);
}

TEST_CASE("adversarial loss is mean -log D(fake)") {
  const Shape s{2, 1, 2, 2};
  CHECK(adversarial_loss(filled(s, 0.5f)).item() == doctest::Approx(0.69314718).epsilon(1e-6));
  CHECK(adversarial_loss(filled(s, 0.433f)).item() == doctest::Approx(0.83702).epsilon(1e-4));
  const float at_one = adversarial_loss(filled(s, 1.0f)).item();
  CHECK(at_one >= 0.0f);
  CHECK(at_one <= 1.2e-7f);
  CHECK(std::isfinite(adversarial_loss(filled(s, 0.0f)).item()));
}

TEST_CASE("generator loss is content plus lambda times adversarial") {
  const Shape img{1, 3, 64, 64};
  const Tensor fake = filled(img, 0.0f);
  const Tensor real = filled(img, 1.0f);
  const Tensor d = filled(Shape{1, 1, 1, 1}, 0.5f);
  CHECK(generator_loss(fake, real, d, 0.001).item() ==
        doctest::Approx(1.000693147).epsilon(1e-7));
  CHECK(generator_loss(fake, real, d, 0.0).item() == content_loss(fake, real).item());
  CHECK_THROWS_AS(generator_loss(fake, real, d, -0.1), UsageError);

  const Tensor f2 = random_tensor(img, 3, 0.0, 1.0);
  const Tensor r2 = random_tensor(img, 4, 0.0, 1.0);
  const Tensor d2 = random_tensor(Shape{1, 1, 4, 4}, 5, 0.05, 0.95);
  for (double lambda : {0.0, 0.001, 0.5}) {
    const double combined = generator_loss(f2, r2, d2, lambda).item();
    const double parts = content_loss(f2, r2).item() + lambda * adversarial_loss(d2).item();
    CHECK(std::abs(combined - parts) <= 1e-7);
  }
}

TEST_CASE("discriminator loss is the binary cross-entropy") {
  const Shape s{1, 1, 2, 2};
  CHECK(discriminator_loss(filled(s, 0.5f), filled(s, 0.5f)).item() ==
        doctest::Approx(1.3862944).epsilon(1e-6));
  CHECK(discriminator_loss(filled(s, 0.9f), filled(s, 0.1f)).item() ==
        doctest::Approx(0.2107210).epsilon(1e-5));
}

TEST_CASE("blur model loss is the softmax cross-entropy") {
  const Shape s{1, 2, 4, 4};
  const Tensor truth = filled(Shape{1, 1, 4, 4}, 1.0f);
  CHECK(bm_loss(filled(s, 0.0f), truth).item() == doctest::Approx(0.69314718).epsilon(1e-6));
  Tensor logits(s);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) logits.at(0, 1, y, x) = std::log(3.0f);
  }
  CHECK(bm_loss(logits, truth).item() == doctest::Approx(0.2876821).epsilon(1e-6));
  CHECK(pixel_accuracy(logits, truth) == 1.0);
  CHECK(pixel_accuracy(logits, filled(Shape{1, 1, 4, 4}, 0.0f)) == 0.0);
  CHECK_THROWS(bm_loss(filled(s, 0.0f), filled(Shape{1, 1, 4, 4}, 0.5f)));
}

TEST_CASE("content loss gradient matches finite differences") {
  GradCheckOptions opt;
  opt.step = 1e-2;
  const Shape img{2, 3, 8, 8};
  Rng rng(11);
  Tensor real = random_tensor(img, 12, 0.0, 1.0);
  Tensor fake(img);
  for (int64_t i = 0; i < fake.numel(); ++i) {
    const float off = static_cast<float>(rng.uniform(0.05, 0.2));
    fake.data()[i] = real.data()[i] + (rng.uniform() < 0.5 ? off : -off);
  }
  std::vector<Tensor> wrt{fake};
  const auto r = check_gradients(
      "content_loss", [&] { return content_loss(wrt[0], real); }, wrt, opt);
  CHECK_MESSAGE(r.passed(), r.max_rel_error);
}

// The log losses store their value in single precision, which swamps finite
// differences for the smaller coordinates; they are compared instead against
// double-precision differences of an independent evaluation of the formula.
TEST_CASE("log loss gradients match double-precision finite differences") {
  Rng rng(21);
  const int n = 8;
  Tensor d_real = random_tensor(Shape{2, 1, 2, 2}, 13, 0.1, 0.9);
  Tensor d_fake = random_tensor(Shape{2, 1, 2, 2}, 14, 0.1, 0.9);
  Tensor logits = random_tensor(Shape{2, 2, 2, 2}, 15, -2.0, 2.0);
  Tensor truth(Shape{2, 1, 2, 2});
  for (float& v : truth.data()) v = rng.uniform() < 0.5 ? 0.0f : 1.0f;

  auto as_double = [](const Tensor& t) { return std::vector<double>(t.data().begin(), t.data().end()); };
  auto d_formula = [&](const std::vector<double>& r, const std::vector<double>& f) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc -= std::log(r[i]) + std::log(1.0 - f[i]);
    return acc / n;
  };
  auto bm_formula = [&](const std::vector<double>& z) {
    double acc = 0.0;
    for (int b = 0; b < 2; ++b) {
      for (int i = 0; i < 4; ++i) {
        const double a = z[b * 8 + i];
        const double c = z[b * 8 + 4 + i];
        const double p1 = 1.0 / (1.0 + std::exp(a - c));
        acc -= truth.data()[b * 4 + i] == 1.0f ? std::log(p1) : std::log(1.0 - p1);
      }
    }
    return acc / n;
  };
  auto fd = [](auto&& fn, std::vector<double> x, size_t i) {
    const double h = 1e-6;
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = fn(x);
    x[i] = x0 - h;
    const double down = fn(x);
    return (up - down) / (2 * h);
  };

  d_real.set_requires_grad(true);
  d_fake.set_requires_grad(true);
  logits.set_requires_grad(true);
  {
    Tape tape;
    Tape::Scope scope(tape);
    tape.backward(ops::add(discriminator_loss(d_real, d_fake), bm_loss(logits, truth)));
  }
  const auto r = as_double(d_real);
  const auto f = as_double(d_fake);
  for (size_t i = 0; i < static_cast<size_t>(n); ++i) {
    const double gr = fd([&](const std::vector<double>& x) { return d_formula(x, f); }, r, i);
    const double gf = fd([&](const std::vector<double>& x) { return d_formula(r, x); }, f, i);
    CHECK(d_real.grad()[i] == doctest::Approx(gr).epsilon(1e-5));
    CHECK(d_fake.grad()[i] == doctest::Approx(gf).epsilon(1e-5));
  }
  const auto z = as_double(logits);
  for (size_t i = 0; i < z.size(); ++i) {
    CHECK(logits.grad()[i] == doctest::Approx(fd(bm_formula, z, i)).epsilon(1e-5));
  }

  Tensor d = random_tensor(Shape{1, 1, 2, 2}, 16, 0.1, 0.9);
  d.set_requires_grad(true);
  {
    Tape tape;
    Tape::Scope scope(tape);
    tape.backward(adversarial_loss(d));
  }
  for (size_t i = 0; i < 4; ++i) {
    CHECK(d.grad()[i] == doctest::Approx(-1.0 / (4.0 * d.data()[i])).epsilon(1e-6));
  }
}

TEST_CASE("Adam first step moves by lr with bias correction") {
  NetworkParams p("toy");
  p.add("a", Tensor(Shape{1, 1, 1, 2}, std::vector<float>{0.0f, 0.5f}));
  AdamState adam(p, AdamConfig{});
  p.set_trainable(true);
  {
    Tape tape;
    Tape::Scope scope(tape);
    // d/da of 0.01 * a[0] is 0.01; a[1] gets a zero gradient.
    const Tensor w(Shape{1, 1, 1, 2}, std::vector<float>{0.01f, 0.0f});
    tape.backward(ops::sum(ops::mul(p.at("a"), w)));
  }
  adam.step(p, 1e-3);
  CHECK(p.at("a").data()[0] == doctest::Approx(-9.99999e-4).epsilon(1e-6));
  CHECK(p.at("a").data()[1] == 0.5f);
  CHECK(adam.steps() == 1);
  CHECK_FALSE(p.at("a").has_grad());
  CHECK_THROWS_AS(adam.step(p, 1e-3), UsageError);
}

TEST_CASE("learning rates decay per epoch") {
  TrainConfig cfg;
  const auto [g0, d0] = decay_lr(cfg, 0);
  CHECK(g0 == doctest::Approx(0.5e-4));
  CHECK(d0 == doctest::Approx(0.25e-4));
  const auto [g1, d1] = decay_lr(cfg, 1);
  CHECK(g1 == doctest::Approx(0.4e-4));
  CHECK(d1 == doctest::Approx(0.2e-4));
  for (int e = 0; e < 5; ++e) {
    const auto [g, d] = decay_lr(cfg, e);
    CHECK(d / g == doctest::Approx(0.5));
  }
}

TEST_CASE("training config survives the key=value round trip") {
  TrainConfig cfg;
  cfg.lambda_adv = 0.0123;
  cfg.lr_g = 3.3e-4;
  cfg.seed = 77;
  cfg.update_discriminator = false;
  cfg.iterations_per_epoch = 9;
  const TrainConfig back = train_config_from_kv(train_config_to_kv(cfg));
  CHECK(back.lambda_adv == cfg.lambda_adv);
  CHECK(back.lr_g == cfg.lr_g);
  CHECK(back.seed == 77);
  CHECK_FALSE(back.update_discriminator);
  CHECK(back.iterations_per_epoch == 9);
}

TEST_CASE("epoch order is a permutation fixed by seed and epoch") {
  const auto a = epoch_order(3, 0, 10);
  CHECK(a == epoch_order(3, 0, 10));
  CHECK(a != epoch_order(3, 1, 10));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == i);
}

TEST_CASE("checkpoint files round-trip byte for byte") {
  TrainConfig cfg;
  cfg.seed = 4;
  FusionTrainer t(toy_pairs(2, 1), tiny_generator(), tiny_discriminator(), cfg);
  t.run(2);
  const fs::path a = temp_path("a.ffc");
  const fs::path b = temp_path("b.ffc");
  t.save(a.string());
  FusionTrainer::resume(a.string(), toy_pairs(2, 1)).save(b.string());
  CHECK(slurp(a) == slurp(b));

  const Checkpoint ckpt = read_checkpoint(a.string());
  CHECK_THROWS_AS(require_fingerprint(ckpt, "generator;k=2"), FormatError);

  const std::string bytes = slurp(a);
  const fs::path cut = temp_path("cut.ffc");
  for (size_t keep : {size_t{3}, size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::ofstream(cut, std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(keep));
    CHECK_THROWS_AS(read_checkpoint(cut.string()), FormatError);
  }
  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(cut, std::ios::binary).write(bad.data(), static_cast<std::streamsize>(bad.size()));
  CHECK_THROWS_AS(read_checkpoint(cut.string()), FormatError);
  CHECK_THROWS_AS(read_checkpoint(temp_path("missing.ffc").string()), IoError);
}

TEST_CASE("generator checkpoints refuse a different architecture") {
  FusionTrainer t(toy_pairs(1, 1), tiny_generator(), tiny_discriminator(), TrainConfig{});
  const fs::path p = temp_path("arch.ffc");
  t.save(p.string());
  Checkpoint ckpt = read_checkpoint(p.string());
  GeneratorConfig other = tiny_generator();
  other.base_width = 3;
  CHECK_THROWS_AS(require_fingerprint(ckpt, generator_fingerprint(other) + "|" +
                                                discriminator_fingerprint(tiny_discriminator())),
                  FormatError);
  ckpt.fingerprint = generator_fingerprint(other) + "|" +
                     discriminator_fingerprint(tiny_discriminator());
  write_checkpoint(p.string(), ckpt);
  CHECK_THROWS_AS(load_generator(p.string()), FormatError);
}

TEST_CASE("resumed fusion training continues the same trajectory") {
  TrainConfig cfg;
  cfg.seed = 9;
  cfg.iterations_per_epoch = 3;
  cfg.lr_g = 1e-3;
  cfg.lr_d = 5e-4;
  FusionTrainer straight(toy_pairs(3, 2), tiny_generator(), tiny_discriminator(), cfg);
  straight.run(10);

  FusionTrainer first(toy_pairs(3, 2), tiny_generator(), tiny_discriminator(), cfg);
  first.run(5);
  const fs::path p = temp_path("resume.ffc");
  first.save(p.string());
  FusionTrainer second = FusionTrainer::resume(p.string(), toy_pairs(3, 2));
  CHECK(second.iteration() == 5);
  second.run(5);

  CHECK(second.generator().bit_equal(straight.generator()));
  CHECK(second.discriminator().bit_equal(straight.discriminator()));
  for (size_t i = 0; i < 5; ++i) {
    const HistoryRow& a = straight.history()[5 + i];
    const HistoryRow& b = second.history()[i];
    CHECK(a.iteration == b.iteration);
    CHECK(a.epoch == b.epoch);
    CHECK(a.l_content == b.l_content);
    CHECK(a.l_d == b.l_d);
    CHECK(a.lr_g == b.lr_g);
  }
}

TEST_CASE("generator step leaves D alone and D step leaves G alone") {
  TrainConfig cfg;
  cfg.update_discriminator = false;
  FusionTrainer frozen(toy_pairs(2, 3), tiny_generator(), tiny_discriminator(), cfg);
  const NetworkParams g0 = frozen.generator().clone();
  const NetworkParams d0 = frozen.discriminator().clone();
  frozen.run(2);
  CHECK(frozen.discriminator().bit_equal(d0));
  CHECK_FALSE(frozen.generator().bit_equal(g0));

  cfg.update_discriminator = true;
  FusionTrainer both(toy_pairs(2, 3), tiny_generator(), tiny_discriminator(), cfg);
  both.step();
  CHECK_FALSE(both.discriminator().bit_equal(d0));
  for (const auto& [name, t] : both.generator()) {
    CHECK_FALSE(t.requires_grad());
    CHECK_FALSE(t.has_grad());
  }
}

TEST_CASE("lambda 0 with a frozen discriminator is plain MAE regression") {
  TrainConfig cfg;
  cfg.lambda_adv = 0.0;
  cfg.update_discriminator = false;
  cfg.lr_g = 1e-3;
  cfg.seed = 5;
  cfg.iterations_per_epoch = 2;
  FusionTrainer gan(toy_pairs(3, 4), tiny_generator(), tiny_discriminator(), cfg);
  gan.run(6);
  const MaeRun mae = train_mae_reference(toy_pairs(3, 4), tiny_generator(), cfg, 6);
  CHECK(gan.generator().bit_equal(mae.generator));
  for (size_t i = 0; i < 6; ++i) {
    CHECK(gan.history()[i].l_content == mae.history[i].l_content);
    CHECK(gan.history()[i].lr_g == mae.history[i].lr_g);
  }
}

TEST_CASE("a single generator step with lambda 0 lowers the content loss") {
  int failures = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    TrainConfig cfg;
    cfg.lambda_adv = 0.0;
    cfg.lr_g = 1e-4;
    cfg.seed = seed;
    FusionTrainer t(toy_pairs(1, 100 + seed), tiny_generator(), tiny_discriminator(), cfg);
    const double before = t.dataset_content_loss();
    t.step();
    failures += t.dataset_content_loss() >= before;
  }
  CHECK(failures <= 1);
}

TEST_CASE("computing masks leaves the blur model untouched") {
  const NetworkParams bm = build_blur_model(tiny_blur_model(), 3);
  const NetworkParams before = bm.clone();
  std::vector<SamplePair> data = toy_pairs(2, 5);
  for (auto& s : data) s.masks.clear();
  compute_masks(bm, tiny_blur_model(), data);
  CHECK(bm.bit_equal(before));
  for (const auto& s : data) {
    REQUIRE(s.masks.size() == 1);
    for (float v : s.masks[0].data) CHECK((v == 0.0f || v == 1.0f));
  }
}

TEST_CASE("blur model trainer learns a trivial split and resumes") {
  std::vector<BmSample> data;
  for (int i = 0; i < 2; ++i) {
    BmSample s;
    s.image = Image(3, 64, 64, 0.2f);
    s.mask = Image(1, 64, 64, 0.0f);
    for (int y = 0; y < 64; ++y) {
      for (int x = 32; x < 64; ++x) {
        for (int c = 0; c < 3; ++c) s.image.at(c, y, x) = 0.8f;
        s.mask.at(0, y, x) = 1.0f;
      }
    }
    data.push_back(s);
  }
  TrainConfig cfg;
  cfg.batch_bm = 2;
  cfg.seed = 1;
  BmTrainer t(data, tiny_blur_model(), cfg);
  t.run(4);
  const fs::path p = temp_path("bm.ffc");
  t.save(p.string());
  BmTrainer r = BmTrainer::resume(p.string(), data);
  t.run(3);
  r.run(3);
  CHECK(r.params().bit_equal(t.params()));
  CHECK(load_blur_model(p.string()).params.size() == t.params().size());
  CHECK_THROWS_AS(load_generator(p.string()), FormatError);
  CHECK(t.history().back().loss < t.history().front().loss);
}

TEST_CASE("history CSV has the fixed header") {
  std::vector<HistoryRow> rows(2);
  rows[1].iteration = 1;
  rows[1].l_content = 0.25;
  const std::string csv = history_csv(rows);
  CHECK(csv.rfind("iteration,epoch,l_content,l_adv,l_d,lr_g,lr_d\n", 0) == 0);
  CHECK(csv.find("1,0,0.25,0,0,0,0\n") != std::string::npos);
}

TEST_CASE("fusion inputs interleave RGB and mask per layer") {
  std::vector<SamplePair> data = toy_pairs(1, 7);
  data[0].layers.push_back(data[0].target);
  data[0].masks.push_back(Image(1, 64, 64, 1.0f));
  const Tensor x = fusion_input({&data[0]}, true);
  CHECK(x.shape() == Shape{1, 8, 64, 64});
  CHECK(x.at(0, 3, 0, 0) == 1.0f);
  CHECK(x.at(0, 3, 0, 40) == 0.0f);
  CHECK(x.at(0, 7, 5, 40) == 1.0f);
  CHECK(x.at(0, 4, 2, 3) == data[0].target.at(0, 2, 3));
  const Tensor z = fusion_input({&data[0]}, false);
  CHECK(z.at(0, 3, 0, 0) == 0.0f);
  CHECK(z.at(0, 7, 0, 0) == 0.0f);
}
