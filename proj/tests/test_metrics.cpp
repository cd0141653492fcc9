#include <cmath>
#include <filesystem>
#include <string>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "degrade/synth.hpp"
#include "doctest.h"
#include "image/png_io.hpp"
#include "metrics/metrics.hpp"

using namespace focusfuse;
namespace fs = std::filesystem;

namespace {

Image noise(int c, int h, int w, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Image img(c, h, w);
  for (float& v : img.data) v = static_cast<float>(scale * rng.uniform());
  return img;
}

// Multiples of 1/256, so 2x + 1/8 and similar maps stay exact in float.
Image dyadic(int c, int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(c, h, w);
  for (float& v : img.data) v = static_cast<float>(rng.uniform_int(0, 255)) / 256.0f;
  return img;
}

}  // namespace

TEST_CASE("ssim of an image with itself is one") {
  const Image x = synth_cytology(64, 64, 1);
  CHECK(ssim(x, x) == 1.0);
}

TEST_CASE("ssim of two constants matches the hand evaluation") {
  MetricConfig cfg;
  cfg.range = 255.0;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double expected = (2 * 100.0 * 50.0 + c1) / (100.0 * 100.0 + 50.0 * 50.0 + c1);
  CHECK(expected == doctest::Approx(0.8001).epsilon(1e-4));
  CHECK(ssim(Image(3, 16, 16, 100.0f), Image(3, 16, 16, 50.0f), cfg) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("ssim is symmetric, bounded and one only for equal images") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Image x = noise(3, 32, 32, seed);
    Image y = x;
    y.data[seed] += 0.01f;
    CHECK(std::abs(ssim(x, y) - ssim(y, x)) <= 1e-12);
    CHECK(ssim(x, y) < 1.0);
    const Image z = noise(3, 32, 32, 100 + seed);
    CHECK(ssim(x, z) <= 1.0);
  }
  CHECK_THROWS_AS(ssim(Image(3, 8, 8), Image(3, 8, 9)), ShapeError);
}

TEST_CASE("ssim on 8-bit values with L=255 equals unit values with L=1") {
  const Image a = noise(3, 40, 40, 4);
  const Image b = noise(3, 40, 40, 5);
  Image a8(3, 40, 40);
  Image b8(3, 40, 40);
  Image au(3, 40, 40);
  Image bu(3, 40, 40);
  for (size_t i = 0; i < a.data.size(); ++i) {
    a8.data[i] = to_u8(a.data[i]);
    b8.data[i] = to_u8(b.data[i]);
    au.data[i] = from_u8(to_u8(a.data[i]));
    bu.data[i] = from_u8(to_u8(b.data[i]));
  }
  MetricConfig eight;
  eight.range = 255.0;
  CHECK(std::abs(ssim(a8, b8, eight) - ssim(au, bu)) <= 1e-6);
}

TEST_CASE("cc is one on itself and invariant under affine maps") {
  const Image x = dyadic(3, 32, 32, 1);
  const Image y = dyadic(3, 32, 32, 2);
  CHECK(*cc(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  Image up = x;
  Image down = x;
  Image y2 = y;
  for (size_t i = 0; i < x.data.size(); ++i) {
    up.data[i] = 2.0f * x.data[i] + 0.125f;
    down.data[i] = -0.5f * x.data[i] + 1.0f;
    y2.data[i] = 4.0f * y.data[i] + 3.0f;
  }
  CHECK(*cc(x, up) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*cc(x, down) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(*cc(up, y) - *cc(x, y)) <= 1e-9);
  CHECK(std::abs(*cc(x, y2) - *cc(x, y)) <= 1e-9);
  CHECK_FALSE(cc(Image(3, 8, 8, 0.2f), Image(3, 8, 8, 0.7f)).has_value());
}

TEST_CASE("entropy of constant and uniform images") {
  CHECK(entropy(Image(1, 16, 16, 0.4f)) == 0.0);
  Image ramp(1, 16, 16);
  for (int i = 0; i < 256; ++i) ramp.data[static_cast<size_t>(i)] = from_u8(static_cast<uint8_t>(i));
  CHECK(entropy(ramp) == 8.0);
  Image ramp3(3, 32, 32);
  for (size_t i = 0; i < ramp3.data.size(); ++i) ramp3.data[i] = static_cast<float>(i % 256);
  MetricConfig eight;
  eight.range = 255.0;
  CHECK(entropy(ramp3, eight) == 8.0);
}

TEST_CASE("qmi is one on itself and undefined for constant pairs") {
  const Image x = synth_cytology(64, 64, 9);
  CHECK(*qmi(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(mutual_information(x, x) == doctest::Approx(entropy(x)).epsilon(1e-12));
  CHECK_FALSE(qmi(Image(3, 8, 8, 0.2f), Image(3, 8, 8, 0.7f)).has_value());
  const double q = *qmi(x, noise(3, 64, 64, 3));
  CHECK(q >= 0.0);
  CHECK(q <= 1.0);
}

TEST_CASE("qmi of independent noise stays below 0.05") {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = qmi(noise(1, 512, 512, 2 * seed), noise(1, 512, 512, 2 * seed + 1));
    REQUIRE(q.has_value());
    CHECK(*q < 0.05);
  }
}

TEST_CASE("evaluate_set means skip undefined values with a count") {
  const Image x = synth_cytology(64, 64, 1);
  const Image y = synth_cytology(64, 64, 2);
  const Image flat(3, 64, 64, 0.5f);
  const EvalReport same = evaluate_set({{"a", x, x}, {"b", y, y}});
  CHECK(*same.mean_ssim == doctest::Approx(1.0));
  CHECK(*same.mean_cc == doctest::Approx(1.0));
  CHECK(*same.mean_qmi == doctest::Approx(1.0));

  const EvalReport mixed = evaluate_set({{"a", x, y}, {"b", flat, flat}, {"c", y, x}});
  CHECK(mixed.excluded_cc == 1);
  CHECK(mixed.excluded_ssim == 0);
  CHECK(*mixed.mean_cc == doctest::Approx((*mixed.rows[0].cc + *mixed.rows[2].cc) / 2));
  const std::string csv = report_csv(mixed);
  CHECK(csv.rfind("image_id,ssim,cc,qmi\n", 0) == 0);
  CHECK(csv.find("\nb,1,,") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(csv.find("\nexcluded,0,1,1\n") != std::string::npos);
  CHECK(report_table(mixed).find("SSIM") < report_table(mixed).find("QMI"));
  CHECK_THROWS_AS(evaluate_set({}), UsageError);
}

TEST_CASE("evaluate_dirs matches files by name") {
  const fs::path root = fs::temp_directory_path() / "focusfuse_test_metrics";
  fs::remove_all(root);
  fs::create_directories(root / "pred");
  fs::create_directories(root / "truth");
  for (int i = 0; i < 2; ++i) {
    const Image img = synth_cytology(64, 64, static_cast<uint64_t>(i));
    write_png((root / "pred" / (std::to_string(i) + ".png")).string(), img);
    write_png((root / "truth" / (std::to_string(i) + ".png")).string(), img);
  }
  const EvalReport r = evaluate_dirs((root / "pred").string(), (root / "truth").string());
  CHECK(r.rows.size() == 2);
  CHECK(*r.mean_ssim == 1.0);
  write_png((root / "pred" / "extra.png").string(), Image(3, 64, 64));
  try {
    evaluate_dirs((root / "pred").string(), (root / "truth").string());
    FAIL("expected an error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("extra.png") != std::string::npos);
  }
}
