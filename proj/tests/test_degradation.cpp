#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "degrade/dataset.hpp"
#include "degrade/degrade.hpp"
#include "degrade/synth.hpp"
#include "doctest.h"
#include "image/png_io.hpp"
#include "json.hpp"

using namespace focusfuse;
namespace fs = std::filesystem;

namespace {

Image noise_image(int h, int w, uint64_t seed) {
  Rng rng(seed);
  Image img(3, h, w);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "focusfuse_test_degradation" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int components(const Image& mask) {
  const int w = mask.width;
  const int h = mask.height;
  std::vector<int> label(static_cast<size_t>(w) * h, 0);
  int count = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mask.at(0, y, x) == 0.0f || label[static_cast<size_t>(y) * w + x]) continue;
      ++count;
      stack.push_back({x, y});
      label[static_cast<size_t>(y) * w + x] = count;
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        const int nx[4] = {cx - 1, cx + 1, cx, cx};
        const int ny[4] = {cy, cy, cy - 1, cy + 1};
        for (int i = 0; i < 4; ++i) {
          if (nx[i] < 0 || ny[i] < 0 || nx[i] >= w || ny[i] >= h) continue;
          const size_t idx = static_cast<size_t>(ny[i]) * w + nx[i];
          if (mask.at(0, ny[i], nx[i]) == 0.0f || label[idx]) continue;
          label[idx] = count;
          stack.push_back({nx[i], ny[i]});
        }
      }
    }
  }
  return count;
}

}  // namespace

TEST_CASE("gaussian kernel has radius ceil(3 sigma) and unit sum") {
  CHECK(gaussian_kernel(1.0).size() == 7);
  CHECK(gaussian_kernel(2.5).size() == 17);
  double sum = 0.0;
  for (double v : gaussian_kernel(3.7)) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_kernel(0.0), UsageError);
  CHECK_THROWS_AS(gaussian_blur(Image(3, 8, 8), -1.0), UsageError);
}

TEST_CASE("blurring an impulse with sigma 1 gives the normalized 7x7 weight") {
  Image img(1, 21, 21);
  img.at(0, 10, 10) = 1.0f;
  const Image out = gaussian_blur(img, 1.0);
  double s = 0.0;
  for (int i = -3; i <= 3; ++i) s += std::exp(-0.5 * i * i);
  const double centre = 1.0 / (s * s);
  CHECK(centre == doctest::Approx(0.1592).epsilon(1e-3));
  CHECK(out.at(0, 10, 10) == doctest::Approx(centre).epsilon(1e-6));
  CHECK(out.at(0, 10, 11) == doctest::Approx(std::exp(-0.5) / (s * s)).epsilon(1e-6));
  CHECK(out.at(0, 10, 14) == 0.0f);
}

TEST_CASE("blur keeps constants and interior means") {
  const Image flat(3, 30, 40, 0.37f);
  for (float v : gaussian_blur(flat, 4.0).data) CHECK(std::abs(v - 0.37f) <= 1e-6f);

  Image bump(1, 64, 64);
  Rng rng(3);
  for (int y = 24; y < 40; ++y) {
    for (int x = 24; x < 40; ++x) bump.at(0, y, x) = static_cast<float>(rng.uniform());
  }
  const Image out = gaussian_blur(bump, 2.0);
  double a = 0.0;
  double b = 0.0;
  for (size_t i = 0; i < bump.data.size(); ++i) {
    a += bump.data[i];
    b += out.data[i];
  }
  CHECK(std::abs(a - b) / bump.data.size() <= 1e-4);
}

TEST_CASE("zero area leaves the image untouched") {
  DegradeConfig cfg;
  cfg.min_area = 0.0;
  cfg.max_area = 0.0;
  const Image img = synth_cytology(64, 64, 1);
  const Degraded d = degrade(img, cfg, 7);
  CHECK(d.image.data == img.data);
  for (float v : d.mask.data) CHECK(v == 0.0f);
}

TEST_CASE("degrade config ranges are validated") {
  DegradeConfig cfg;
  cfg.max_area = 1.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = DegradeConfig{};
  cfg.min_sigma = 0.0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = DegradeConfig{};
  cfg.max_regions = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
}

TEST_CASE("mask area stays in the configured range over 100 seeds") {
  const DegradeConfig cfg;
  const double tol = 0.02;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const Degraded d = degrade(synth_cytology(96, 96, seed), cfg, seed);
    double area = 0.0;
    for (float v : d.mask.data) area += v;
    area /= static_cast<double>(d.mask.data.size());
    CHECK(area >= cfg.min_area - tol);
    CHECK(area <= cfg.max_area + tol);
    CHECK(d.regions >= 1);
    CHECK(d.regions <= cfg.max_regions);
    CHECK(components(d.mask) <= d.regions);
  }
}

TEST_CASE("only pixels near a blurred region change") {
  const DegradeConfig cfg;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const Image img = noise_image(80, 80, seed);
    const Degraded d = degrade(img, cfg, 100 + seed);
    for (int y = 0; y < 80; ++y) {
      for (int x = 0; x < 80; ++x) {
        bool changed = false;
        for (int c = 0; c < 3; ++c) changed |= d.image.at(c, y, x) != img.at(c, y, x);
        if (!changed || d.mask.at(0, y, x) != 0.0f) continue;
        bool near = false;
        for (int dy = -cfg.feather; dy <= cfg.feather && !near; ++dy) {
          for (int dx = -cfg.feather; dx <= cfg.feather; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if (yy >= 0 && xx >= 0 && yy < 80 && xx < 80 && d.mask.at(0, yy, xx) != 0.0f) {
              near = true;
              break;
            }
          }
        }
        REQUIRE(near);
      }
    }
  }
}

TEST_CASE("blurred regions lose total variation") {
  const DegradeConfig cfg;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const Image img = seed % 2 ? noise_image(64, 64, seed) : synth_cytology(64, 64, seed);
    const Degraded d = degrade(img, cfg, seed);
    CHECK(total_variation(d.image, d.mask) <= total_variation(img, d.mask));
    CHECK(total_variation(gaussian_blur(img, 2.0)) <= total_variation(img));
  }
}

TEST_CASE("degrade is a pure function of its seed") {
  const Image img = synth_cytology(64, 64, 2);
  const DegradeConfig cfg;
  const Degraded a = degrade(img, cfg, 11);
  const Degraded b = degrade(img, cfg, 11);
  const Degraded c = degrade(img, cfg, 12);
  CHECK(a.image.data == b.image.data);
  CHECK(a.mask.data == b.mask.data);
  CHECK(a.mask.data != c.mask.data);
}

TEST_CASE("blur-model dataset: 10 pairs from 3 sources") {
  const fs::path src = fresh_dir("src");
  write_synth_images(src.string(), 3, 64, 64, 1, false);
  const fs::path out = fresh_dir("out");
  const auto entries = make_bm_dataset(src.string(), DegradeConfig{}, 10, out.string(), 5, false);
  CHECK(entries.size() == 10);
  CHECK(entries[3].reused);
  CHECK_FALSE(entries[2].reused);
  CHECK(list_pngs((out / "blurred").string()).size() == 10);
  CHECK(list_pngs((out / "mask").string()).size() == 10);

  std::ifstream manifest(out / "manifest.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(manifest, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("source"));
    CHECK(j.contains("seed"));
    CHECK(j.contains("blurred_path"));
    CHECK(j.contains("mask_path"));
    ++lines;
  }
  CHECK(lines == 10);

  for (const auto& e : entries) {
    const Image m = read_png((out / e.mask_path).string());
    CHECK(m.channels == 1);
    for (float v : m.data) CHECK((v == 0.0f || v == 1.0f));
  }
  CHECK(read_bm_dataset(out.string()).size() == 10);

  const fs::path again = fresh_dir("again");
  make_bm_dataset(src.string(), DegradeConfig{}, 10, again.string(), 5, false);
  for (const auto& e : entries) {
    CHECK(slurp(out / e.blurred_path) == slurp(again / e.blurred_path));
    CHECK(slurp(out / e.mask_path) == slurp(again / e.mask_path));
  }
  CHECK(slurp(out / "manifest.jsonl") == slurp(again / "manifest.jsonl"));

  CHECK_THROWS_AS(make_bm_dataset(src.string(), DegradeConfig{}, 10, out.string(), 5, false),
                  UsageError);
  CHECK_NOTHROW(make_bm_dataset(src.string(), DegradeConfig{}, 10, out.string(), 5, true));
  CHECK_THROWS_AS(make_bm_dataset(src.string(), DegradeConfig{}, 0, out.string(), 5, true),
                  UsageError);
  CHECK_THROWS_AS(make_bm_dataset((src / "nope").string(), DegradeConfig{}, 1, out.string(), 5, true),
                  IoError);
}

TEST_CASE("fusion dataset reports missing layers by name") {
  const fs::path src = fresh_dir("fsrc");
  write_synth_images(src.string(), 2, 64, 64, 3, false);
  const fs::path root = fresh_dir("fusion");
  make_fusion_dataset(src.string(), DegradeConfig{}, 1, root.string(), 4, false);
  const FusionDataset ds = read_fusion_dataset(root.string(), 1);
  CHECK(ds.samples.size() == 2);
  CHECK_FALSE(ds.has_masks);
  CHECK(ds.samples[0].layers.size() == 1);
  try {
    read_fusion_dataset(root.string(), 3);
    FAIL("expected an error");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("layer_m1") != std::string::npos);
    CHECK(msg.find("layer_p1") != std::string::npos);
  }
  const fs::path root3 = fresh_dir("fusion3");
  make_fusion_dataset(src.string(), DegradeConfig{}, 3, root3.string(), 4, false);
  const FusionDataset ds3 = read_fusion_dataset(root3.string(), 3);
  CHECK(ds3.samples[1].layers.size() == 3);
  CHECK(ds3.samples[1].layers[0].data != ds3.samples[1].layers[2].data);
}
