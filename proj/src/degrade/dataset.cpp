#include "degrade/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "degrade/synth.hpp"
#include "image/png_io.hpp"
#include "json.hpp"

namespace focusfuse {
namespace fs = std::filesystem;
namespace {

std::string numbered(int i, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*d.png", digits, i);
  return buf;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void refuse_overwrite(const fs::path& p, bool overwrite) {
  if (!overwrite && fs::exists(p)) {
    throw UsageError("'" + p.string() + "' already exists (use --force to overwrite)");
  }
}

std::vector<Image> read_sources(const std::string& src_dir, std::vector<std::string>& paths) {
  paths = list_pngs(src_dir);
  if (paths.empty()) throw IoError("no PNG images in '" + src_dir + "'");
  std::vector<Image> out;
  for (const auto& p : paths) out.push_back(read_png(p, 3));
  return out;
}

}  // namespace

std::vector<std::string> list_pngs(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("'" + dir + "' is not a directory");
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.push_back(entry.path().string());
    }
  }
  if (ec) throw IoError("cannot list '" + dir + "': " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> write_synth_images(const std::string& dir, int count, int height,
                                            int width, uint64_t seed, bool overwrite) {
  if (count < 1) throw UsageError("nothing to generate");
  prepare_dir(dir);
  std::vector<std::string> out;
  for (int i = 0; i < count; ++i) {
    const fs::path p = fs::path(dir) / numbered(i, 4);
    refuse_overwrite(p, overwrite);
    write_png(p.string(), synth_cytology(height, width, mix_seed(seed, static_cast<uint64_t>(i))));
    out.push_back(p.string());
  }
  return out;
}

std::vector<BmManifestEntry> make_bm_dataset(const std::string& src_dir, const DegradeConfig& cfg,
                                             int n, const std::string& out_dir, uint64_t seed,
                                             bool overwrite) {
  if (n < 1) throw UsageError("nothing to generate");
  cfg.validate();
  std::vector<std::string> paths;
  const std::vector<Image> sources = read_sources(src_dir, paths);
  const fs::path root(out_dir);
  refuse_overwrite(root / "manifest.jsonl", overwrite);
  prepare_dir(root / "blurred");
  prepare_dir(root / "mask");

  std::vector<BmManifestEntry> entries;
  std::ofstream manifest(root / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!manifest) throw IoError("cannot write '" + (root / "manifest.jsonl").string() + "'");
  for (int i = 0; i < n; ++i) {
    const size_t src = static_cast<size_t>(i) % sources.size();
    BmManifestEntry e;
    e.source = fs::path(paths[src]).filename().string();
    e.seed = mix_seed(seed, static_cast<uint64_t>(i));
    e.blurred_path = "blurred/" + numbered(i, 4);
    e.mask_path = "mask/" + numbered(i, 4);
    e.reused = static_cast<size_t>(i) >= sources.size();
    refuse_overwrite(root / e.blurred_path, overwrite);
    refuse_overwrite(root / e.mask_path, overwrite);
    const Degraded d = degrade(sources[src], cfg, e.seed);
    write_png((root / e.blurred_path).string(), d.image);
    write_png((root / e.mask_path).string(), d.mask);

    nlohmann::ordered_json line;
    line["source"] = e.source;
    line["seed"] = e.seed;
    line["blurred_path"] = e.blurred_path;
    line["mask_path"] = e.mask_path;
    line["reused"] = e.reused;
    manifest << line.dump() << "\n";
    entries.push_back(std::move(e));
  }
  if (!manifest.flush()) throw IoError("failed writing the manifest");
  return entries;
}

std::vector<BmSample> read_bm_dataset(const std::string& dir) {
  const fs::path root(dir);
  std::vector<BmSample> out;
  for (const auto& path : list_pngs((root / "blurred").string())) {
    const fs::path mask = root / "mask" / fs::path(path).filename();
    if (!fs::exists(mask)) throw IoError("no mask for '" + path + "' (expected '" + mask.string() + "')");
    BmSample s{read_png(path, 3), read_png(mask.string(), 1)};
    if (s.image.height != s.mask.height || s.image.width != s.mask.width) {
      throw ShapeError("'" + path + "' and its mask differ in size");
    }
    for (float& v : s.mask.data) v = v >= 0.5f ? 1.0f : 0.0f;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw IoError("no blurred/ images in '" + dir + "'");
  return out;
}

std::vector<std::string> layer_dirs(int k) {
  if (k == 1) return {"layer_0"};
  if (k == 3) return {"layer_m1", "layer_0", "layer_p1"};
  throw UsageError("k must be 1 or 3, got " + std::to_string(k));
}

std::vector<std::string> mask_dirs(int k) {
  std::vector<std::string> out;
  for (const auto& l : layer_dirs(k)) out.push_back("mask_" + l.substr(6));
  return out;
}

void make_fusion_dataset(const std::string& src_dir, const DegradeConfig& cfg, int k,
                         const std::string& root, uint64_t seed, bool overwrite) {
  cfg.validate();
  const auto layers = layer_dirs(k);
  std::vector<std::string> paths;
  const std::vector<Image> sources = read_sources(src_dir, paths);
  const fs::path base(root);
  prepare_dir(base / "target");
  for (const auto& l : layers) prepare_dir(base / l);
  for (size_t i = 0; i < sources.size(); ++i) {
    const std::string name = numbered(static_cast<int>(i), 3);
    refuse_overwrite(base / "target" / name, overwrite);
    write_png((base / "target" / name).string(), sources[i]);
    for (size_t l = 0; l < layers.size(); ++l) {
      refuse_overwrite(base / layers[l] / name, overwrite);
      const uint64_t s = mix_seed(mix_seed(seed, i), l);
      write_png((base / layers[l] / name).string(), degrade(sources[i], cfg, s).image);
    }
  }
}

FusionDataset read_fusion_dataset(const std::string& root, int k) {
  const fs::path base(root);
  const auto layers = layer_dirs(k);
  std::vector<std::string> missing;
  for (const auto& l : layers) {
    if (!fs::is_directory(base / l)) missing.push_back(l);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw IoError("dataset '" + root + "' is missing layer directories for k=" +
                  std::to_string(k) + ": " + names);
  }
  const auto masks = mask_dirs(k);
  size_t present = 0;
  for (const auto& m : masks) present += fs::is_directory(base / m);
  if (present != 0 && present != masks.size()) {
    throw IoError("dataset '" + root + "' has only some of the mask directories");
  }

  FusionDataset out;
  out.has_masks = present == masks.size();
  for (const auto& target : list_pngs((base / "target").string())) {
    const std::string name = fs::path(target).filename().string();
    SamplePair s;
    s.target = read_png(target, 3);
    for (size_t l = 0; l < layers.size(); ++l) {
      const fs::path lp = base / layers[l] / name;
      if (!fs::exists(lp)) throw IoError("missing focus layer '" + lp.string() + "'");
      s.layers.push_back(read_png(lp.string(), 3));
      if (!s.layers.back().same_shape(s.target)) {
        throw ShapeError("'" + lp.string() + "' is not aligned with its target");
      }
      if (out.has_masks) {
        const fs::path mp = base / masks[l] / name;
        if (!fs::exists(mp)) throw IoError("missing mask '" + mp.string() + "'");
        Image m = read_png(mp.string(), 1);
        for (float& v : m.data) v = v >= 0.5f ? 1.0f : 0.0f;
        s.masks.push_back(std::move(m));
      }
    }
    out.names.push_back(name);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) throw IoError("no target images in '" + root + "/target'");
  return out;
}

}  // namespace focusfuse
