#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "degrade/degrade.hpp"
#include "train/trainer.hpp"

namespace focusfuse {

// PNG files directly inside `dir`, sorted by file name.
std::vector<std::string> list_pngs(const std::string& dir);

// Writes `count` synthetic sharp images as dir/NNNN.png.
std::vector<std::string> write_synth_images(const std::string& dir, int count, int height,
                                            int width, uint64_t seed, bool overwrite);

struct BmManifestEntry {
  std::string source;
  uint64_t seed = 0;
  std::string blurred_path;
  std::string mask_path;
  // The source had already been used by an earlier pair.
  bool reused = false;
};

// Degrades sources round-robin into out_dir/blurred/NNNN.png and
// out_dir/mask/NNNN.png ({0,255} gray) and writes out_dir/manifest.jsonl.
// Pair i uses seed mix_seed(seed, i).
std::vector<BmManifestEntry> make_bm_dataset(const std::string& src_dir, const DegradeConfig& cfg,
                                             int n, const std::string& out_dir, uint64_t seed,
                                             bool overwrite);

// Loads blurred/NNNN.png with the same-named mask/NNNN.png.
std::vector<BmSample> read_bm_dataset(const std::string& dir);

// Layer directory names for k focus layers, in input-channel order.
std::vector<std::string> layer_dirs(int k);
std::vector<std::string> mask_dirs(int k);

// Fusion training layout: root/target/NNN.png and one independently
// degraded copy per focus layer in root/<layer dir>/NNN.png.
void make_fusion_dataset(const std::string& src_dir, const DegradeConfig& cfg, int k,
                         const std::string& root, uint64_t seed, bool overwrite);

struct FusionDataset {
  std::vector<std::string> names;
  std::vector<SamplePair> samples;
  // True when root/mask_* directories supplied the masks.
  bool has_masks = false;
};

// Reads the fusion layout for k layers. Missing layer directories or files
// are reported by name.
FusionDataset read_fusion_dataset(const std::string& root, int k);

}  // namespace focusfuse
