#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "image/image.hpp"
#include "nets/networks.hpp"
#include "train/adam.hpp"
#include "train/config.hpp"

namespace focusfuse {

// One fusion training example: k focus layers, their blur masks and the
// all-in-focus target. Layers and target are 3-channel, masks 1-channel.
struct SamplePair {
  std::vector<Image> layers;
  std::vector<Image> masks;
  Image target;
};

struct BmSample {
  Image image;
  Image mask;
};

struct HistoryRow {
  int64_t iteration = 0;
  int epoch = 0;
  double l_content = 0.0;
  double l_adv = 0.0;
  double l_d = 0.0;
  double lr_g = 0.0;
  double lr_d = 0.0;
};

struct BmHistoryRow {
  int64_t iteration = 0;
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double lr = 0.0;
};

extern const char* const kHistoryHeader;
std::string history_csv(const std::vector<HistoryRow>& rows);
std::string bm_history_csv(const std::vector<BmHistoryRow>& rows);

// Stacks per-sample [layer RGB, mask] groups into [N, 4k, H, W]. With
// use_masks false the mask channels are zero.
Tensor fusion_input(const std::vector<const SamplePair*>& batch, bool use_masks);
Tensor stack_images(const std::vector<const Image*>& images);
Image tensor_to_image(const Tensor& t, int64_t n);

// Fills every sample's masks from the frozen blur model (no gradients, no
// parameter changes).
void compute_masks(const NetworkParams& bm, const BlurModelConfig& cfg,
                   std::vector<SamplePair>& samples);
Image predict_mask(const NetworkParams& bm, const BlurModelConfig& cfg, const Image& image);

// Key=value form of a TrainConfig (for manifests and checkpoint metadata).
std::map<std::string, std::string> train_config_to_kv(const TrainConfig& cfg);
TrainConfig train_config_from_kv(const std::map<std::string, std::string>& kv);

// Per-epoch sample order, derived from (seed, epoch) alone so a resumed run
// sees the same batches as an uninterrupted one.
std::vector<size_t> epoch_order(uint64_t seed, int epoch, size_t n);

class BmTrainer {
 public:
  BmTrainer(std::vector<BmSample> data, BlurModelConfig model, TrainConfig cfg);

  int64_t iterations_per_epoch() const;
  int64_t total_iterations() const { return iterations_per_epoch() * cfg_.epochs; }
  int64_t iteration() const { return iteration_; }

  BmHistoryRow step();
  void run(int64_t iterations);

  // Accuracy of binarized predictions over the whole training set.
  double training_accuracy() const;

  const NetworkParams& params() const { return params_; }
  const BlurModelConfig& model_config() const { return model_; }
  const std::vector<BmHistoryRow>& history() const { return history_; }

  void save(const std::string& path) const;
  // Restores parameters, optimizer state, config and iteration.
  static BmTrainer resume(const std::string& path, std::vector<BmSample> data);

 private:
  std::vector<BmSample> data_;
  BlurModelConfig model_;
  TrainConfig cfg_;
  NetworkParams params_;
  AdamState adam_;
  int64_t iteration_ = 0;
  std::vector<BmHistoryRow> history_;
};

class FusionTrainer {
 public:
  FusionTrainer(std::vector<SamplePair> data, GeneratorConfig gen, DiscriminatorConfig disc,
                TrainConfig cfg);

  int64_t iterations_per_epoch() const;
  int64_t total_iterations() const { return iterations_per_epoch() * cfg_.epochs; }
  int64_t iteration() const { return iteration_; }

  // One G step (D frozen) followed by one D step (G frozen) on a fresh
  // fake from the updated G.
  HistoryRow step();
  void run(int64_t iterations);

  const NetworkParams& generator() const { return gen_; }
  const NetworkParams& discriminator() const { return disc_; }
  const GeneratorConfig& generator_config() const { return gen_cfg_; }
  const DiscriminatorConfig& discriminator_config() const { return disc_cfg_; }
  const TrainConfig& config() const { return cfg_; }
  const std::vector<HistoryRow>& history() const { return history_; }

  // Mean content loss of the current generator over the whole dataset.
  double dataset_content_loss() const;

  void save(const std::string& path) const;
  static FusionTrainer resume(const std::string& path, std::vector<SamplePair> data);

 private:
  std::vector<const SamplePair*> batch_at(int64_t iteration) const;

  std::vector<SamplePair> data_;
  GeneratorConfig gen_cfg_;
  DiscriminatorConfig disc_cfg_;
  TrainConfig cfg_;
  NetworkParams gen_;
  NetworkParams disc_;
  AdamState adam_g_;
  AdamState adam_d_;
  int64_t iteration_ = 0;
  std::vector<HistoryRow> history_;
};

// Plain MAE regression of the generator with the fusion trainer's batching,
// initialization and learning-rate schedule; the reference for the lambda=0
// ablation.
struct MaeRun {
  NetworkParams generator;
  std::vector<HistoryRow> history;
};
MaeRun train_mae_reference(const std::vector<SamplePair>& data, const GeneratorConfig& gen,
                           const TrainConfig& cfg, int64_t iterations);

// Generator/blur-model loading for inference from trainer checkpoints.
struct LoadedGenerator {
  GeneratorConfig config;
  NetworkParams params;
  // Whether the generator was trained on blur masks or on zero channels.
  bool use_masks = true;
};
LoadedGenerator load_generator(const std::string& path);

struct LoadedBlurModel {
  BlurModelConfig config;
  NetworkParams params;
};
LoadedBlurModel load_blur_model(const std::string& path);

// Runs the generator on one sample (masks must be filled unless use_masks is
// false). Output is a 3-channel image in (0,1).
Image fuse_sample(const NetworkParams& gen, const GeneratorConfig& cfg, const SamplePair& sample,
                  bool use_masks = true);

}  // namespace focusfuse
