#pragma once

#include <cstdint>
#include <utility>

namespace focusfuse {

struct TrainConfig {
  double lambda_adv = 0.001;
  double lr_g = 0.5e-4;
  double lr_d = 0.25e-4;
  double lr_bm = 1e-3;
  double lr_decay = 0.8;
  int batch_bm = 4;
  int batch_fusion = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 1;
  // 0: one pass over the dataset per epoch.
  int iterations_per_epoch = 0;
  uint64_t seed = 0;
  // Ablation switches: freeze D entirely, or feed all-zero masks to G.
  bool update_discriminator = true;
  bool use_masks = true;

  void validate() const;
};

// (lr_g, lr_d) after `epoch` decays.
std::pair<double, double> decay_lr(const TrainConfig& cfg, int epoch);

}  // namespace focusfuse
