#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nets/params.hpp"
#include "tensor/tensor.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {

// U-Net generator whose convolution stages are DenseBlocks.
//
// Input is the channel stack of k focus layers, each contributing 3 RGB
// channels followed by its 1-channel binary blur mask.
struct GeneratorConfig {
  int k_layers = 1;
  int base_width = 64;
  int growth_rate = 32;
  int n_scales = 3;
  int dense_layers_per_block = 3;
  int blocks_per_stage = 2;

  int in_channels() const { return 4 * k_layers; }
  int stage_width(int scale) const { return base_width << scale; }
  int bottom_width() const { return base_width << n_scales; }
  void validate() const;
};

// Eight 3x3 convolutions with LeakyReLU, a 4x4/4 max-pool, a 1x1 projection
// to one channel and a sigmoid: each output cell judges a 64x64 patch.
struct DiscriminatorConfig {
  int in_channels = 3;
  std::vector<int> widths{64, 64, 128, 128, 256, 256, 512, 512};
  std::vector<int> strides{1, 2, 1, 2, 1, 2, 1, 2};
  real leaky_slope = real(0.2);
  int pool = 4;

  // Total spatial reduction (product of strides times the pool size).
  int reduction() const;
  void validate() const;
};

// Compact encoder (conv + PReLU + 2x2 max-pool per stage) followed by an
// atrous spatial pyramid pooling head and bilinear upsampling back to the
// input size. Emits 2-channel logits; channel 1 means "blurred".
struct BlurModelConfig {
  int in_channels = 3;
  std::vector<int> encoder_widths{32, 64, 128};
  std::vector<int> aspp_rates{1, 6, 12, 18};
  int aspp_width = 64;
  int out_channels = 2;

  int reduction() const { return 1 << encoder_widths.size(); }
  void validate() const;
};

// Architecture fingerprints. The trailing `params=` field is the parameter
// count computed in closed form from the configuration.
std::string generator_fingerprint(const GeneratorConfig& cfg);
std::string discriminator_fingerprint(const DiscriminatorConfig& cfg);
std::string blur_model_fingerprint(const BlurModelConfig& cfg);

int64_t generator_param_count(const GeneratorConfig& cfg);
int64_t discriminator_param_count(const DiscriminatorConfig& cfg);
int64_t blur_model_param_count(const BlurModelConfig& cfg);

GeneratorConfig generator_config_from_fingerprint(const std::string& fingerprint);
DiscriminatorConfig discriminator_config_from_fingerprint(const std::string& fingerprint);
BlurModelConfig blur_model_config_from_fingerprint(const std::string& fingerprint);

// He-uniform convolution weights, zero biases, 0.25 PReLU slopes.
NetworkParams build_generator(const GeneratorConfig& cfg, uint64_t seed);
NetworkParams build_discriminator(const DiscriminatorConfig& cfg, uint64_t seed);
NetworkParams build_blur_model(const BlurModelConfig& cfg, uint64_t seed);

// x: [N, 4k, H, W] with H, W divisible by 8 and >= 64. Output [N, 3, H, W]
// strictly inside (0, 1).
Tensor generator_forward(const NetworkParams& params, const GeneratorConfig& cfg, const Tensor& x);

// x: [N, 3, H, W] with H, W divisible by 64. Output [N, 1, H/64, W/64].
Tensor discriminator_forward(const NetworkParams& params, const DiscriminatorConfig& cfg,
                             const Tensor& x);

// x: [N, 3, H, W] with H, W divisible by 8. Output logits [N, 2, H, W].
Tensor blur_model_forward(const NetworkParams& params, const BlurModelConfig& cfg, const Tensor& x);

// Per-pixel argmax of [N, 2, H, W] logits: 1.0 where channel 1 is strictly
// larger (blurred), else 0.0. Output [N, 1, H, W].
Tensor binarize_mask(const Tensor& logits);

}  // namespace focusfuse::FOCUSFUSE_PRECISION
