#include <vector>

#include "common/error.hpp"
#include "nets/layers.hpp"
#include "nets/networks.hpp"
#include "tensor/ops.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {
namespace {

constexpr int kHeadKernel = 9;
constexpr int kHeadPadding = 4;

std::string stage_name(const char* side, int scale) {
  return std::string(side) + std::to_string(scale);
}

// Common conv, then `blocks` dense blocks, each closed by a 1x1 transition
// back to `width` channels.
void add_dense_stage(layers::ParamFactory& f, const GeneratorConfig& cfg, const std::string& name,
                     int in, int width) {
  f.conv_prelu(name + ".common", in, width, 3);
  for (int b = 0; b < cfg.blocks_per_stage; ++b) {
    const std::string block = name + ".db" + std::to_string(b);
    for (int l = 0; l < cfg.dense_layers_per_block; ++l) {
      f.conv_prelu(block + ".l" + std::to_string(l), width + l * cfg.growth_rate, cfg.growth_rate,
                   3);
    }
    f.conv_prelu(block + ".trans", width + cfg.dense_layers_per_block * cfg.growth_rate, width, 1);
  }
}

Tensor dense_stage(const NetworkParams& p, const GeneratorConfig& cfg, const std::string& name,
                   const Tensor& x) {
  Tensor cur = layers::conv_prelu(p, name + ".common", x, 1, 1);
  for (int b = 0; b < cfg.blocks_per_stage; ++b) {
    const std::string block = name + ".db" + std::to_string(b);
    std::vector<Tensor> features{cur};
    for (int l = 0; l < cfg.dense_layers_per_block; ++l) {
      const Tensor in = features.size() == 1 ? features.front() : ops::concat_channels(features);
      features.push_back(layers::conv_prelu(p, block + ".l" + std::to_string(l), in, 1, 1));
    }
    cur = layers::conv_prelu(p, block + ".trans", ops::concat_channels(features), 1, 0);
  }
  return cur;
}

int64_t dense_stage_params(const GeneratorConfig& cfg, int64_t in, int64_t width) {
  const int64_t g = cfg.growth_rate;
  int64_t total = layers::conv_params(in, width, 3) + width;
  for (int b = 0; b < cfg.blocks_per_stage; ++b) {
    for (int l = 0; l < cfg.dense_layers_per_block; ++l) {
      total += layers::conv_params(width + l * g, g, 3) + g;
    }
    total += layers::conv_params(width + cfg.dense_layers_per_block * g, width, 1) + width;
  }
  return total;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (k_layers < 1) throw UsageError("generator: k_layers must be >= 1");
  if (base_width < 1 || growth_rate < 1) throw UsageError("generator: widths must be >= 1");
  if (n_scales < 1 || n_scales > 6) throw UsageError("generator: n_scales must be in [1, 6]");
  if (dense_layers_per_block < 1 || blocks_per_stage < 1) {
    throw UsageError("generator: dense block sizes must be >= 1");
  }
}

int64_t generator_param_count(const GeneratorConfig& cfg) {
  const int64_t base = cfg.base_width;
  int64_t total = layers::conv_params(cfg.in_channels(), base, kHeadKernel) + base;
  for (int s = 0; s < cfg.n_scales; ++s) {
    const int64_t in = s == 0 ? base : cfg.stage_width(s - 1);
    total += dense_stage_params(cfg, in, cfg.stage_width(s));
  }
  const int64_t bottom = cfg.bottom_width();
  total += layers::conv_params(cfg.stage_width(cfg.n_scales - 1), bottom, 3) + bottom;
  total += 2 * (layers::conv_params(bottom, bottom, 3) + bottom);
  for (int s = cfg.n_scales - 1; s >= 0; --s) {
    const int64_t below = s == cfg.n_scales - 1 ? bottom : cfg.stage_width(s + 1);
    total += dense_stage_params(cfg, cfg.stage_width(s) + below, cfg.stage_width(s));
  }
  total += layers::conv_params(base, 3, kHeadKernel);
  return total;
}

std::string generator_fingerprint(const GeneratorConfig& cfg) {
  return "generator;k=" + std::to_string(cfg.k_layers) + ";base=" + std::to_string(cfg.base_width) +
         ";growth=" + std::to_string(cfg.growth_rate) + ";scales=" + std::to_string(cfg.n_scales) +
         ";dense_layers=" + std::to_string(cfg.dense_layers_per_block) +
         ";blocks=" + std::to_string(cfg.blocks_per_stage) +
         ";params=" + std::to_string(generator_param_count(cfg));
}

GeneratorConfig generator_config_from_fingerprint(const std::string& fingerprint) {
  const auto fields = parse_fingerprint(fingerprint);
  if (fields.at("kind") != "generator") {
    throw FormatError("fingerprint is not a generator: " + fingerprint);
  }
  GeneratorConfig cfg;
  try {
    cfg.k_layers = std::stoi(fields.at("k"));
    cfg.base_width = std::stoi(fields.at("base"));
    cfg.growth_rate = std::stoi(fields.at("growth"));
    cfg.n_scales = std::stoi(fields.at("scales"));
    cfg.dense_layers_per_block = std::stoi(fields.at("dense_layers"));
    cfg.blocks_per_stage = std::stoi(fields.at("blocks"));
  } catch (const std::exception&) {
    throw FormatError("malformed generator fingerprint: " + fingerprint);
  }
  cfg.validate();
  if (generator_fingerprint(cfg) != fingerprint) {
    throw FormatError("generator fingerprint does not round-trip: " + fingerprint);
  }
  return cfg;
}

NetworkParams build_generator(const GeneratorConfig& cfg, uint64_t seed) {
  cfg.validate();
  NetworkParams params(generator_fingerprint(cfg));
  layers::ParamFactory f(params, seed);
  f.conv_prelu("head", cfg.in_channels(), cfg.base_width, kHeadKernel);
  for (int s = 0; s < cfg.n_scales; ++s) {
    const int in = s == 0 ? cfg.base_width : cfg.stage_width(s - 1);
    add_dense_stage(f, cfg, stage_name("enc", s), in, cfg.stage_width(s));
  }
  const int bottom = cfg.bottom_width();
  f.conv_prelu("bottom.l0", cfg.stage_width(cfg.n_scales - 1), bottom, 3);
  f.conv_prelu("bottom.l1", bottom, bottom, 3);
  f.conv_prelu("bottom.l2", bottom, bottom, 3);
  for (int s = cfg.n_scales - 1; s >= 0; --s) {
    const int below = s == cfg.n_scales - 1 ? bottom : cfg.stage_width(s + 1);
    add_dense_stage(f, cfg, stage_name("dec", s), cfg.stage_width(s) + below, cfg.stage_width(s));
  }
  f.conv("top", cfg.base_width, 3, kHeadKernel);
  return params;
}

Tensor generator_forward(const NetworkParams& params, const GeneratorConfig& cfg, const Tensor& x) {
  const Shape s = x.shape();
  const int64_t multiple = int64_t{1} << cfg.n_scales;
  if (s.c != cfg.in_channels()) {
    throw ShapeError("generator expects " + std::to_string(cfg.in_channels()) +
                     " input channels (RGB + mask per focus layer), got " + s.str());
  }
  if (s.h % multiple != 0 || s.w % multiple != 0 || s.h < 64 || s.w < 64) {
    throw ShapeError("generator input " + s.str() + " must be at least 64x64 with height and width"
                     " divisible by " + std::to_string(multiple) + "; pad or crop the image");
  }

  Tensor cur = layers::conv_prelu(params, "head", x, 1, kHeadPadding);
  std::vector<Tensor> skips;
  for (int sc = 0; sc < cfg.n_scales; ++sc) {
    cur = dense_stage(params, cfg, stage_name("enc", sc), cur);
    skips.push_back(cur);
    cur = ops::avg_pool2d(cur, 2, 2);
  }
  cur = layers::conv_prelu(params, "bottom.l0", cur, 1, 1);
  cur = layers::conv_prelu(params, "bottom.l1", cur, 1, 1);
  cur = layers::conv_prelu(params, "bottom.l2", cur, 1, 1);
  for (int sc = cfg.n_scales - 1; sc >= 0; --sc) {
    const Tensor up = ops::upsample_bilinear_x2(cur);
    cur = dense_stage(params, cfg, stage_name("dec", sc),
                      ops::concat_channels({skips[static_cast<size_t>(sc)], up}));
    skips[static_cast<size_t>(sc)] = Tensor();
  }
  return ops::tanh_unit(layers::conv(params, "top", cur, 1, kHeadPadding));
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
