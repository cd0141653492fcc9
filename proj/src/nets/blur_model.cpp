#include <sstream>

#include "common/error.hpp"
#include "nets/layers.hpp"
#include "nets/networks.hpp"
#include "tensor/ops.hpp"

namespace focusfuse::FOCUSFUSE_PRECISION {
namespace {

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::vector<int> split_ints(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

std::string enc_name(size_t i) { return "enc" + std::to_string(i); }
std::string branch_name(size_t i) { return "aspp.rate" + std::to_string(i); }

}  // namespace

void BlurModelConfig::validate() const {
  if (in_channels < 1 || out_channels < 1 || aspp_width < 1) {
    throw UsageError("blur model: channel counts must be >= 1");
  }
  if (encoder_widths.empty() || encoder_widths.size() > 6) {
    throw UsageError("blur model: 1 to 6 encoder stages required");
  }
  for (int w : encoder_widths) {
    if (w < 1) throw UsageError("blur model: encoder widths must be >= 1");
  }
  for (int r : aspp_rates) {
    if (r < 1) throw UsageError("blur model: ASPP rates must be >= 1");
  }
}

int64_t blur_model_param_count(const BlurModelConfig& cfg) {
  int64_t total = 0;
  int64_t in = cfg.in_channels;
  for (int w : cfg.encoder_widths) {
    total += layers::conv_params(in, w, 3) + w;
    in = w;
  }
  const int64_t a = cfg.aspp_width;
  const int64_t branches = 1 + static_cast<int64_t>(cfg.aspp_rates.size());
  total += layers::conv_params(in, a, 1) + a;
  total += static_cast<int64_t>(cfg.aspp_rates.size()) * (layers::conv_params(in, a, 3) + a);
  total += layers::conv_params(branches * a, a, 1) + a;
  total += layers::conv_params(a, cfg.out_channels, 1);
  return total;
}

std::string blur_model_fingerprint(const BlurModelConfig& cfg) {
  return "blur_model;in=" + std::to_string(cfg.in_channels) +
         ";encoder=" + join(cfg.encoder_widths) + ";rates=" + join(cfg.aspp_rates) +
         ";aspp=" + std::to_string(cfg.aspp_width) + ";out=" + std::to_string(cfg.out_channels) +
         ";params=" + std::to_string(blur_model_param_count(cfg));
}

BlurModelConfig blur_model_config_from_fingerprint(const std::string& fingerprint) {
  const auto fields = parse_fingerprint(fingerprint);
  if (fields.at("kind") != "blur_model") {
    throw FormatError("fingerprint is not a blur model: " + fingerprint);
  }
  BlurModelConfig cfg;
  try {
    cfg.in_channels = std::stoi(fields.at("in"));
    cfg.encoder_widths = split_ints(fields.at("encoder"));
    cfg.aspp_rates = split_ints(fields.at("rates"));
    cfg.aspp_width = std::stoi(fields.at("aspp"));
    cfg.out_channels = std::stoi(fields.at("out"));
  } catch (const std::exception&) {
    throw FormatError("malformed blur model fingerprint: " + fingerprint);
  }
  cfg.validate();
  if (blur_model_fingerprint(cfg) != fingerprint) {
    throw FormatError("blur model fingerprint does not round-trip: " + fingerprint);
  }
  return cfg;
}

NetworkParams build_blur_model(const BlurModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  NetworkParams params(blur_model_fingerprint(cfg));
  layers::ParamFactory f(params, seed);
  int in = cfg.in_channels;
  for (size_t i = 0; i < cfg.encoder_widths.size(); ++i) {
    f.conv_prelu(enc_name(i), in, cfg.encoder_widths[i], 3);
    in = cfg.encoder_widths[i];
  }
  f.conv_prelu("aspp.point", in, cfg.aspp_width, 1);
  for (size_t i = 0; i < cfg.aspp_rates.size(); ++i) {
    f.conv_prelu(branch_name(i), in, cfg.aspp_width, 3);
  }
  const int branches = 1 + static_cast<int>(cfg.aspp_rates.size());
  f.conv_prelu("aspp.fuse", branches * cfg.aspp_width, cfg.aspp_width, 1);
  f.conv("classifier", cfg.aspp_width, cfg.out_channels, 1);
  return params;
}

Tensor blur_model_forward(const NetworkParams& params, const BlurModelConfig& cfg, const Tensor& x) {
  const Shape s = x.shape();
  const int r = cfg.reduction();
  if (s.c != cfg.in_channels) {
    throw ShapeError("blur model expects " + std::to_string(cfg.in_channels) + " channels, got " +
                     s.str());
  }
  if (s.h < r || s.w < r || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("blur model input " + s.str() + " must have height and width divisible by " +
                     std::to_string(r));
  }
  Tensor cur = x;
  for (size_t i = 0; i < cfg.encoder_widths.size(); ++i) {
    cur = ops::max_pool2d(layers::conv_prelu(params, enc_name(i), cur, 1, 1), 2, 2);
  }
  std::vector<Tensor> branches{layers::conv_prelu(params, "aspp.point", cur, 1, 0)};
  for (size_t i = 0; i < cfg.aspp_rates.size(); ++i) {
    const int rate = cfg.aspp_rates[i];
    branches.push_back(layers::conv_prelu(params, branch_name(i), cur, 1, rate, rate));
  }
  cur = layers::conv_prelu(params, "aspp.fuse", ops::concat_channels(branches), 1, 0);
  cur = layers::conv(params, "classifier", cur, 1, 0);
  for (size_t i = 0; i < cfg.encoder_widths.size(); ++i) cur = ops::upsample_bilinear_x2(cur);
  return cur;
}

Tensor binarize_mask(const Tensor& logits) {
  const Shape s = logits.shape();
  if (s.c != 2) throw ShapeError("binarize_mask expects 2-channel logits, got " + s.str());
  Tensor out(Shape{s.n, 1, s.h, s.w});
  const int64_t plane = s.plane();
  const real* src = logits.ptr();
  real* dst = out.ptr();
  for (int64_t n = 0; n < s.n; ++n) {
    const real* c0 = src + n * 2 * plane;
    const real* c1 = c0 + plane;
    for (int64_t i = 0; i < plane; ++i) dst[n * plane + i] = c1[i] > c0[i] ? 1.0f : 0.0f;
  }
  return out;
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
