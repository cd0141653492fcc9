#include <charconv>
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

std::string shortest(real v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string layer_name(size_t i) { return "conv" + std::to_string(i); }

}  // namespace

int DiscriminatorConfig::reduction() const {
  int r = pool;
  for (int s : strides) r *= s;
  return r;
}

void DiscriminatorConfig::validate() const {
  if (in_channels < 1) throw UsageError("discriminator: in_channels must be >= 1");
  if (widths.empty() || widths.size() != strides.size()) {
    throw UsageError("discriminator: widths and strides must be non-empty and of equal length");
  }
  for (size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] < 1 || strides[i] < 1) {
      throw UsageError("discriminator: widths and strides must be >= 1");
    }
  }
  if (pool < 1) throw UsageError("discriminator: pool must be >= 1");
  if (!(leaky_slope >= 0.0f && leaky_slope < 1.0f)) {
    throw UsageError("discriminator: leaky_slope must be in [0, 1)");
  }
}

int64_t discriminator_param_count(const DiscriminatorConfig& cfg) {
  int64_t total = 0;
  int64_t in = cfg.in_channels;
  for (int w : cfg.widths) {
    total += layers::conv_params(in, w, 3);
    in = w;
  }
  return total + layers::conv_params(in, 1, 1);
}

std::string discriminator_fingerprint(const DiscriminatorConfig& cfg) {
  return "discriminator;in=" + std::to_string(cfg.in_channels) + ";widths=" + join(cfg.widths) +
         ";strides=" + join(cfg.strides) + ";slope=" + shortest(cfg.leaky_slope) +
         ";pool=" + std::to_string(cfg.pool) +
         ";params=" + std::to_string(discriminator_param_count(cfg));
}

DiscriminatorConfig discriminator_config_from_fingerprint(const std::string& fingerprint) {
  const auto fields = parse_fingerprint(fingerprint);
  if (fields.at("kind") != "discriminator") {
    throw FormatError("fingerprint is not a discriminator: " + fingerprint);
  }
  DiscriminatorConfig cfg;
  try {
    cfg.in_channels = std::stoi(fields.at("in"));
    cfg.widths = split_ints(fields.at("widths"));
    cfg.strides = split_ints(fields.at("strides"));
    cfg.leaky_slope = std::stof(fields.at("slope"));
    cfg.pool = std::stoi(fields.at("pool"));
  } catch (const std::exception&) {
    throw FormatError("malformed discriminator fingerprint: " + fingerprint);
  }
  cfg.validate();
  if (discriminator_fingerprint(cfg) != fingerprint) {
    throw FormatError("discriminator fingerprint does not round-trip: " + fingerprint);
  }
  return cfg;
}

NetworkParams build_discriminator(const DiscriminatorConfig& cfg, uint64_t seed) {
  cfg.validate();
  NetworkParams params(discriminator_fingerprint(cfg));
  layers::ParamFactory f(params, seed);
  int in = cfg.in_channels;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    f.conv(layer_name(i), in, cfg.widths[i], 3);
    in = cfg.widths[i];
  }
  f.conv("out", in, 1, 1);
  return params;
}

Tensor discriminator_forward(const NetworkParams& params, const DiscriminatorConfig& cfg,
                             const Tensor& x) {
  const Shape s = x.shape();
  const int r = cfg.reduction();
  if (s.c != cfg.in_channels) {
    throw ShapeError("discriminator expects " + std::to_string(cfg.in_channels) +
                     " channels, got " + s.str());
  }
  if (s.h < r || s.w < r || s.h % r != 0 || s.w % r != 0) {
    throw ShapeError("discriminator input " + s.str() + " must have height and width divisible by " +
                     std::to_string(r));
  }
  Tensor cur = x;
  for (size_t i = 0; i < cfg.widths.size(); ++i) {
    cur = ops::leaky_relu(layers::conv(params, layer_name(i), cur, cfg.strides[i], 1),
                          cfg.leaky_slope);
  }
  cur = ops::max_pool2d(cur, cfg.pool, cfg.pool);
  return ops::sigmoid(layers::conv(params, "out", cur, 1, 0));
}

}  // namespace focusfuse::FOCUSFUSE_PRECISION
