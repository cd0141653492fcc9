#include "train/adam.hpp"

#include <cmath>

#include "common/error.hpp"
#include "train/config.hpp"

namespace focusfuse {

void TrainConfig::validate() const {
  if (!(lr_g > 0 && lr_d > 0 && lr_bm > 0)) throw UsageError("learning rates must be positive");
  if (!(lr_decay > 0 && lr_decay <= 1)) throw UsageError("lr_decay must be in (0, 1]");
  if (!(lambda_adv >= 0)) throw UsageError("lambda_adv must be non-negative");
  if (batch_bm < 1 || batch_fusion < 1) throw UsageError("batch sizes must be >= 1");
  if (epochs < 0 || iterations_per_epoch < 0) throw UsageError("epoch counts must be >= 0");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0)) {
    throw UsageError("Adam betas must be in [0, 1) and eps positive");
  }
}

std::pair<double, double> decay_lr(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw UsageError("epoch must be >= 0");
  const double f = std::pow(cfg.lr_decay, epoch);
  return {cfg.lr_g * f, cfg.lr_d * f};
}

AdamState::AdamState(const NetworkParams& params, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& [name, t] : params) {
    m_.emplace_back(t.shape(), 0.0f);
    v_.emplace_back(t.shape(), 0.0f);
  }
}

void AdamState::step(NetworkParams& params, double lr) {
  if (params.size() != m_.size()) throw UsageError("Adam state does not match the network");
  for (const auto& [name, t] : params) {
    if (!t.has_grad()) throw UsageError("Adam step: parameter '" + name + "' has no gradient");
  }
  ++t_;
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  size_t k = 0;
  for (auto& [name, p] : params) {
    float* w = p.ptr();
    const auto g = p.grad();
    float* m = m_[k].ptr();
    float* v = v_[k].ptr();
    for (int64_t i = 0; i < p.numel(); ++i) {
      const double gi = g[static_cast<size_t>(i)];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + cfg_.eps);
      w[i] = static_cast<float>(static_cast<double>(w[i]) - update);
    }
    p.clear_grad();
    ++k;
  }
}

void AdamState::restore(int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw FormatError("Adam state has " + std::to_string(m.size()) + " moments, expected " +
                      std::to_string(m_.size()));
  }
  for (size_t i = 0; i < m.size(); ++i) {
    if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape()) {
      throw FormatError("Adam moment " + std::to_string(i) + " has the wrong shape");
    }
  }
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace focusfuse
