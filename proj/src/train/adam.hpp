#pragma once

#include <cstdint>
#include <vector>

#include "nets/params.hpp"

namespace focusfuse {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moments are stored per parameter in the
// parameter order of the network the state was created for.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const NetworkParams& params, AdamConfig cfg);

  // Applies one update from the accumulated gradients, then releases them.
  // Throws UsageError if any parameter has no gradient.
  void step(NetworkParams& params, double lr);

  int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

  // Restores a saved state; moment shapes must match.
  void restore(int64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace focusfuse
