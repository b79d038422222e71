#pragma once

#include <span>
#include <vector>

namespace sinn {

/// Bias-corrected Adam. Moment buffers are sized (zero-filled) on first use.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace sinn
