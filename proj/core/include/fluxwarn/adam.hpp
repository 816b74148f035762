#pragma once

#include <cstdint>

#include "fluxwarn/lstm.hpp"

namespace fluxwarn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates shaped like the parameters, plus the step count.
struct AdamState {
  LstmParams first_moment;
  LstmParams second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(const LstmParams& params);
};

/// One bias-corrected Adam update applied in place.
void adam_step(LstmParams& params, const LstmGradients& grads, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace fluxwarn
