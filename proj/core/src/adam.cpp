#include "fluxwarn/adam.hpp"

#include <cmath>

#include "fluxwarn/error.hpp"

namespace fluxwarn {

AdamState AdamState::zeros_like(const LstmParams& params) {
  AdamState s;
  s.first_moment = LstmParams::zeros(params.inputs(), params.hidden(), params.horizon());
  s.second_moment = s.first_moment;
  return s;
}

void adam_step(LstmParams& params, const LstmGradients& grads, AdamState& state, double lr,
               const AdamConfig& config) {
  auto p = params.blocks();
  const auto g = grads.blocks();
  auto m = state.first_moment.blocks();
  auto v = state.second_moment.blocks();
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (g[b].size() != p[b].size() || m[b].size() != p[b].size() ||
        v[b].size() != p[b].size()) {
      throw Error(ErrorKind::DimensionMismatch, "Adam operands differ in shape");
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (std::size_t k = 0; k < p[b].size(); ++k) {
      m[b][k] = config.beta1 * m[b][k] + (1.0 - config.beta1) * g[b][k];
      v[b][k] = config.beta2 * v[b][k] + (1.0 - config.beta2) * g[b][k] * g[b][k];
      const double m_hat = m[b][k] / correction1;
      const double v_hat = v[b][k] / correction2;
      p[b][k] -= lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
}

}  // namespace fluxwarn
