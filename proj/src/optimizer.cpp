#include "fetchrl/optimizer.hpp"

#include <cmath>
#include <string>

#include "fetchrl/common.hpp"

namespace fetchrl {

void optimizer_step(std::span<double> params, std::span<const double> gradient,
                    AdamState& state, double learning_rate, const AdamConfig& config) {
  const std::size_t n = params.size();
  if (gradient.size() != n || state.m.size() != n || state.v.size() != n) {
    throw ShapeMismatch("optimizer_step: " + std::to_string(n) + " params, " +
                        std::to_string(gradient.size()) + " gradient entries, " +
                        std::to_string(state.m.size()) + " moment entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(gradient[i])) {
      throw NumericalError("optimizer_step: non-finite gradient at index " +
                           std::to_string(i) + "; step refused");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = gradient[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace fetchrl
