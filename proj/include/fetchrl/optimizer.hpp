#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fetchrl {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected adaptive-moment update, in place. The whole step is
/// refused (NumericalError, nothing modified) if the gradient is not finite.
void optimizer_step(std::span<double> params, std::span<const double> gradient,
                    AdamState& state, double learning_rate,
                    const AdamConfig& config = {});

double l2_norm(std::span<const double> v);

}  // namespace fetchrl
