#include "noma/tensorcore/adam.hpp"

#include <cmath>

#include "noma/error.hpp"

namespace noma::tensor {

void adam_update(ParameterStore& params, std::span<const double> grad, AdamState& state) {
  const std::size_t n = params.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n)
    throw UsageError("adam_update: parameter, gradient and moment sizes differ");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(grad[i]))
      throw NumericalError("non-finite gradient for parameter " + params.describe_index(i));

  const AdamConfig& c = state.config;
  ++state.t;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  auto theta = params.flat();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grad[i];
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    theta[i] += c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace noma::tensor
