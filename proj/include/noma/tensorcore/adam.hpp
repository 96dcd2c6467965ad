#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "noma/tensorcore/parameter_store.hpp"

namespace noma::tensor {

// Defaults beyond the learning rate follow the original Adam recommendation.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::uint64_t t = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t size) : config(cfg), m(size, 0.0), v(size, 0.0) {}

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

// One bias-corrected Adam step that moves the parameters *along* `grad`
// (gradient ascent). Throws NumericalError naming the parameter when a
// gradient entry is not finite; nothing is modified in that case.
void adam_update(ParameterStore& params, std::span<const double> grad, AdamState& state);

}  // namespace noma::tensor
