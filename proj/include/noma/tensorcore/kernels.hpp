#pragma once

#include <span>
#include <vector>

namespace noma::tensor {

// Value-level numeric kernels. The tape records the same kernels so forward
// values match these bit for bit.

// y = W x (+ b). W is rows x x.size(), row-major.
std::vector<double> linear(std::span<const double> weights, std::span<const double> x,
                           std::span<const double> bias = {});

std::vector<double> tanh(std::span<const double> x);

double sigmoid(double x);

// Probabilities over the entries with mask != 0; masked entries are exactly 0.
// Max-subtracted. Throws UsageError when nothing is unmasked.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const unsigned char> mask);

struct LstmState {
  std::vector<double> hidden;
  std::vector<double> cell;
};

// One LSTM cell step. Pre-activations z = W [x; h] + b with W of shape
// 4H x (X + H) and gate blocks ordered input, forget, candidate, output:
//   c' = f * c + i * g,  h' = o * tanh(c').
// Throws UsageError on inconsistent dimensions.
LstmState lstm_step(std::span<const double> x, const LstmState& state, std::span<const double> weights,
                    std::span<const double> bias);

namespace detail {
// Writes activated gates (i, f, g, o; 4H), tanh(c') (H), h' and c' (H each).
void lstm_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                  std::span<const double> weights, std::span<const double> bias, double* gates,
                  double* tanh_cell, double* h_out, double* c_out);
}  // namespace detail

}  // namespace noma::tensor
