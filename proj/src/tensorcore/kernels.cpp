#include "noma/tensorcore/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noma/error.hpp"

namespace noma::tensor {

std::vector<double> linear(std::span<const double> weights, std::span<const double> x,
                           std::span<const double> bias) {
  if (x.empty() || weights.size() % x.size() != 0)
    throw UsageError("linear: weight size " + std::to_string(weights.size()) +
                     " is not a multiple of input size " + std::to_string(x.size()));
  const std::size_t rows = weights.size() / x.size();
  if (!bias.empty() && bias.size() != rows) throw UsageError("linear: bias size mismatch");
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* w = weights.data() + r * x.size();
    double acc = bias.empty() ? 0.0 : bias[r];
    for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> tanh(std::span<const double> x) {
  std::vector<double> y(x.size());
  std::transform(x.begin(), x.end(), y.begin(), [](double v) { return std::tanh(v); });
  return y;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> masked_softmax(std::span<const double> logits, std::span<const unsigned char> mask) {
  if (mask.size() != logits.size()) throw UsageError("masked_softmax: mask size mismatch");
  double top = -INFINITY;
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (mask[j]) top = std::max(top, logits[j]);
  if (top == -INFINITY) throw UsageError("masked_softmax: every entry is masked");
  std::vector<double> p(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j)
    if (mask[j]) total += (p[j] = std::exp(logits[j] - top));
  for (double& v : p) v /= total;
  return p;
}

namespace detail {

void lstm_forward(std::span<const double> x, std::span<const double> h, std::span<const double> c,
                  std::span<const double> weights, std::span<const double> bias, double* gates,
                  double* tanh_cell, double* h_out, double* c_out) {
  const std::size_t hd = h.size();
  const std::size_t xd = x.size();
  const std::size_t cols = xd + hd;
  for (std::size_t r = 0; r < 4 * hd; ++r) {
    const double* w = weights.data() + r * cols;
    double acc = bias[r];
    for (std::size_t j = 0; j < xd; ++j) acc += w[j] * x[j];
    for (std::size_t j = 0; j < hd; ++j) acc += w[xd + j] * h[j];
    gates[r] = acc;
  }
  for (std::size_t j = 0; j < hd; ++j) {
    const double i = sigmoid(gates[j]);
    const double f = sigmoid(gates[hd + j]);
    const double g = std::tanh(gates[2 * hd + j]);
    const double o = sigmoid(gates[3 * hd + j]);
    gates[j] = i;
    gates[hd + j] = f;
    gates[2 * hd + j] = g;
    gates[3 * hd + j] = o;
    const double cell = f * c[j] + i * g;
    c_out[j] = cell;
    tanh_cell[j] = std::tanh(cell);
    h_out[j] = o * tanh_cell[j];
  }
}

}  // namespace detail

LstmState lstm_step(std::span<const double> x, const LstmState& state, std::span<const double> weights,
                    std::span<const double> bias) {
  const std::size_t hd = state.hidden.size();
  if (state.cell.size() != hd) throw UsageError("lstm_step: hidden/cell size mismatch");
  if (bias.size() != 4 * hd) throw UsageError("lstm_step: bias must have 4H entries");
  if (weights.size() != 4 * hd * (x.size() + hd))
    throw UsageError("lstm_step: weights must be 4H x (X + H)");
  std::vector<double> gates(4 * hd), tanh_cell(hd);
  LstmState out{std::vector<double>(hd), std::vector<double>(hd)};
  detail::lstm_forward(x, state.hidden, state.cell, weights, bias, gates.data(), tanh_cell.data(),
                       out.hidden.data(), out.cell.data());
  return out;
}

}  // namespace noma::tensor
