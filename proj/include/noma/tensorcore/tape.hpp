#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "noma/tensorcore/parameter_store.hpp"

namespace noma::tensor {

// Handle to a vector value recorded on a Tape.
struct Var {
  std::uint32_t id = UINT32_MAX;
};

// Records one forward evaluation as a list of vector-valued primitives and
// replays it in reverse to get exact gradients with respect to the parameter
// store. Parameters are read from the store at record time; gradients are
// accumulated into a caller-owned flat array indexed like the store.
//
// A tape is reusable: clear() drops the records but keeps the buffers.
class Tape {
public:
  explicit Tape(const ParameterStore& params) : params_(&params) {}

  void clear();
  bool empty() const { return nodes_.empty(); }

  // Constant input; receives no gradient.
  Var input(std::span<const double> values);
  // A parameter array used directly as a value (bias, attention vector, ...).
  Var param(ParamRef p);

  // W x (+ b) with W and b taken from the store.
  Var affine(ParamRef weights, Var x);
  Var affine(ParamRef weights, Var x, ParamRef bias);

  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var sum(Var a);
  Var slice(Var a, std::size_t offset, std::size_t length);
  // Concatenation of equally sized vectors.
  Var stack(std::span<const Var> parts);
  // Sum of scalar vars in the given order.
  Var add_scalars(std::span<const Var> parts);

  // One fused LSTM step. `state` is [h; c] (2H); the result is [h'; c'].
  Var lstm(Var x, Var state, ParamRef weights, ParamRef bias);

  // Additive attention logits: out[j] = v . tanh(keys_j + query), where `keys`
  // stacks `count` vectors of query's length.
  Var attend(Var keys, Var query, ParamRef v, std::size_t count);

  // log of masked_softmax(logits, mask)[index]. When `probs_out` is non-null
  // it receives the full probability vector.
  Var log_softmax_pick(Var logits, std::span<const unsigned char> mask, std::size_t index,
                       std::vector<double>* probs_out = nullptr);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;

  // Reverse sweep from `output` (any length; every entry seeded with `seed`).
  // Adds into `param_grad`, which must have the store's size. Throws UsageError
  // on an empty tape or a foreign handle.
  void backward(Var output, double seed, std::span<double> param_grad);

private:
  enum class Op : std::uint8_t {
    Input, Param, Affine, Add, Mul, Tanh, Sigmoid, Sum, Slice, Stack, AddScalars, Lstm, Attend,
    LogSoftmaxPick
  };

  static constexpr std::uint32_t kNone = UINT32_MAX;
  static constexpr std::size_t kNoParam = SIZE_MAX;

  struct Node {
    Op op;
    std::uint32_t a = kNone;
    std::uint32_t b = kNone;
    std::size_t offset = 0;  // into values_
    std::size_t length = 0;
    std::size_t aux = 0;     // into aux_
    ParamRef p1{kNoParam, 0, 0};
    ParamRef p2{kNoParam, 0, 0};
    std::size_t extra = 0;   // slice offset, attend count, picked index, list start
  };

  Var push(Node node, std::size_t length);
  const Node& node(Var v) const;
  double* val(const Node& n) { return values_.data() + n.offset; }
  const double* val(const Node& n) const { return values_.data() + n.offset; }

  const ParameterStore* params_;
  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<double> aux_;
  std::vector<std::uint32_t> lists_;
  std::vector<double> scratch_;
};

}  // namespace noma::tensor
