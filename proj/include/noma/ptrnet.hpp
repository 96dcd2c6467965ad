#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "noma/netsim.hpp"
#include "noma/random.hpp"
#include "noma/tensorcore/parameter_store.hpp"
#include "noma/tensorcore/tape.hpp"

namespace noma {

struct PtrNetConfig {
  std::size_t input_dim = 1;     // K, length of one UE's CSI vector
  std::size_t embed_dim = 128;
  std::size_t hidden_dim = 100;  // LSTM width
  // Gains enter the network as log2(1 + snr * h^2) * feature_scale, which keeps
  // the inputs O(1) across the ~10 decades a pathloss model spans.
  double feature_snr = 2.5e8;
  double feature_scale = 0.1;

  void validate() const;
  std::string hash() const;
};

struct Rollout {
  std::vector<std::size_t> u;                    // pointed UE per decoding step
  double log_prob = 0.0;                         // log p(u | s)
  std::vector<double> step_log_probs;            // log p(u_n | u_<n, s)
  std::vector<std::vector<double>> step_probs;   // full distribution at each step
  tensor::Var log_prob_var;                      // scalar on the tape that produced it
};

// Encoder states of one input sequence, as recorded on a tape.
struct Encoding {
  std::vector<tensor::Var> embedded;  // N vectors of embed_dim
  std::vector<tensor::Var> states;    // N encoder states [e_n; c_n]
  tensor::Var keys;                   // stacked W1 e_j, N x H
  tensor::Var final_state;
};

struct DecodeStep {
  tensor::Var state;           // new decoder state [d_n; c_n]
  tensor::Var logits;          // pointing weights over all N inputs
  std::vector<double> probs;   // masked softmax of logits
};

// Pointer network over the N per-UE CSI vectors of one instance: a shared
// affine embedding, an LSTM encoder, an LSTM decoder started from the last
// encoder state, and additive attention that points at the next UE. Already
// pointed UEs are masked out, so every decode is a permutation.
//
// The decoder's input at step n is the embedding of the UE pointed at step
// n - 1, or a learned start vector at the first step.
class PointerNetwork {
public:
  explicit PointerNetwork(PtrNetConfig config);

  const PtrNetConfig& config() const { return config_; }
  tensor::ParameterStore& parameters() { return params_; }
  const tensor::ParameterStore& parameters() const { return params_; }

  // Uniform in [-1/sqrt(H), 1/sqrt(H)] for every array.
  void init_parameters(Rng& rng);

  // Network input for UE n (length K).
  std::vector<double> features(const CsiMatrix& csi, std::size_t n) const;

  std::vector<tensor::Var> embed(tensor::Tape& tape, const CsiMatrix& csi) const;
  Encoding encode(tensor::Tape& tape, std::span<const tensor::Var> embedded) const;
  DecodeStep decode_step(tensor::Tape& tape, tensor::Var prev_input, tensor::Var state,
                         const Encoding& enc, std::span<const unsigned char> mask) const;

  Rollout rollout_sample(tensor::Tape& tape, const CsiMatrix& csi, Rng& rng) const;
  Rollout rollout_greedy(tensor::Tape& tape, const CsiMatrix& csi) const;
  // Teacher-forced: the log-probability of a given permutation.
  Rollout score(tensor::Tape& tape, const CsiMatrix& csi, std::span<const std::size_t> u) const;

  Rollout rollout_greedy(const CsiMatrix& csi) const;

private:
  using Chooser = std::function<std::size_t(std::size_t step, const std::vector<double>& probs)>;
  Rollout run(tensor::Tape& tape, const CsiMatrix& csi, const Chooser& choose) const;

  PtrNetConfig config_;
  tensor::ParameterStore params_;
  tensor::ParamRef embed_w_, embed_b_, sos_;
  tensor::ParamRef enc_w_, enc_b_, dec_w_, dec_b_;
  tensor::ParamRef att_w1_, att_w2_, att_v_;
};

// Index of the largest probability; ties go to the smallest index.
std::size_t argmax_first(std::span<const double> probs);

// Inverse-CDF draw from `probs` using one uniform variate.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

}  // namespace noma
