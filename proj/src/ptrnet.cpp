#include "noma/ptrnet.hpp"

#include <cmath>
#include <sstream>

#include "noma/digest.hpp"
#include "noma/error.hpp"
#include "noma/tensorcore/kernels.hpp"

namespace noma {

using tensor::Tape;
using tensor::Var;

void PtrNetConfig::validate() const {
  if (input_dim == 0 || embed_dim == 0 || hidden_dim == 0)
    throw UsageError("pointer network dimensions must all be >= 1");
  if (!(feature_snr > 0.0) || !(feature_scale > 0.0))
    throw UsageError("feature_snr and feature_scale must be > 0");
}

std::string PtrNetConfig::hash() const {
  std::ostringstream s;
  s << "in=" << input_dim << ";emb=" << embed_dim << ";hid=" << hidden_dim
    << ";snr=" << format_double(feature_snr) << ";scale=" << format_double(feature_scale);
  return fnv1a_hex(s.str());
}

PointerNetwork::PointerNetwork(PtrNetConfig config) : config_(config) {
  config_.validate();
  const std::size_t k = config_.input_dim, e = config_.embed_dim, h = config_.hidden_dim;
  embed_w_ = params_.add("embed.W", e, k);
  embed_b_ = params_.add("embed.b", e);
  sos_ = params_.add("decoder.sos", e);
  enc_w_ = params_.add("encoder.W", 4 * h, e + h);
  enc_b_ = params_.add("encoder.b", 4 * h);
  dec_w_ = params_.add("decoder.W", 4 * h, e + h);
  dec_b_ = params_.add("decoder.b", 4 * h);
  att_w1_ = params_.add("attention.W1", h, h);
  att_w2_ = params_.add("attention.W2", h, h);
  att_v_ = params_.add("attention.v", h);
}

void PointerNetwork::init_parameters(Rng& rng) {
  params_.init_uniform(1.0 / std::sqrt(static_cast<double>(config_.hidden_dim)), rng);
}

std::vector<double> PointerNetwork::features(const CsiMatrix& csi, std::size_t n) const {
  std::vector<double> f(csi.bs_count());
  for (std::size_t k = 0; k < csi.bs_count(); ++k)
    f[k] = std::log2(1.0 + config_.feature_snr * csi(k, n)) * config_.feature_scale;
  return f;
}

std::vector<Var> PointerNetwork::embed(Tape& tape, const CsiMatrix& csi) const {
  if (csi.bs_count() != config_.input_dim)
    throw UsageError("pointer network expects CSI vectors of length " +
                     std::to_string(config_.input_dim) + ", got " + std::to_string(csi.bs_count()));
  std::vector<Var> out;
  out.reserve(csi.ue_count());
  for (std::size_t n = 0; n < csi.ue_count(); ++n)
    out.push_back(tape.affine(embed_w_, tape.input(features(csi, n)), embed_b_));
  return out;
}

Encoding PointerNetwork::encode(Tape& tape, std::span<const Var> embedded) const {
  if (embedded.empty()) throw UsageError("cannot encode an empty sequence");
  const std::size_t h = config_.hidden_dim;
  Encoding enc;
  enc.embedded.assign(embedded.begin(), embedded.end());
  const std::vector<double> zero(2 * h, 0.0);
  Var state = tape.input(zero);
  std::vector<Var> keys;
  for (Var x : embedded) {
    state = tape.lstm(x, state, enc_w_, enc_b_);
    enc.states.push_back(state);
    keys.push_back(tape.affine(att_w1_, tape.slice(state, 0, h)));
  }
  enc.keys = tape.stack(keys);
  enc.final_state = state;
  return enc;
}

DecodeStep PointerNetwork::decode_step(Tape& tape, Var prev_input, Var state, const Encoding& enc,
                                       std::span<const unsigned char> mask) const {
  const std::size_t h = config_.hidden_dim;
  DecodeStep step;
  step.state = tape.lstm(prev_input, state, dec_w_, dec_b_);
  const Var query = tape.affine(att_w2_, tape.slice(step.state, 0, h));
  step.logits = tape.attend(enc.keys, query, att_v_, enc.states.size());
  step.probs = tensor::masked_softmax(tape.value(step.logits), mask);
  return step;
}

Rollout PointerNetwork::run(Tape& tape, const CsiMatrix& csi, const Chooser& choose) const {
  const std::size_t n_ue = csi.ue_count();
  const std::vector<Var> embedded = embed(tape, csi);
  const Encoding enc = encode(tape, embedded);

  Rollout r;
  std::vector<unsigned char> mask(n_ue, 1);
  std::vector<Var> step_vars;
  Var state = enc.final_state;
  Var prev = tape.param(sos_);
  for (std::size_t step = 0; step < n_ue; ++step) {
    DecodeStep d = decode_step(tape, prev, state, enc, mask);
    const std::size_t j = choose(step, d.probs);
    if (j >= n_ue || !mask[j]) throw UsageError("decoder pointed at an unavailable UE");
    const Var lp = tape.log_softmax_pick(d.logits, mask, j);
    step_vars.push_back(lp);
    r.step_log_probs.push_back(tape.scalar(lp));
    r.step_probs.push_back(std::move(d.probs));
    r.u.push_back(j);
    mask[j] = 0;
    state = d.state;
    prev = embedded[j];
  }
  r.log_prob_var = tape.add_scalars(step_vars);
  r.log_prob = tape.scalar(r.log_prob_var);
  return r;
}

Rollout PointerNetwork::rollout_sample(Tape& tape, const CsiMatrix& csi, Rng& rng) const {
  return run(tape, csi, [&rng](std::size_t, const std::vector<double>& p) { return sample_index(p, rng); });
}

Rollout PointerNetwork::rollout_greedy(Tape& tape, const CsiMatrix& csi) const {
  return run(tape, csi, [](std::size_t, const std::vector<double>& p) { return argmax_first(p); });
}

Rollout PointerNetwork::rollout_greedy(const CsiMatrix& csi) const {
  Tape tape(params_);
  return rollout_greedy(tape, csi);
}

Rollout PointerNetwork::score(Tape& tape, const CsiMatrix& csi, std::span<const std::size_t> u) const {
  if (u.size() != csi.ue_count()) throw UsageError("scored permutation has the wrong length");
  return run(tape, csi, [u](std::size_t step, const std::vector<double>&) { return u[step]; });
}

std::size_t argmax_first(std::span<const double> probs) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j)
    if (probs[j] > probs[best]) best = j;
  return best;
}

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  const double x = uniform_open01(rng);
  double cumulative = 0.0;
  std::size_t last = probs.size();
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] <= 0.0) continue;
    cumulative += probs[j];
    last = j;
    if (x < cumulative) return j;
  }
  return last;  // rounding left x above the final cumulative sum
}

}  // namespace noma
