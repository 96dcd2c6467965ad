#include "noma/reinforce.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "noma/assignment.hpp"
#include "noma/baselines.hpp"
#include "noma/digest.hpp"
#include "noma/error.hpp"
#include "noma/rates.hpp"
#include "noma/stats.hpp"

namespace noma {

namespace {
// Independent RNG streams derived from the run seed.
constexpr std::uint64_t kTrainStream = 0;
constexpr std::uint64_t kHeldOutStream = 1;
constexpr std::uint64_t kInitStream = 2;
}  // namespace

void TrainConfig::validate() const {
  network.validate();
  policy.validate();
  if (policy.input_dim != network.bs_count())
    throw UsageError("policy input_dim must equal the number of base stations");
  if (episodes == 0 || steps_per_episode == 0 || batch_size == 0)
    throw UsageError("episodes, steps_per_episode and batch_size must be >= 1");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0))
    throw UsageError("baseline_decay must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (eval_every == 0) throw UsageError("eval_every must be >= 1");
}

std::string TrainConfig::hash() const {
  std::ostringstream s;
  s << "net=" << network.hash() << ";netseed=" << network.seed << ";policy=" << policy.hash()
    << ";T=" << steps_per_episode << ";batch=" << batch_size
    << ";lambda=" << format_double(baseline_decay) << ";lr=" << format_double(learning_rate)
    << ";seed=" << seed << ";eval=" << eval_instances << "/" << eval_every;
  return fnv1a_hex(s.str());
}

double update_baseline(double baseline, double decay, double batch_mean) {
  return decay * baseline + (1.0 - decay) * batch_mean;
}

PolicyGradientResult reinforce_update(std::span<const double> phis, double& baseline, double decay,
                                      const LogProbGradient& log_prob_grad,
                                      tensor::ParameterStore& params, tensor::AdamState& adam) {
  if (phis.empty()) throw UsageError("reinforce_update needs a nonempty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    if (!std::isfinite(phis[i]))
      throw NumericalError("non-finite aggregate rate for batch sample " + std::to_string(i));
    total += phis[i];
  }
  const double k = static_cast<double>(phis.size());
  PolicyGradientResult r;
  r.batch_mean = total / k;
  baseline = update_baseline(baseline, decay, r.batch_mean);
  r.baseline = baseline;

  std::vector<double> grad(params.size(), 0.0);
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const double weight = (phis[i] - baseline) / k;
    if (weight != 0.0) log_prob_grad(i, weight, grad);
  }
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  r.grad_norm = std::sqrt(sq);
  tensor::adam_update(params, grad, adam);
  return r;
}

double rollout_phi(std::span<const std::size_t> u, const NetworkInstance& instance) {
  const Assignment a = canonicalize(
      Assignment::from_permutation({u.begin(), u.end()}, instance.csi.bs_count(),
                                   instance.config.prbs_per_bs),
      instance.csi);
  return aggregate_rate(a, instance, RadioParams::from(instance.config));
}

HeldOutSet make_held_out_set(const TrainConfig& config) {
  HeldOutSet set;
  Rng rng = make_rng(config.seed, kHeldOutStream);
  const RadioParams params = RadioParams::from(config.network);
  const bool solvable =
      exhaustive_candidate_count(config.network.ue_count()) <= kDefaultExhaustiveBudget;
  for (std::size_t i = 0; i < config.eval_instances; ++i) {
    set.instances.push_back(sample_instance(config.network, rng));
    set.optimum.push_back(solvable ? exhaustive_noma(set.instances.back(), params).phi : NAN);
  }
  return set;
}

EvalSummary evaluate_policy(const PointerNetwork& policy, const HeldOutSet& set) {
  EvalSummary out;
  tensor::Tape tape(policy.parameters());
  for (std::size_t i = 0; i < set.instances.size(); ++i) {
    tape.clear();
    const Rollout r = policy.rollout_greedy(tape, set.instances[i].csi);
    const double phi = rollout_phi(r.u, set.instances[i]);
    out.phi.push_back(phi);
    out.gap.push_back(std::isfinite(set.optimum[i]) ? gap_percent(set.optimum[i], phi) : NAN);
  }
  out.median_phi = median(out.phi);
  out.median_gap = median(out.gap);
  return out;
}

TrainingState::TrainingState(const TrainConfig& config)
    : config_(config), policy_(config.policy), rng_(make_rng(config.seed, kTrainStream)) {
  config_.validate();
  Rng init = make_rng(config_.seed, kInitStream);
  policy_.init_parameters(init);
  adam_ = tensor::AdamState({config_.learning_rate}, policy_.parameters().size());
  tapes_.assign(config_.batch_size, tensor::Tape(policy_.parameters()));
  grad_.assign(policy_.parameters().size(), 0.0);
}

StepMetrics TrainingState::train_step() {
  const std::size_t batch = config_.batch_size;
  std::vector<NetworkInstance> instances;
  instances.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) instances.push_back(sample_instance(config_.network, rng_));

  std::vector<Rollout> rollouts;
  std::vector<double> phis;
  rollouts.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    tapes_[i].clear();
    rollouts.push_back(policy_.rollout_sample(tapes_[i], instances[i].csi, rng_));
    phis.push_back(rollout_phi(rollouts.back().u, instances[i]));
  }

  const PolicyGradientResult r = reinforce_update(
      phis, baseline_, config_.baseline_decay,
      [&](std::size_t i, double weight, std::span<double> grad) {
        tapes_[i].backward(rollouts[i].log_prob_var, weight, grad);
      },
      policy_.parameters(), adam_);
  ++step_;
  return {step_, r.batch_mean, r.baseline, r.grad_norm, std::nullopt, std::nullopt};
}

namespace {

nlohmann::json policy_metadata(const PtrNetConfig& c) {
  return {{"input_dim", c.input_dim},     {"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},   {"feature_snr", c.feature_snr},
          {"feature_scale", c.feature_scale}};
}

PtrNetConfig policy_config_from(const nlohmann::json& j) {
  PtrNetConfig c;
  c.input_dim = j.at("input_dim").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.feature_snr = j.at("feature_snr").get<double>();
  c.feature_scale = j.at("feature_scale").get<double>();
  return c;
}

}  // namespace

tensor::Checkpoint policy_checkpoint(const PointerNetwork& policy, const std::string& config_hash) {
  tensor::Checkpoint ckpt;
  ckpt.config_hash = config_hash;
  ckpt.arrays = tensor::arrays_from_store(policy.parameters(), "policy/");
  ckpt.metadata["policy"] = policy_metadata(policy.config());
  return ckpt;
}

PointerNetwork policy_from_checkpoint(const tensor::Checkpoint& ckpt) {
  try {
    PointerNetwork policy(policy_config_from(ckpt.metadata.at("policy")));
    tensor::load_into_store(ckpt, policy.parameters(), "policy/");
    return policy;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint lacks policy metadata: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint holds an invalid policy config: ") + e.what());
  }
}

tensor::Checkpoint TrainingState::to_checkpoint() const {
  tensor::Checkpoint ckpt = policy_checkpoint(policy_, config_.hash());
  std::vector<double> m = adam_.m, v = adam_.v;
  ckpt.arrays.push_back({"adam/m", m.size(), 1, std::move(m)});
  ckpt.arrays.push_back({"adam/v", v.size(), 1, std::move(v)});
  ckpt.metadata["step"] = step_;
  ckpt.metadata["baseline"] = baseline_;
  ckpt.metadata["adam_t"] = adam_.t;
  ckpt.metadata["rng"] = serialize_rng(rng_);
  return ckpt;
}

void TrainingState::restore(const tensor::Checkpoint& ckpt) {
  if (ckpt.config_hash != config_.hash())
    throw DataError("checkpoint config hash " + ckpt.config_hash + " does not match config hash " +
                    config_.hash());
  try {
    tensor::load_into_store(ckpt, policy_.parameters(), "policy/");
    const auto& m = ckpt.array("adam/m").values;
    const auto& v = ckpt.array("adam/v").values;
    if (m.size() != adam_.m.size() || v.size() != adam_.v.size())
      throw DataError("checkpoint Adam moments have the wrong length");
    adam_.m = m;
    adam_.v = v;
    adam_.t = ckpt.metadata.at("adam_t").get<std::uint64_t>();
    step_ = ckpt.metadata.at("step").get<std::uint64_t>();
    baseline_ = ckpt.metadata.at("baseline").get<double>();
    rng_ = deserialize_rng(ckpt.metadata.at("rng").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint lacks training state: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(std::string("corrupt training checkpoint: ") + e.what());
  }
}

std::string metrics_csv_row(const StepMetrics& m) {
  std::string row = std::to_string(m.step) + "," + format_double(m.batch_mean_phi) + "," +
                    format_double(m.baseline) + "," + format_double(m.grad_norm) + ",";
  if (m.eval_median_phi) row += format_double(*m.eval_median_phi);
  row += ",";
  if (m.eval_median_gap) row += format_double(*m.eval_median_gap);
  return row;
}

namespace {

// Keeps the header and rows with step <= last_step; a missing file gets a header.
void truncate_metrics(const std::filesystem::path& path, std::uint64_t last_step) {
  std::vector<std::string> keep{kMetricsHeader};
  if (std::ifstream in(path); in) {
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoull(line.substr(0, line.find(','))) <= last_step) keep.push_back(line);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const std::string& l : keep) out << l << '\n';
}

}  // namespace

TrainResult train(TrainingState& state, const TrainOptions& options) {
  TrainResult result;
  std::filesystem::path ckpt_path, metrics_path;
  std::ofstream metrics_out;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    ckpt_path = *options.out_dir / "checkpoint.json";
    metrics_path = *options.out_dir / "metrics.csv";
    if (std::filesystem::exists(ckpt_path)) {
      state.restore(tensor::load_checkpoint(ckpt_path));
      result.resumed_from = state.step();
    }
    truncate_metrics(metrics_path, state.step());
    metrics_out.open(metrics_path, std::ios::binary | std::ios::app);
  }

  const TrainConfig& config = state.config();
  const HeldOutSet held_out = make_held_out_set(config);
  const std::uint64_t total = config.total_steps();

  while (state.step() < total) {
    StepMetrics m;
    try {
      m = state.train_step();
    } catch (const NumericalError&) {
      if (options.out_dir) tensor::save_checkpoint(state.to_checkpoint(), *options.out_dir / "diagnostic.json");
      throw;
    }
    if (m.step == 1 || m.step % config.eval_every == 0 || m.step % config.steps_per_episode == 0) {
      const EvalSummary eval = evaluate_policy(state.policy(), held_out);
      m.eval_median_phi = eval.median_phi;
      m.eval_median_gap = eval.median_gap;
    }
    if (options.on_step) options.on_step(m);
    if (metrics_out.is_open()) metrics_out << metrics_csv_row(m) << '\n';
    result.metrics.push_back(m);
    if (options.out_dir && (m.step % config.steps_per_episode == 0 || m.step == total)) {
      metrics_out.flush();
      tensor::save_checkpoint(state.to_checkpoint(), ckpt_path);
    }
  }
  return result;
}

}  // namespace noma
