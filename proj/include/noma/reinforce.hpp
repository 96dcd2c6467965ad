#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noma/netsim.hpp"
#include "noma/ptrnet.hpp"
#include "noma/random.hpp"
#include "noma/tensorcore/adam.hpp"
#include "noma/tensorcore/checkpoint.hpp"
#include "noma/tensorcore/tape.hpp"

namespace noma {

struct TrainConfig {
  NetworkConfig network;
  PtrNetConfig policy;
  std::size_t episodes = 1;              // N_epi
  std::size_t steps_per_episode = 10000; // T_epi
  std::size_t batch_size = 128;          // K_batch
  double baseline_decay = 0.9;           // lambda
  double learning_rate = 1e-3;           // epsilon
  std::uint64_t seed = 1;
  std::size_t eval_instances = 200;
  std::size_t eval_every = 100;          // steps between held-out evaluations

  std::uint64_t total_steps() const { return std::uint64_t{episodes} * steps_per_episode; }
  void validate() const;
  // Covers everything except `episodes`, so a finished run can be extended.
  std::string hash() const;
};

struct StepMetrics {
  std::uint64_t step = 0;
  double batch_mean_phi = 0.0;
  double baseline = 0.0;
  double grad_norm = 0.0;
  std::optional<double> eval_median_phi;
  std::optional<double> eval_median_gap;  // percent below the exhaustive optimum
};

// b <- lambda b + (1 - lambda) * batch_mean.
double update_baseline(double baseline, double decay, double batch_mean);

struct PolicyGradientResult {
  double batch_mean = 0.0;
  double baseline = 0.0;   // after the update
  double grad_norm = 0.0;  // L2 norm of g_theta
};

// Accumulates weight * grad(log p(u_i | s_i)) into `grad` for sample i.
using LogProbGradient = std::function<void(std::size_t i, double weight, std::span<double> grad)>;

// The update half of one REINFORCE step, for any policy: moves the baseline
// with the batch mean first, then forms
//   g = 1/K sum_i (phi_i - b) grad log p(u_i | s_i)
// with the updated b and takes an Adam ascent step. Throws NumericalError on a
// non-finite reward or gradient.
PolicyGradientResult reinforce_update(std::span<const double> phis, double& baseline, double decay,
                                      const LogProbGradient& log_prob_grad,
                                      tensor::ParameterStore& params, tensor::AdamState& adam);

struct HeldOutSet {
  std::vector<NetworkInstance> instances;
  std::vector<double> optimum;  // exhaustive phi, NaN when over budget
};

HeldOutSet make_held_out_set(const TrainConfig& config);

struct EvalSummary {
  std::vector<double> phi;  // greedy policy phi per instance
  std::vector<double> gap;  // percent, NaN where no optimum is known
  double median_phi = 0.0;
  double median_gap = 0.0;
};

// Greedy decode of every instance, canonicalized and scored.
EvalSummary evaluate_policy(const PointerNetwork& policy, const HeldOutSet& set);

// Scores a decoded permutation: canonicalize, then aggregate rate.
double rollout_phi(std::span<const std::size_t> u, const NetworkInstance& instance);

class TrainingState {
public:
  explicit TrainingState(const TrainConfig& config);
  // Tapes hold pointers into the policy's parameter store.
  TrainingState(const TrainingState&) = delete;
  TrainingState& operator=(const TrainingState&) = delete;

  const TrainConfig& config() const { return config_; }
  PointerNetwork& policy() { return policy_; }
  const PointerNetwork& policy() const { return policy_; }
  const tensor::AdamState& adam() const { return adam_; }
  double baseline() const { return baseline_; }
  std::uint64_t step() const { return step_; }

  // One REINFORCE iteration: fresh batch of instances, one sampled rollout
  // each, baseline update, policy gradient, Adam ascent.
  StepMetrics train_step();

  tensor::Checkpoint to_checkpoint() const;
  // Throws DataError if the checkpoint came from a different config.
  void restore(const tensor::Checkpoint& ckpt);

private:
  TrainConfig config_;
  PointerNetwork policy_;
  tensor::AdamState adam_;
  double baseline_ = 0.0;
  std::uint64_t step_ = 0;
  Rng rng_;
  std::vector<tensor::Tape> tapes_;
  std::vector<double> grad_;
};

// Rebuilds the policy stored in a training (or policy-only) checkpoint.
PointerNetwork policy_from_checkpoint(const tensor::Checkpoint& ckpt);
tensor::Checkpoint policy_checkpoint(const PointerNetwork& policy, const std::string& config_hash = "");

struct TrainOptions {
  std::optional<std::filesystem::path> out_dir;  // checkpoint.json + metrics.csv
  std::function<void(const StepMetrics&)> on_step;
};

struct TrainResult {
  std::vector<StepMetrics> metrics;  // rows produced by this call
  std::uint64_t resumed_from = 0;
};

// Runs until step T_epi * N_epi. The held-out set is evaluated after step 1,
// every eval_every steps and at every episode end. With an out_dir, resumes
// from its checkpoint when present, checkpoints after every episode, and keeps
// metrics.csv in sync with the checkpointed step. A numerical failure writes
// diagnostic.json there before rethrowing.
TrainResult train(TrainingState& state, const TrainOptions& options = {});

inline constexpr const char* kMetricsHeader =
    "step,batch_mean_phi,baseline,grad_norm,eval_median_phi,eval_median_gap";
std::string metrics_csv_row(const StepMetrics& m);

}  // namespace noma
