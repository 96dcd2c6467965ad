#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "noma/assignment.hpp"
#include "noma/baselines.hpp"
#include "noma/error.hpp"
#include "noma/harness.hpp"
#include "noma/reinforce.hpp"

using namespace noma;

namespace {

TrainConfig tiny_config() {
  TrainConfig c = harness::preset("scaled");
  c.policy.embed_dim = 8;
  c.policy.hidden_dim = 8;
  c.batch_size = 4;
  c.episodes = 2;
  c.steps_per_episode = 3;
  c.eval_instances = 5;
  c.eval_every = 2;
  c.seed = 42;
  return c;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("noma_reinforce_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Two-armed pointing toy: one logit theta, arm 0 chosen with probability
// sigmoid(theta). Returns the arm per sample and fills the batch rewards.
struct ArmBatch {
  std::vector<int> arms;
  std::vector<double> phis;
};

ArmBatch draw_arms(double theta, std::size_t k, const double reward[2], Rng& rng) {
  ArmBatch b;
  for (std::size_t i = 0; i < k; ++i) {
    const int arm = uniform_open01(rng) < logistic(theta) ? 0 : 1;
    b.arms.push_back(arm);
    b.phis.push_back(reward[arm]);
  }
  return b;
}

LogProbGradient arm_gradient(const ArmBatch& batch, double theta) {
  return [&batch, theta](std::size_t i, double weight, std::span<double> grad) {
    const double p = logistic(theta);
    grad[0] += weight * (batch.arms[i] == 0 ? 1.0 - p : -p);
  };
}

}  // namespace

TEST_CASE("moving-average baseline") {
  CHECK(update_baseline(0.0, 0.9, 10.0) == doctest::Approx(1.0).epsilon(1e-15));
  double b = 0.0;
  const double c = 7.25, lambda = 0.9;
  for (int k = 1; k <= 50; ++k) {
    b = update_baseline(b, lambda, c);
    CHECK(b == doctest::Approx(c * (1.0 - std::pow(lambda, k))).epsilon(1e-12));
  }
}

TEST_CASE("config validation and hash") {
  TrainConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  TrainConfig bad = c;
  bad.baseline_decay = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = c;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  TrainConfig longer = c;
  longer.episodes = 9;
  CHECK(longer.hash() == c.hash());
  longer.learning_rate = 0.5;
  CHECK(longer.hash() != c.hash());
}

TEST_CASE("policy-gradient update") {
  tensor::ParameterStore params;
  params.add("theta", 1);
  const double reward[2] = {2.0, 1.0};

  SUBCASE("the baseline moves before the advantage is formed") {
    tensor::AdamState adam(tensor::AdamConfig{}, 1);
    double b = 0.0;
    std::vector<double> weights;
    const std::vector<double> phis = {10.0, 10.0};
    const PolicyGradientResult r = reinforce_update(
        phis, b, 0.9, [&](std::size_t, double w, std::span<double>) { weights.push_back(w); }, params, adam);
    CHECK(r.batch_mean == 10.0);
    CHECK(r.baseline == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(b == r.baseline);
    REQUIRE(weights.size() == 2);
    CHECK(weights[0] == doctest::Approx((10.0 - 1.0) / 2).epsilon(1e-15));
  }
  SUBCASE("zero advantages leave the parameters unchanged") {
    tensor::AdamState adam(tensor::AdamConfig{}, 1);
    params.flat()[0] = 0.3;
    double b = 5.0;
    const std::vector<double> phis = {5.0, 5.0, 5.0};
    const PolicyGradientResult r =
        reinforce_update(phis, b, 0.9, [](std::size_t, double, std::span<double>) { FAIL("no gradient expected"); },
                         params, adam);
    CHECK(r.grad_norm == 0.0);
    CHECK(params.flat()[0] == 0.3);
  }
  SUBCASE("non-finite reward aborts") {
    tensor::AdamState adam(tensor::AdamConfig{}, 1);
    double b = 0.0;
    const std::vector<double> phis = {1.0, NAN};
    CHECK_THROWS_AS(reinforce_update(phis, b, 0.9, [](std::size_t, double, std::span<double>) {}, params, adam),
                    NumericalError);
  }
  SUBCASE("two-armed toy learns the better arm") {
    tensor::AdamState adam(tensor::AdamConfig{0.05}, 1);
    params.flat()[0] = 0.0;
    double b = 0.0;
    Rng rng = make_rng(3);
    for (int step = 0; step < 2000; ++step) {
      const double theta = params.flat()[0];
      const ArmBatch batch = draw_arms(theta, 8, reward, rng);
      reinforce_update(batch.phis, b, 0.9, arm_gradient(batch, theta), params, adam);
    }
    CHECK(logistic(params.flat()[0]) > 0.99);
  }
  SUBCASE("with a frozen baseline the batch gradient is unbiased") {
    // J(theta) = p r0 + (1 - p) r1, so dJ/dtheta = p (1 - p) (r0 - r1). A
    // decay this close to one keeps the baseline at b0 to ~1e-12.
    const double theta = 0.4, b0 = 1.3;
    params.flat()[0] = theta;
    Rng rng = make_rng(4);
    const std::size_t k = 100000;
    const ArmBatch batch = draw_arms(theta, k, reward, rng);
    double b = b0;
    tensor::AdamState adam(tensor::AdamConfig{1e-9}, 1);
    const PolicyGradientResult r =
        reinforce_update(batch.phis, b, 1.0 - 1e-12, arm_gradient(batch, theta), params, adam);
    CHECK(params.flat()[0] > theta);  // ascent direction is the sign of g

    const double p = logistic(theta);
    const double exact = p * (1 - p) * (reward[0] - reward[1]);
    // Per-sample estimator variance, for the 3-sigma bound.
    const double e0 = (reward[0] - b0) * (1 - p), e1 = (reward[1] - b0) * (-p);
    const double second = p * e0 * e0 + (1 - p) * e1 * e1;
    const double sigma = std::sqrt((second - exact * exact) / k);
    CHECK(std::abs(r.grad_norm - exact) <= 3 * sigma);
  }
}

TEST_CASE("rollout scoring canonicalizes") {
  const TrainConfig c = tiny_config();
  Rng rng = make_rng(1);
  const NetworkInstance inst = sample_instance(c.network, rng);
  const RadioParams params = RadioParams::from(c.network);
  const std::vector<std::size_t> u = {3, 1, 0, 2};
  CHECK(rollout_phi(u, inst) ==
        aggregate_rate(canonicalize(Assignment::from_permutation(u, 2, 1), inst.csi), inst, params));
  std::vector<std::size_t> swapped = {1, 3, 2, 0};
  CHECK(rollout_phi(swapped, inst) == rollout_phi(u, inst));
}

TEST_CASE("held-out evaluation") {
  const TrainConfig c = tiny_config();
  const HeldOutSet set = make_held_out_set(c);
  REQUIRE(set.instances.size() == 5);
  const RadioParams params = RadioParams::from(c.network);
  for (std::size_t i = 0; i < 5; ++i) CHECK(set.optimum[i] == exhaustive_noma(set.instances[i], params).phi);
  TrainingState state(c);
  const EvalSummary e = evaluate_policy(state.policy(), set);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(e.phi[i] <= set.optimum[i]);
    CHECK(e.gap[i] >= 0.0);
  }
  // Same seed, same set.
  CHECK(make_held_out_set(c).optimum == set.optimum);
}

TEST_CASE("training steps") {
  SUBCASE("one episode of one step is one update") {
    TrainConfig c = tiny_config();
    c.episodes = 1;
    c.steps_per_episode = 1;
    TrainingState state(c);
    const TrainResult r = train(state);
    CHECK(r.metrics.size() == 1);
    CHECK(state.adam().t == 1);
    CHECK(state.step() == 1);
    CHECK(r.metrics[0].eval_median_phi.has_value());
  }
  SUBCASE("seeded runs are identical") {
    TrainingState a(tiny_config()), b(tiny_config());
    for (int i = 0; i < 4; ++i) {
      const StepMetrics ma = a.train_step(), mb = b.train_step();
      CHECK(ma.batch_mean_phi == mb.batch_mean_phi);
      CHECK(ma.grad_norm == mb.grad_norm);
    }
    CHECK(a.policy().parameters() == b.policy().parameters());
  }
  SUBCASE("a different seed gives a different run") {
    TrainConfig other = tiny_config();
    other.seed = 43;
    TrainingState a(tiny_config()), b(other);
    CHECK(a.train_step().batch_mean_phi != b.train_step().batch_mean_phi);
  }
}

TEST_CASE("training-state checkpoints") {
  TrainingState a(tiny_config());
  for (int i = 0; i < 3; ++i) a.train_step();
  const auto path = std::filesystem::temp_directory_path() / "noma_reinforce_state.json";
  tensor::save_checkpoint(a.to_checkpoint(), path);

  TrainingState b(tiny_config());
  b.restore(tensor::load_checkpoint(path));
  CHECK(b.step() == 3);
  CHECK(b.baseline() == a.baseline());
  CHECK(b.adam() == a.adam());
  CHECK(b.policy().parameters() == a.policy().parameters());
  for (int i = 0; i < 2; ++i) CHECK(a.train_step().grad_norm == b.train_step().grad_norm);

  SUBCASE("policy-only view") {
    const PointerNetwork p = policy_from_checkpoint(tensor::load_checkpoint(path));
    TrainingState c(tiny_config());
    c.restore(tensor::load_checkpoint(path));
    CHECK(p.parameters() == c.policy().parameters());
  }
  SUBCASE("a checkpoint from another config is refused") {
    TrainConfig other = tiny_config();
    other.batch_size = 5;
    TrainingState c(other);
    CHECK_THROWS_AS(c.restore(tensor::load_checkpoint(path)), DataError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("train() with an output directory") {
  const auto straight = fresh_dir("straight"), resumed = fresh_dir("resumed");
  {
    TrainingState s(tiny_config());
    train(s, {straight, {}});
  }
  {
    TrainConfig first = tiny_config();
    first.episodes = 1;
    TrainingState s(first);
    train(s, {resumed, {}});
  }
  TrainingState s(tiny_config());
  const TrainResult r = train(s, {resumed, {}});
  CHECK(r.resumed_from == 3);
  CHECK(r.metrics.front().step == 4);
  const std::string metrics = read_file(straight / "metrics.csv");
  CHECK(metrics == read_file(resumed / "metrics.csv"));
  CHECK(metrics.rfind(std::string(kMetricsHeader) + "\n1,", 0) == 0);
  CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 7);

  SUBCASE("metrics past the checkpoint are dropped on resume") {
    std::ofstream(resumed / "metrics.csv", std::ios::app) << "7,junk\n";
    TrainConfig longer = tiny_config();
    longer.episodes = 3;
    TrainingState t(longer);
    train(t, {resumed, {}});
    const std::string text = read_file(resumed / "metrics.csv");
    CHECK(text.find("junk") == std::string::npos);
    CHECK(text.rfind(metrics, 0) == 0);
  }
  SUBCASE("a directory from another config is refused") {
    TrainConfig other = tiny_config();
    other.learning_rate = 0.1;
    TrainingState t(other);
    CHECK_THROWS_AS(train(t, {straight, {}}), DataError);
  }
}

TEST_CASE("metrics rows") {
  StepMetrics m;
  m.step = 12;
  m.batch_mean_phi = 0.5;
  m.baseline = 0.25;
  m.grad_norm = 1.0;
  CHECK(metrics_csv_row(m) == "12,0.5,0.25,1,,");
  m.eval_median_phi = 3.0;
  m.eval_median_gap = 0.0;
  CHECK(metrics_csv_row(m) == "12,0.5,0.25,1,3,0");
}
