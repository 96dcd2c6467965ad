#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "noma/assignment.hpp"
#include "noma/error.hpp"
#include "noma/ptrnet.hpp"
#include "noma/tensorcore/kernels.hpp"
#include "support/oracles.hpp"

using namespace noma;
using noma::tensor::Tape;
using noma::tensor::Var;

namespace {

PtrNetConfig small_config(std::size_t k, std::size_t e = 6, std::size_t h = 5) {
  PtrNetConfig c;
  c.input_dim = k;
  c.embed_dim = e;
  c.hidden_dim = h;
  return c;
}

CsiMatrix random_csi(std::size_t k, std::size_t n, Rng& rng) {
  CsiMatrix csi(k, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) csi(i, j) = std::pow(10.0, uniform(rng, -12.0, -6.0));
  return csi;
}

CsiMatrix identical_csi(std::size_t k, std::size_t n) {
  CsiMatrix csi(k, n);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < n; ++j) csi(i, j) = 1e-8 * static_cast<double>(i + 1);
  return csi;
}

std::vector<double> values(const Tape& t, Var v) { return {t.value(v).begin(), t.value(v).end()}; }

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(PointerNetwork(small_config(0)), UsageError);
  CHECK_THROWS_AS(PointerNetwork(small_config(2, 0)), UsageError);
  CHECK_THROWS_AS(PointerNetwork(small_config(2, 4, 0)), UsageError);
  CHECK(small_config(2).hash() != small_config(3).hash());
}

TEST_CASE("embedding") {
  SUBCASE("fig3 dimensions") {
    PtrNetConfig c;
    c.input_dim = 5;
    PointerNetwork net(c);
    Rng rng = make_rng(1);
    net.init_parameters(rng);
    Tape tape(net.parameters());
    const std::vector<Var> e = net.embed(tape, random_csi(5, 10, rng));
    REQUIRE(e.size() == 10);
    for (Var v : e) CHECK(tape.value(v).size() == 128);
  }
  SUBCASE("zero weights give zero embeddings") {
    PointerNetwork net(small_config(2));
    Rng rng = make_rng(2);
    Tape tape(net.parameters());
    for (Var v : net.embed(tape, random_csi(2, 4, rng)))
      for (double x : tape.value(v)) CHECK(x == 0.0);
  }
  SUBCASE("identical UEs embed identically") {
    PointerNetwork net(small_config(3));
    Rng rng = make_rng(3);
    net.init_parameters(rng);
    Tape tape(net.parameters());
    const std::vector<Var> e = net.embed(tape, identical_csi(3, 4));
    for (Var v : e) CHECK(values(tape, v) == values(tape, e[0]));
  }
  SUBCASE("length mismatch") {
    PointerNetwork net(small_config(2));
    Tape tape(net.parameters());
    CHECK_THROWS_AS(net.embed(tape, CsiMatrix(3, 4)), UsageError);
  }
  SUBCASE("features are log-scaled SNR") {
    PointerNetwork net(small_config(1));
    CsiMatrix csi(1, 1);
    csi(0, 0) = 4e-9;  // snr * h^2 = 1
    CHECK(net.features(csi, 0)[0] == doctest::Approx(0.1).epsilon(1e-15));
  }
}

TEST_CASE("encoder") {
  PointerNetwork net(small_config(2));
  Rng rng = make_rng(4);
  net.init_parameters(rng);
  const CsiMatrix csi = random_csi(2, 6, rng);
  const std::size_t h = net.config().hidden_dim;

  SUBCASE("one element is one LSTM step from the zero state") {
    Tape tape(net.parameters());
    CsiMatrix one(2, 1);
    one(0, 0) = csi(0, 0);
    one(1, 0) = csi(1, 0);
    const std::vector<Var> e = net.embed(tape, one);
    const Encoding enc = net.encode(tape, e);
    REQUIRE(enc.states.size() == 1);
    const auto& p = net.parameters();
    const tensor::LstmState ref =
        tensor::lstm_step(tape.value(e[0]), {std::vector<double>(h, 0.0), std::vector<double>(h, 0.0)},
                          p.view(p.ref("encoder.W")), p.view(p.ref("encoder.b")));
    const std::vector<double> got = values(tape, enc.states[0]);
    CHECK(std::equal(ref.hidden.begin(), ref.hidden.end(), got.begin()));
    CHECK(std::equal(ref.cell.begin(), ref.cell.end(), got.begin() + h));
    CHECK(values(tape, enc.final_state) == got);
  }
  SUBCASE("zero parameters give zero states") {
    PointerNetwork zero(small_config(2));
    Tape tape(zero.parameters());
    const Encoding enc = zero.encode(tape, zero.embed(tape, csi));
    for (Var s : enc.states)
      for (double x : tape.value(s)) CHECK(x == 0.0);
  }
  SUBCASE("prefix property") {
    Tape full_tape(net.parameters());
    const std::vector<Var> e = net.embed(full_tape, csi);
    const Encoding full = net.encode(full_tape, e);
    Tape prefix_tape(net.parameters());
    const std::vector<Var> ep = net.embed(prefix_tape, csi);
    const Encoding prefix = net.encode(prefix_tape, std::span<const Var>(ep).first(3));
    for (std::size_t i = 0; i < 3; ++i) CHECK(values(prefix_tape, prefix.states[i]) == values(full_tape, full.states[i]));
  }
  SUBCASE("empty sequence") {
    Tape tape(net.parameters());
    CHECK_THROWS_AS(net.encode(tape, {}), UsageError);
  }
}

TEST_CASE("decode step") {
  SUBCASE("zero parameters point uniformly") {
    PointerNetwork net(small_config(2));
    Rng rng = make_rng(5);
    const Rollout r = net.rollout_greedy(random_csi(2, 5, rng));
    for (double p : r.step_probs[0]) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
    for (double p : r.step_probs[2]) CHECK((p == 0.0 || p == doctest::Approx(1.0 / 3).epsilon(1e-15)));
  }
  SUBCASE("the last step has a single unmasked entry with probability one") {
    PointerNetwork net(small_config(2));
    Rng rng = make_rng(6);
    net.init_parameters(rng);
    const Rollout r = net.rollout_greedy(random_csi(2, 4, rng));
    const std::vector<double>& last = r.step_probs.back();
    CHECK(std::count(last.begin(), last.end(), 1.0) == 1);
    CHECK(std::count(last.begin(), last.end(), 0.0) == 3);
    CHECK(r.step_log_probs.back() == 0.0);
  }
  SUBCASE("an all-masked step is an error") {
    PointerNetwork net(small_config(2));
    Tape tape(net.parameters());
    Rng rng = make_rng(7);
    const CsiMatrix csi = random_csi(2, 2, rng);
    const std::vector<Var> e = net.embed(tape, csi);
    const Encoding enc = net.encode(tape, e);
    const std::vector<unsigned char> none(2, 0);
    CHECK_THROWS_AS(net.decode_step(tape, e[0], enc.final_state, enc, none), UsageError);
  }
}

TEST_CASE("greedy decoding") {
  SUBCASE("ties go to the smallest index") {
    PointerNetwork net(small_config(3));
    Rng rng = make_rng(8);
    net.init_parameters(rng);
    // Identical UEs produce different encoder states, so zero the attention
    // vector to make every step an exact tie.
    auto& p = net.parameters();
    for (double& x : p.view(p.ref("attention.v"))) x = 0.0;
    const Rollout r = net.rollout_greedy(identical_csi(3, 6));
    std::vector<std::size_t> expected(6);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    CHECK(r.u == expected);
  }
  SUBCASE("probability is the product of the per-step maxima") {
    Rng rng = make_rng(9);
    for (int t = 0; t < 20; ++t) {
      PointerNetwork net(small_config(2));
      net.init_parameters(rng);
      const Rollout r = net.rollout_greedy(random_csi(2, 6, rng));
      double product = 1.0;
      for (const auto& probs : r.step_probs) product *= *std::max_element(probs.begin(), probs.end());
      CHECK(std::exp(r.log_prob) == doctest::Approx(product).epsilon(1e-10));
    }
  }
  SUBCASE("tape and standalone greedy agree") {
    PointerNetwork net(small_config(2));
    Rng rng = make_rng(10);
    net.init_parameters(rng);
    const CsiMatrix csi = random_csi(2, 8, rng);
    Tape tape(net.parameters());
    const Rollout a = net.rollout_greedy(tape, csi);
    const Rollout b = net.rollout_greedy(csi);
    CHECK(a.u == b.u);
    CHECK(a.log_prob == b.log_prob);
  }
  SUBCASE("argmax tie rule") {
    CHECK(argmax_first(std::vector<double>{0.0, 0.4, 0.4, 0.2}) == 1);
    CHECK(argmax_first(std::vector<double>{0.5, 0.5}) == 0);
  }
}

TEST_CASE("sampled rollouts") {
  SUBCASE("sharp attention makes sampling deterministic") {
    PointerNetwork net(small_config(2));
    Rng rng = make_rng(11);
    net.init_parameters(rng);
    auto& p = net.parameters();
    for (double& x : p.view(p.ref("attention.v"))) x *= 1e4;
    const CsiMatrix csi = random_csi(2, 2, rng);
    const Rollout greedy = net.rollout_greedy(csi);
    REQUIRE(*std::max_element(greedy.step_probs[0].begin(), greedy.step_probs[0].end()) > 1.0 - 1e-6);
    for (int i = 0; i < 100; ++i) {
      Tape tape(net.parameters());
      CHECK(net.rollout_sample(tape, csi, rng).u == greedy.u);
    }
  }
  SUBCASE("chain rule, masking and validity") {
    Rng rng = make_rng(12);
    PointerNetwork net(small_config(2));
    Tape tape(net.parameters());
    for (int t = 0; t < 300; ++t) {
      net.init_parameters(rng);
      const CsiMatrix csi = random_csi(2, 4, rng);
      tape.clear();
      const Rollout r = net.rollout_sample(tape, csi, rng);
      CHECK_NOTHROW(Assignment::from_permutation(r.u, 2, 1));
      double total = 0.0;
      for (double lp : r.step_log_probs) total += lp;
      CHECK(total == r.log_prob);
      for (std::size_t n = 0; n < r.u.size(); ++n) {
        double sum = 0.0;
        for (double p : r.step_probs[n]) sum += p;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t m = 0; m < n; ++m) CHECK(r.step_probs[n][r.u[m]] == 0.0);
      }
    }
  }
  SUBCASE("empirical frequencies match the exact permutation probabilities") {
    PointerNetwork net(small_config(1, 4, 4));
    Rng rng = make_rng(13);
    net.init_parameters(rng);
    auto& p = net.parameters();
    for (double& x : p.view(p.ref("attention.v"))) x *= 3.0;
    const CsiMatrix csi = random_csi(1, 3, rng);

    std::map<std::vector<std::size_t>, double> exact;
    std::vector<std::size_t> u = {0, 1, 2};
    double total = 0.0;
    do {
      Tape tape(net.parameters());
      exact[u] = std::exp(net.score(tape, csi, u).log_prob);
      total += exact[u];
    } while (std::next_permutation(u.begin(), u.end()));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    const int draws = 100000;
    std::map<std::vector<std::size_t>, int> seen;
    Tape tape(net.parameters());
    for (int i = 0; i < draws; ++i) {
      tape.clear();
      ++seen[net.rollout_sample(tape, csi, rng).u];
    }
    for (const auto& [perm, prob] : exact) {
      const double sigma = std::sqrt(draws * prob * (1 - prob));
      CHECK(std::abs(seen[perm] - draws * prob) <= 3 * sigma + 1);
    }
  }
  SUBCASE("inverse-CDF draws skip zero-probability entries") {
    Rng rng = make_rng(14);
    const std::vector<double> probs = {0.0, 0.25, 0.0, 0.75};
    int ones = 0;
    for (int i = 0; i < 40000; ++i) {
      const std::size_t j = sample_index(probs, rng);
      CHECK((j == 1 || j == 3));
      ones += j == 1;
    }
    CHECK(std::abs(ones - 10000) < 3 * std::sqrt(40000 * 0.25 * 0.75));
  }
}

TEST_CASE("score reproduces a sampled rollout") {
  PointerNetwork net(small_config(2));
  Rng rng = make_rng(15);
  net.init_parameters(rng);
  const CsiMatrix csi = random_csi(2, 6, rng);
  Tape a(net.parameters()), b(net.parameters());
  const Rollout sampled = net.rollout_sample(a, csi, rng);
  const Rollout scored = net.score(b, csi, sampled.u);
  CHECK(scored.u == sampled.u);
  CHECK(scored.log_prob == sampled.log_prob);
  CHECK_THROWS_AS(net.score(b, csi, std::vector<std::size_t>{0, 1}), UsageError);
}

TEST_CASE("log-probability gradient against central differences") {
  PointerNetwork net(small_config(2, 4, 4));
  Rng rng = make_rng(16);
  net.init_parameters(rng);
  const CsiMatrix csi = random_csi(2, 4, rng);
  const std::vector<std::size_t> u = {2, 0, 3, 1};

  Tape tape(net.parameters());
  const Rollout r = net.score(tape, csi, u);
  std::vector<double> grad(net.parameters().size(), 0.0);
  tape.backward(r.log_prob_var, 1.0, grad);

  auto f = [&](std::span<const double> theta) {
    PointerNetwork copy = net;
    std::copy(theta.begin(), theta.end(), copy.parameters().flat().begin());
    Tape t(copy.parameters());
    return copy.score(t, csi, u).log_prob;
  };
  const auto flat = net.parameters().flat();
  const std::vector<double> fd = oracle::central_differences(f, {flat.begin(), flat.end()}, 1e-4);
  CHECK(oracle::max_relative_error(grad, fd, 1e-4) < 1e-6);
}
