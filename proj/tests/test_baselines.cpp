#include <doctest.h>

#include <algorithm>

#include "noma/baselines.hpp"
#include "noma/error.hpp"
#include "noma/harness.hpp"
#include "noma/stats.hpp"
#include "support/oracles.hpp"

using namespace noma;

namespace {

const RadioParams kParams(1.0, 4e-9);

NetworkInstance instance_with(std::size_t k_bs, std::size_t prbs, std::uint64_t seed) {
  TrainConfig c = harness::preset("fig3");
  c.network.bs_positions.resize(k_bs);
  c.network.prbs_per_bs = prbs;
  Rng rng = make_rng(seed);
  return sample_instance(c.network, rng);
}

}  // namespace

TEST_CASE("candidate counts") {
  CHECK(exhaustive_candidate_count(2) == 1);
  CHECK(exhaustive_candidate_count(4) == 6);
  CHECK(exhaustive_candidate_count(10) == 113400);
  CHECK(exhaustive_candidate_count(12) == kDefaultExhaustiveBudget);
  CHECK(exhaustive_candidate_count(24) == UINT64_MAX);
}

TEST_CASE("exhaustive search, one pair") {
  const NetworkInstance inst = instance_with(1, 1, 1);
  const SolverResult r = exhaustive_noma(inst, kParams);
  const Assignment canon = canonicalize(Assignment::from_permutation({0, 1}, 1, 1), inst.csi);
  CHECK(r.assignment == canon);
  CHECK(r.phi == aggregate_rate(canon, inst, kParams));
}

TEST_CASE("exhaustive search agrees with the full 4! enumeration") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const NetworkInstance inst = instance_with(2, 1, seed);
    const SolverResult r = exhaustive_noma(inst, kParams);
    const oracle::PermutationSearch full = oracle::full_permutation_search(inst);
    CHECK(r.phi == full.phi);
    CHECK(aggregate_rate(r.assignment, inst, kParams) == r.phi);
  }
}

TEST_CASE("symmetry-reduced and full enumerations agree for N = 6 and N = 8") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const NetworkInstance six = instance_with(3, 1, 40 + seed);
    CHECK(exhaustive_noma(six, kParams).phi == oracle::full_permutation_search(six).phi);
  }
  const NetworkInstance eight = instance_with(2, 2, 99);
  CHECK(exhaustive_noma(eight, kParams).phi == oracle::full_permutation_search(eight).phi);
}

TEST_CASE("fig3 scale: hill climbing never beats the exhaustive optimum") {
  const NetworkInstance inst = instance_with(5, 1, 2020);
  const SolverResult best = exhaustive_noma(inst, kParams);
  Rng rng = make_rng(1);
  const double climbed = oracle::hill_climb(inst, 20, rng);
  CHECK(climbed <= best.phi + 1e-9);
  CHECK(climbed >= 0.9 * best.phi);
}

TEST_CASE("ties resolve to the lexicographically smallest canonical permutation") {
  NetworkInstance inst = instance_with(2, 1, 1);
  inst.ue_positions.clear();
  inst.csi = CsiMatrix(2, 4);  // all surrogates: every candidate scores 0
  const SolverResult r = exhaustive_noma(inst, kParams);
  CHECK(r.phi == 0.0);
  CHECK(r.assignment.permutation() == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(exhaustive_noma(inst, kParams).assignment == r.assignment);
}

TEST_CASE("budget guard names the refused count") {
  const NetworkInstance inst = instance_with(4, 2, 1);  // N = 16
  try {
    exhaustive_noma(inst, kParams);
    FAIL("expected the budget guard");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find(std::to_string(exhaustive_candidate_count(16))) != std::string::npos);
  }
  const NetworkInstance ten = instance_with(5, 1, 1);
  CHECK_THROWS_AS(exhaustive_noma(ten, kParams, 1000), UsageError);
}

TEST_CASE("random heuristic") {
  const NetworkInstance inst = instance_with(2, 1, 12);
  Rng a = make_rng(5), b = make_rng(5);
  CHECK(random_heuristic(inst, kParams, a).phi == random_heuristic(inst, kParams, b).phi);

  const double best = exhaustive_noma(inst, kParams).phi;
  Rng rng = make_rng(6);
  std::vector<double> draws;
  for (int i = 0; i < 10000; ++i) {
    const SolverResult r = random_heuristic(inst, kParams, rng);
    CHECK(r.phi <= best);
    draws.push_back(r.phi);
  }
  CHECK(mean(draws) < best);
}

TEST_CASE("random permutations are uniform over S_3") {
  Rng rng = make_rng(8);
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[random_permutation(3, rng)];
  REQUIRE(counts.size() == 6);
  for (const auto& [u, c] : counts) CHECK(std::abs(c - draws / 6) < 5 * std::sqrt(draws / 6.0));
}

TEST_CASE("Hungarian solver against brute force on random matrices") {
  Rng rng = make_rng(4);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 7);
    std::vector<double> w(n * n);
    for (double& x : w) x = uniform(rng, -5.0, 5.0);
    const std::vector<std::size_t> cols = solve_assignment_max(w, n);
    double got = 0.0;
    for (std::size_t r = 0; r < n; ++r) got += w[r * n + cols[r]];
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = -INFINITY;
    do {
      double total = 0.0;
      for (std::size_t r = 0; r < n; ++r) total += w[r * n + perm[r]];
      best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("optimal OMA") {
  SUBCASE("K = 1 has no choice") {
    const NetworkInstance inst = instance_with(1, 2, 3);
    double expected = 0.0;
    for (std::size_t n = 0; n < 4; ++n) expected += oma_rate(inst.csi(0, n), kParams);
    CHECK(optimal_oma(inst, kParams).phi == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("diagonal-dominant 2 x 2 sends each UE to its best base station") {
    // Two single-seat base stations are modelled as K = 2 with one seat each by
    // solving the assignment directly.
    const std::vector<double> w = {oma_rate(1e-5, kParams), oma_rate(1e-9, kParams),
                                   oma_rate(1e-9, kParams), oma_rate(1e-5, kParams)};
    CHECK(solve_assignment_max(w, 2) == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("K = 2, B = 2 matches brute-force seat enumeration") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const NetworkInstance inst = instance_with(2, 2, 300 + seed);
      const SolverResult r = optimal_oma(inst, kParams);
      CHECK(r.phi == doctest::Approx(oracle::brute_force_oma(inst)).epsilon(1e-12));
      // Witness: each BS serves exactly 2B UEs.
      for (std::size_t k = 0; k < 2; ++k) CHECK(r.assignment.slot(k, 0).sic != r.assignment.slot(k, 1).sic);
    }
  }
}

TEST_CASE("exhaustive dominates every other solver") {
  Rng rng = make_rng(21);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkInstance inst = instance_with(3, 1, 700 + seed);
    const double best = exhaustive_noma(inst, kParams).phi;
    CHECK(random_heuristic(inst, kParams, rng).phi <= best);
  }
}
