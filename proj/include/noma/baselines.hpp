#pragma once

#include <cstdint>
#include <optional>

#include "noma/assignment.hpp"
#include "noma/netsim.hpp"
#include "noma/random.hpp"
#include "noma/rates.hpp"

namespace noma {

struct SolverResult {
  Assignment assignment;  // canonical
  double phi = 0.0;       // aggregate rate, bits/s/Hz
};

// N! / 2^(N/2) for N = 2BK: the number of distinct slot fillings once the order
// inside each pair is ignored. Saturates at UINT64_MAX.
std::uint64_t exhaustive_candidate_count(std::size_t ue_count);

// 12! / 2^6, i.e. the default guard admits N <= 12.
inline constexpr std::uint64_t kDefaultExhaustiveBudget = 7'484'400;

// Maximizes Phi over every assignment by enumerating unordered pairs per slot.
// Among equal-Phi maximizers the lexicographically smallest canonical u wins.
// Throws UsageError naming the candidate count when it exceeds `budget`.
SolverResult exhaustive_noma(const NetworkInstance& instance, const RadioParams& params,
                             std::uint64_t budget = kDefaultExhaustiveBudget);

// Uniformly random permutation, canonicalized and scored.
SolverResult random_heuristic(const NetworkInstance& instance, const RadioParams& params, Rng& rng);

// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

// Best OMA association: every UE gets 1/2 log2(1 + eta h^2) at its base
// station and each base station serves exactly 2B UEs. Solved exactly as a
// balanced assignment problem. `assignment` is a witness of the association
// (pairing within a base station is arbitrary); `phi` is the OMA sum rate.
SolverResult optimal_oma(const NetworkInstance& instance, const RadioParams& params);

// Maximum-weight perfect matching on a square row-major matrix; returns the
// column assigned to each row.
std::vector<std::size_t> solve_assignment_max(std::span<const double> weights, std::size_t n);

}  // namespace noma
