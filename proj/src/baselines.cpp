#include "noma/baselines.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "noma/error.hpp"

namespace noma {

std::uint64_t exhaustive_candidate_count(std::size_t ue_count) {
  std::uint64_t count = 1;
  std::size_t halvings = ue_count / 2;
  for (std::size_t i = 2; i <= ue_count; ++i) {
    if (count > UINT64_MAX / i) return UINT64_MAX;
    count *= i;
    while (halvings > 0 && count % 2 == 0) {
      count /= 2;
      --halvings;
    }
  }
  return count;
}

namespace {

class PairEnumerator {
public:
  PairEnumerator(const NetworkInstance& inst, const RadioParams& params)
      : inst_(inst),
        n_(inst.csi.ue_count()),
        prbs_(inst.config.prbs_per_bs),
        slots_(n_ / 2),
        used_(n_, false),
        chosen_(n_),
        best_u_(n_) {
    // Optimal pair rate of every unordered pair at every base station.
    const std::size_t k_count = inst.csi.bs_count();
    table_.assign(k_count * n_ * n_, 0.0);
    for (std::size_t k = 0; k < k_count; ++k)
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i + 1; j < n_; ++j) {
          const bool i_sic = inst.csi(k, i) >= inst.csi(k, j);
          const std::size_t sic = i_sic ? i : j;
          const std::size_t nonsic = i_sic ? j : i;
          table_[(k * n_ + i) * n_ + j] = pair_rate(nonsic, sic, k, inst.csi, params).pair_rate_sum;
        }
  }

  SolverResult run() {
    recurse(0, 0.0);
    return {Assignment::from_permutation(best_u_, inst_.csi.bs_count(), prbs_), best_phi_};
  }

private:
  void recurse(std::size_t slot, double partial) {
    if (slot == slots_) {
      consider(partial);
      return;
    }
    const std::size_t k = slot / prbs_;
    // The smallest free UE need not open the slot: slots are distinguishable,
    // only the order inside a pair is redundant.
    for (std::size_t i = 0; i < n_; ++i) {
      if (used_[i]) continue;
      used_[i] = true;
      for (std::size_t j = i + 1; j < n_; ++j) {
        if (used_[j]) continue;
        used_[j] = true;
        chosen_[2 * slot] = i;
        chosen_[2 * slot + 1] = j;
        recurse(slot + 1, partial + table_[(k * n_ + i) * n_ + j]);
        used_[j] = false;
      }
      used_[i] = false;
    }
  }

  void consider(double phi) {
    if (phi < best_phi_) return;
    std::vector<std::size_t> u = canonical(chosen_);
    if (phi > best_phi_ || u < best_u_) {
      best_phi_ = phi;
      best_u_ = std::move(u);
    }
  }

  std::vector<std::size_t> canonical(const std::vector<std::size_t>& raw) const {
    std::vector<std::size_t> u = raw;
    for (std::size_t s = 0; s < slots_; ++s) {
      const std::size_t k = s / prbs_;
      const std::size_t a = u[2 * s];
      const std::size_t b = u[2 * s + 1];
      const double ga = inst_.csi(k, a);
      const double gb = inst_.csi(k, b);
      if (gb > ga || (gb == ga && b < a)) std::swap(u[2 * s], u[2 * s + 1]);
    }
    return u;
  }

  const NetworkInstance& inst_;
  std::size_t n_;
  std::size_t prbs_;
  std::size_t slots_;
  std::vector<double> table_;
  std::vector<bool> used_;
  std::vector<std::size_t> chosen_;
  std::vector<std::size_t> best_u_;
  double best_phi_ = -std::numeric_limits<double>::infinity();
};

}  // namespace

SolverResult exhaustive_noma(const NetworkInstance& instance, const RadioParams& params,
                             std::uint64_t budget) {
  const std::size_t n = instance.csi.ue_count();
  const std::uint64_t candidates = exhaustive_candidate_count(n);
  if (candidates > budget)
    throw UsageError("exhaustive search refused: " + std::to_string(candidates) +
                     " candidates exceed the budget of " + std::to_string(budget));
  return PairEnumerator(instance, params).run();
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> u(n);
  std::iota(u.begin(), u.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(u[i - 1], u[uniform_index(rng, i)]);
  return u;
}

SolverResult random_heuristic(const NetworkInstance& instance, const RadioParams& params, Rng& rng) {
  const Assignment a = canonicalize(
      Assignment::from_permutation(random_permutation(instance.csi.ue_count(), rng),
                                   instance.csi.bs_count(), instance.config.prbs_per_bs),
      instance.csi);
  return {a, aggregate_rate(a, instance, params)};
}

std::vector<std::size_t> solve_assignment_max(std::span<const double> weights, std::size_t n) {
  if (weights.size() != n * n) throw UsageError("assignment weights must be n x n");
  // Shortest augmenting path with potentials (Hungarian method), 1-based
  // internally; minimizes the negated weights.
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> row_pot(n + 1, 0.0), col_pot(n + 1, 0.0), min_slack(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<bool> used(n + 1);
  auto cost = [&](std::size_t r, std::size_t c) { return -weights[(r - 1) * n + (c - 1)]; };

  for (std::size_t r = 1; r <= n; ++r) {
    match[0] = r;
    std::size_t col = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[col] = true;
      const std::size_t row = match[col];
      double delta = inf;
      std::size_t next = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double slack = cost(row, c) - row_pot[row] - col_pot[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = col;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          next = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          row_pot[match[c]] += delta;
          col_pot[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col = next;
    } while (match[col] != 0);
    do {
      const std::size_t prev = way[col];
      match[col] = match[prev];
      col = prev;
    } while (col != 0);
  }

  std::vector<std::size_t> assigned(n);
  for (std::size_t c = 1; c <= n; ++c) assigned[match[c] - 1] = c - 1;
  return assigned;
}

SolverResult optimal_oma(const NetworkInstance& instance, const RadioParams& params) {
  const CsiMatrix& csi = instance.csi;
  const std::size_t n = csi.ue_count();
  const std::size_t per_bs = 2 * instance.config.prbs_per_bs;
  // Column c is seat c % per_bs of base station c / per_bs.
  std::vector<double> w(n * n);
  for (std::size_t ue = 0; ue < n; ++ue)
    for (std::size_t c = 0; c < n; ++c) w[ue * n + c] = oma_rate(csi(c / per_bs, ue), params);

  const std::vector<std::size_t> seat = solve_assignment_max(w, n);
  std::vector<std::size_t> u(n);
  double phi = 0.0;
  for (std::size_t ue = 0; ue < n; ++ue) {
    u[seat[ue]] = ue;
    phi += w[ue * n + seat[ue]];
  }
  const Assignment a = canonicalize(
      Assignment::from_permutation(std::move(u), csi.bs_count(), instance.config.prbs_per_bs), csi);
  return {a, phi};
}

}  // namespace noma
