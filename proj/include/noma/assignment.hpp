#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "noma/netsim.hpp"
#include "noma/rates.hpp"

namespace noma {

// Slot roles within one PRB.
enum class Role : std::size_t { Sic = 0, NonSic = 1 };

struct SlotPair {
  std::size_t sic = 0;
  std::size_t nonsic = 0;
};

// Joint pairing/association decision. The permutation u is the only state:
// positions 2s and 2s+1 hold the SIC and non-SIC UE of PRB slot s, where slot
// s = k * B + b (base station k, PRB b).
class Assignment {
public:
  // Throws ConstraintViolation on a wrong length, an out-of-range index, or a
  // repeated index.
  static Assignment from_permutation(std::vector<std::size_t> u, std::size_t bs_count,
                                     std::size_t prbs_per_bs);

  const std::vector<std::size_t>& permutation() const { return u_; }
  std::size_t bs_count() const { return bs_count_; }
  std::size_t prbs_per_bs() const { return prbs_per_bs_; }
  std::size_t slot_count() const { return bs_count_ * prbs_per_bs_; }
  std::size_t ue_count() const { return u_.size(); }

  static std::size_t slot_index(std::size_t bs, std::size_t prb, std::size_t prbs_per_bs) {
    return bs * prbs_per_bs + prb;
  }
  std::size_t bs_of_slot(std::size_t slot) const { return slot / prbs_per_bs_; }

  // M view: occupants of PRB `prb` at base station `bs`.
  SlotPair slot(std::size_t bs, std::size_t prb) const;
  SlotPair slot(std::size_t slot) const { return {u_[2 * slot], u_[2 * slot + 1]}; }

  // X view: x[k][n][b][p] flattened row-major over (K, N, B, 2).
  std::vector<unsigned char> binary_matrix() const;
  static Assignment from_binary_matrix(std::span<const unsigned char> x, std::size_t bs_count,
                                       std::size_t prbs_per_bs, std::size_t ue_count);

  friend bool operator==(const Assignment&, const Assignment&) = default;

private:
  Assignment(std::vector<std::size_t> u, std::size_t bs_count, std::size_t prbs_per_bs)
      : u_(std::move(u)), bs_count_(bs_count), prbs_per_bs_(prbs_per_bs) {}

  std::vector<std::size_t> u_;
  std::size_t bs_count_ = 0;
  std::size_t prbs_per_bs_ = 0;
};

// Puts the UE with the larger gain at the serving base station in the SIC slot
// of every pair; equal gains put the smaller index there.
Assignment canonicalize(const Assignment& a, const CsiMatrix& csi);

// True iff every SIC occupant's gain is >= its partner's at the serving BS.
bool check_sic_constraint(const Assignment& a, const CsiMatrix& csi);

// True iff the assignment equals its canonical form.
bool is_canonical(const Assignment& a, const CsiMatrix& csi);

// Phi: sum of optimal pair rates over all K*B PRBs, summed in slot order.
// Throws ConstraintViolation for a non-canonical assignment.
double aggregate_rate(const Assignment& a, const NetworkInstance& instance, const RadioParams& params);

// One line per PRB: "k,b -> sic=<n> nonsic=<m> alpha=<a> rate_sic=<r1> rate_nonsic=<r2>".
std::string dump_assignment(const Assignment& a, const NetworkInstance& instance,
                            const RadioParams& params);

}  // namespace noma
