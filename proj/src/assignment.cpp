#include "noma/assignment.hpp"

#include <sstream>

#include "noma/digest.hpp"
#include "noma/error.hpp"

namespace noma {

Assignment Assignment::from_permutation(std::vector<std::size_t> u, std::size_t bs_count,
                                        std::size_t prbs_per_bs) {
  const std::size_t n = 2 * bs_count * prbs_per_bs;
  if (u.size() != n)
    throw ConstraintViolation("permutation has length " + std::to_string(u.size()) + ", expected " +
                              std::to_string(n));
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (u[i] >= n)
      throw ConstraintViolation("UE index " + std::to_string(u[i]) + " at position " +
                                std::to_string(i) + " is out of range");
    if (seen[u[i]])
      throw ConstraintViolation("UE " + std::to_string(u[i]) + " appears more than once");
    seen[u[i]] = true;
  }
  return Assignment(std::move(u), bs_count, prbs_per_bs);
}

SlotPair Assignment::slot(std::size_t bs, std::size_t prb) const {
  return slot(slot_index(bs, prb, prbs_per_bs_));
}

std::vector<unsigned char> Assignment::binary_matrix() const {
  const std::size_t n_ue = ue_count();
  std::vector<unsigned char> x(bs_count_ * n_ue * prbs_per_bs_ * 2, 0);
  for (std::size_t pos = 0; pos < n_ue; ++pos) {
    const std::size_t s = pos / 2;
    const std::size_t k = s / prbs_per_bs_;
    const std::size_t b = s % prbs_per_bs_;
    const std::size_t p = pos % 2;
    x[((k * n_ue + u_[pos]) * prbs_per_bs_ + b) * 2 + p] = 1;
  }
  return x;
}

Assignment Assignment::from_binary_matrix(std::span<const unsigned char> x, std::size_t bs_count,
                                          std::size_t prbs_per_bs, std::size_t ue_count) {
  if (x.size() != bs_count * ue_count * prbs_per_bs * 2)
    throw ConstraintViolation("binary matrix has the wrong size");
  std::vector<std::size_t> u(ue_count, ue_count);
  for (std::size_t k = 0; k < bs_count; ++k)
    for (std::size_t b = 0; b < prbs_per_bs; ++b)
      for (std::size_t p = 0; p < 2; ++p) {
        std::size_t count = 0;
        for (std::size_t n = 0; n < ue_count; ++n) {
          const unsigned char v = x[((k * ue_count + n) * prbs_per_bs + b) * 2 + p];
          if (v > 1) throw ConstraintViolation("binary matrix entry is not 0/1");
          if (v == 1) {
            ++count;
            u[2 * slot_index(k, b, prbs_per_bs) + p] = n;
          }
        }
        if (count != 1)
          throw ConstraintViolation("slot (" + std::to_string(k) + ", " + std::to_string(b) + ", " +
                                    std::to_string(p) + ") holds " + std::to_string(count) + " UEs");
      }
  return from_permutation(std::move(u), bs_count, prbs_per_bs);
}

namespace {

// Whether `first` belongs in the SIC slot ahead of `second` at base station k.
bool sic_first(std::size_t first, std::size_t second, std::size_t k, const CsiMatrix& csi) {
  const double g1 = csi(k, first);
  const double g2 = csi(k, second);
  return g1 > g2 || (g1 == g2 && first < second);
}

}  // namespace

Assignment canonicalize(const Assignment& a, const CsiMatrix& csi) {
  std::vector<std::size_t> u = a.permutation();
  for (std::size_t s = 0; s < a.slot_count(); ++s)
    if (!sic_first(u[2 * s], u[2 * s + 1], a.bs_of_slot(s), csi)) std::swap(u[2 * s], u[2 * s + 1]);
  return Assignment::from_permutation(std::move(u), a.bs_count(), a.prbs_per_bs());
}

bool check_sic_constraint(const Assignment& a, const CsiMatrix& csi) {
  for (std::size_t s = 0; s < a.slot_count(); ++s) {
    const SlotPair p = a.slot(s);
    const std::size_t k = a.bs_of_slot(s);
    if (csi(k, p.sic) < csi(k, p.nonsic)) return false;
  }
  return true;
}

bool is_canonical(const Assignment& a, const CsiMatrix& csi) {
  for (std::size_t s = 0; s < a.slot_count(); ++s) {
    const SlotPair p = a.slot(s);
    if (!sic_first(p.sic, p.nonsic, a.bs_of_slot(s), csi)) return false;
  }
  return true;
}

double aggregate_rate(const Assignment& a, const NetworkInstance& instance, const RadioParams& params) {
  if (!is_canonical(a, instance.csi))
    throw ConstraintViolation("aggregate_rate needs a canonical assignment; call canonicalize first");
  double phi = 0.0;
  for (std::size_t s = 0; s < a.slot_count(); ++s) {
    const SlotPair p = a.slot(s);
    phi += pair_rate(p.nonsic, p.sic, a.bs_of_slot(s), instance.csi, params).pair_rate_sum;
  }
  return phi;
}

std::string dump_assignment(const Assignment& a, const NetworkInstance& instance,
                            const RadioParams& params) {
  std::ostringstream out;
  for (std::size_t s = 0; s < a.slot_count(); ++s) {
    const SlotPair p = a.slot(s);
    const std::size_t k = a.bs_of_slot(s);
    const PairRateResult r = pair_rate(p.nonsic, p.sic, k, instance.csi, params);
    out << k << ',' << s % a.prbs_per_bs() << " -> sic=" << p.sic << " nonsic=" << p.nonsic
        << " alpha=" << format_double(r.alpha_star) << " rate_sic=" << format_double(r.rate_sic)
        << " rate_nonsic=" << format_double(r.rate_nonsic) << '\n';
  }
  return out.str();
}

}  // namespace noma
