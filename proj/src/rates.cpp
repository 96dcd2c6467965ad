#include "noma/rates.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "noma/error.hpp"

namespace noma {

RadioParams::RadioParams(double tx_power, double noise_variance)
    : tx_power_(tx_power), noise_variance_(noise_variance), snr_(tx_power / noise_variance) {
  if (!(tx_power > 0.0) || !(noise_variance > 0.0))
    throw UsageError("transmit power and noise variance must be positive");
}

double oma_rate(double gain, const RadioParams& params) {
  return 0.5 * std::log2(1.0 + params.snr() * gain);
}

std::size_t worst_bs(std::size_t n, const CsiMatrix& csi) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < csi.bs_count(); ++k)
    if (csi(k, n) < csi(best, n)) best = k;
  return best;
}

double min_rate_threshold(std::size_t n, const CsiMatrix& csi, const RadioParams& params) {
  return oma_rate(csi(worst_bs(n, csi), n), params);
}

double nonsic_rate(double gain, double alpha, const RadioParams& params) {
  const double signal = (1.0 - alpha) * gain * params.tx_power();
  const double interference = alpha * params.tx_power() * gain + params.noise_variance();
  return std::log2(1.0 + signal / interference);
}

double sic_rate(double gain, double alpha, const RadioParams& params) {
  return std::log2(1.0 + alpha * params.snr() * gain);
}

double optimal_alpha(std::size_t nonsic_ue, std::size_t sic_ue, std::size_t bs, const CsiMatrix& csi,
                     const RadioParams& params) {
  if (csi(bs, sic_ue) < csi(bs, nonsic_ue))
    throw ConstraintViolation("SIC user " + std::to_string(sic_ue) + " has a weaker channel than " +
                              "non-SIC user " + std::to_string(nonsic_ue) + " at base station " +
                              std::to_string(bs));
  const double a = csi(bs, nonsic_ue) * params.snr();
  if (a == 0.0) return 1.0;
  const double c = csi(worst_bs(nonsic_ue, csi), nonsic_ue) * params.snr();
  const double alpha = ((1.0 + a) / std::sqrt(1.0 + c) - 1.0) / a;
  // c <= a keeps alpha in [0, 1) analytically; clamp rounding residue only.
  return std::clamp(alpha, 0.0, 1.0);
}

PairRateResult pair_rate(std::size_t nonsic_ue, std::size_t sic_ue, std::size_t bs, const CsiMatrix& csi,
                         const RadioParams& params) {
  if (nonsic_ue == sic_ue)
    throw ConstraintViolation("UE " + std::to_string(sic_ue) + " cannot pair with itself");
  PairRateResult r;
  r.alpha_star = optimal_alpha(nonsic_ue, sic_ue, bs, csi, params);
  r.rate_sic = sic_rate(csi(bs, sic_ue), r.alpha_star, params);
  r.rate_nonsic = nonsic_rate(csi(bs, nonsic_ue), r.alpha_star, params);
  r.pair_rate_sum = r.rate_sic + r.rate_nonsic;
  return r;
}

}  // namespace noma
