#pragma once

#include <cstddef>

#include "noma/netsim.hpp"

namespace noma {

// All rates are spectral efficiencies in bits/s/Hz.
class RadioParams {
public:
  RadioParams(double tx_power, double noise_variance);
  static RadioParams from(const NetworkConfig& config) {
    return {config.tx_power, config.noise_variance};
  }

  double tx_power() const { return tx_power_; }
  double noise_variance() const { return noise_variance_; }
  double snr() const { return snr_; }  // eta = P / sigma^2

private:
  double tx_power_;
  double noise_variance_;
  double snr_;
};

struct PairRateResult {
  double alpha_star = 1.0;  // power fraction of the SIC user
  double rate_sic = 0.0;
  double rate_nonsic = 0.0;
  double pair_rate_sum = 0.0;
};

// 1/2 log2(1 + eta h^2); the half is OMA's multiplexing loss.
double oma_rate(double gain, const RadioParams& params);

// gamma_n: UE n's worst OMA rate over all base stations.
double min_rate_threshold(std::size_t n, const CsiMatrix& csi, const RadioParams& params);

// Base station attaining gamma_n (smallest gain; ties to the smallest index).
std::size_t worst_bs(std::size_t n, const CsiMatrix& csi);

// Rate of the non-SIC user, which treats the SIC user's share alpha as interference.
double nonsic_rate(double gain, double alpha, const RadioParams& params);
// Rate of the SIC user after cancelling the non-SIC user's signal.
double sic_rate(double gain, double alpha, const RadioParams& params);

// Largest alpha that still gives the non-SIC UE m its threshold gamma_m at
// base station k. The sum rate is nondecreasing in alpha, so this is the
// optimum. Requires h2[k][n] >= h2[k][m]; throws ConstraintViolation otherwise.
// A zero-gain non-SIC partner gets alpha = 1 (the limit as the gain -> 0).
double optimal_alpha(std::size_t nonsic_ue, std::size_t sic_ue, std::size_t bs, const CsiMatrix& csi,
                     const RadioParams& params);

PairRateResult pair_rate(std::size_t nonsic_ue, std::size_t sic_ue, std::size_t bs, const CsiMatrix& csi,
                         const RadioParams& params);

}  // namespace noma
