#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "noma/random.hpp"

namespace noma {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

// Geometry and radio parameters of a multicell network. UEs are indexed
// 0..ue_count()-1 and base stations 0..bs_count()-1 throughout the library.
struct NetworkConfig {
  std::size_t prbs_per_bs = 1;       // B
  double area_half_width = 50.0;     // UEs live in [-w, w]^2, meters
  std::vector<Point> bs_positions;   // K entries
  double pathloss_exponent = 4.0;    // beta
  double tx_power = 1.0;             // P, watts
  double noise_variance = 4e-9;      // sigma^2, watts
  std::size_t active_ues = 0;        // real UEs sampled; 0 means all 2BK slots are real
  std::uint64_t seed = 1;

  std::size_t bs_count() const { return bs_positions.size(); }
  // N = 2BK; shortfalls are padded with zero-CSI surrogates.
  std::size_t ue_count() const { return 2 * prbs_per_bs * bs_count(); }
  std::size_t real_ue_count() const { return active_ues == 0 ? ue_count() : active_ues; }

  // Throws UsageError describing the first violated invariant.
  void validate() const;
  // Stable 16-hex-digit digest over every field except the seed.
  std::string hash() const;
};

// Row-major K x N matrix of linear power gains |h_{k,n}|^2. Column n is UE n's CSI vector.
class CsiMatrix {
public:
  CsiMatrix() = default;
  CsiMatrix(std::size_t bs_count, std::size_t ue_count);

  std::size_t bs_count() const { return bs_count_; }
  std::size_t ue_count() const { return ue_count_; }

  double operator()(std::size_t k, std::size_t n) const { return gains_[k * ue_count_ + n]; }
  double& operator()(std::size_t k, std::size_t n) { return gains_[k * ue_count_ + n]; }

  std::vector<double> column(std::size_t n) const;
  std::span<const double> row(std::size_t k) const {
    return {gains_.data() + k * ue_count_, ue_count_};
  }
  std::span<const double> data() const { return gains_; }

  // Appends zero columns until there are `ue_count` UEs.
  void pad_to(std::size_t ue_count);

  friend bool operator==(const CsiMatrix&, const CsiMatrix&) = default;

private:
  std::size_t bs_count_ = 0;
  std::size_t ue_count_ = 0;
  std::vector<double> gains_;
};

struct NetworkInstance {
  NetworkConfig config;
  std::vector<Point> ue_positions;  // real UEs only; surrogates carry no position
  CsiMatrix csi;

  std::size_t real_ue_count() const { return ue_positions.size(); }
  bool is_surrogate(std::size_t n) const { return n >= ue_positions.size(); }
};

// |h|^2 = l^-beta * fading.
double channel_gain(double distance_m, double pathloss_exponent, double fading);

// Draw order: every UE position (x then y), then the CSI fading K-major. A UE
// landing exactly on a base station is redrawn.
NetworkInstance sample_instance(const NetworkConfig& config, Rng& rng);

// Appends surrogate UEs with all-zero CSI so the instance has `target_ues` UEs.
NetworkInstance pad_with_surrogates(NetworkInstance instance, std::size_t target_ues);

// NDJSON, one instance per line.
void save_dataset(std::span<const NetworkInstance> instances, const std::filesystem::path& path);
std::vector<NetworkInstance> load_dataset(const std::filesystem::path& path);

std::string instance_to_json_line(const NetworkInstance& instance);
NetworkInstance instance_from_json_line(const std::string& line);

}  // namespace noma
