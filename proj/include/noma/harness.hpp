#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "noma/baselines.hpp"
#include "noma/netsim.hpp"
#include "noma/ptrnet.hpp"
#include "noma/reinforce.hpp"

namespace noma::harness {

// Built-in scenarios:
//   fig3      five base stations (centre and the four (+-25, +-25) m corners), B = 1, N = 10
//   fig4-2bs  base stations at (25, 25) and (-25, -25), B = 2, N = 8
//   fig4-4bs  the four corner base stations, B = 3, N = 24
//   scaled    fig4-2bs geometry with B = 1 (N = 4) and a desk-sized policy and schedule
std::vector<std::string> preset_names();
TrainConfig preset(std::string_view name);

// INI text with [network], [policy] and [train] sections. Omitted keys keep
// their defaults; unknown keys are rejected. policy.input_dim and
// policy.feature_snr are derived from the network.
TrainConfig parse_config(const std::string& text);
// Throws UsageError when the file does not exist, DataError when it is malformed.
TrainConfig load_config(const std::filesystem::path& path);
std::string to_ini(const TrainConfig& config);

// Samples `count` instances (seeded by config.seed) and writes them as NDJSON.
void generate_dataset(const NetworkConfig& config, std::size_t count, const std::filesystem::path& out);

struct CompareRow {
  std::size_t instance = 0;
  std::optional<double> phi_ptrnet;     // greedy decode; absent without a policy
  std::optional<double> phi_exhaustive; // absent when over budget
  double phi_random = 0.0;
  double phi_oma = 0.0;
  std::optional<double> gap_percent;    // needs both the policy and the optimum
};

struct CompareOptions {
  const PointerNetwork* policy = nullptr;
  std::uint64_t budget = kDefaultExhaustiveBudget;
  std::uint64_t seed = 1;  // random-heuristic stream; instance i uses make_rng(seed, i)
};

std::vector<CompareRow> compare(const std::vector<NetworkInstance>& instances, const CompareOptions& options);

inline constexpr const char* kCompareHeader =
    "instance,phi_ptrnet_greedy,phi_exhaustive,phi_random,phi_oma,gap_percent";
inline constexpr const char* kOracleHeader = "instance,phi_exhaustive,phi_random,phi_oma";
inline constexpr const char* kEvalHeader = "instance,phi_ptrnet_greedy";

// Per-instance rows followed by a "median" summary row. Unavailable cells read NA.
std::string compare_csv(const std::vector<CompareRow>& rows);
std::string oracle_csv(const std::vector<CompareRow>& rows);
std::string eval_csv(const std::vector<CompareRow>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

// Entry point of the `noma` tool: generate | train | eval | oracle | compare.
int run_cli(int argc, const char* const* argv);

}  // namespace noma::harness
