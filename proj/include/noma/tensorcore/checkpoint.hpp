#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "noma/tensorcore/parameter_store.hpp"

namespace noma::tensor {

struct NamedArray {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::vector<double> values;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

// Named arrays plus free-form metadata, tagged with the hash of the config that
// produced them. Doubles are written in shortest round-trip form, so a
// save/load cycle is bit-exact.
struct Checkpoint {
  std::string config_hash;
  std::vector<NamedArray> arrays;
  nlohmann::json metadata = nlohmann::json::object();

  const NamedArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

std::vector<NamedArray> arrays_from_store(const ParameterStore& store, const std::string& prefix = "");
// Copies arrays named prefix + entry name into the store; shapes must match.
void load_into_store(const Checkpoint& ckpt, ParameterStore& store, const std::string& prefix = "");

// Writes atomically (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws DataError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace noma::tensor
