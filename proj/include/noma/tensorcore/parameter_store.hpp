#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "noma/random.hpp"

namespace noma::tensor {

// Location of one named array inside the flat parameter vector. Matrices are
// row-major; vectors have cols == 1.
struct ParamRef {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const { return rows * cols; }

  friend bool operator==(const ParamRef&, const ParamRef&) = default;
};

// Named, shaped arrays laid out back to back in one contiguous vector. The
// flat view and the named views alias the same storage.
class ParameterStore {
public:
  struct Entry {
    std::string name;
    ParamRef ref;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  // Throws UsageError on a duplicate name.
  ParamRef add(std::string name, std::size_t rows, std::size_t cols = 1);

  ParamRef ref(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::span<double> view(ParamRef r) { return {values_.data() + r.offset, r.size()}; }
  std::span<const double> view(ParamRef r) const { return {values_.data() + r.offset, r.size()}; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::size_t size() const { return values_.size(); }

  const std::vector<Entry>& entries() const { return entries_; }
  // Name of the array holding flat index i, with the element position.
  std::string describe_index(std::size_t i) const;

  // Every entry uniform in [-scale, scale], drawn in entry order.
  void init_uniform(double scale, Rng& rng);

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

private:
  std::vector<Entry> entries_;
  std::vector<double> values_;
};

}  // namespace noma::tensor
