#include "noma/tensorcore/parameter_store.hpp"

#include "noma/error.hpp"

namespace noma::tensor {

ParamRef ParameterStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw UsageError("duplicate parameter name '" + name + "'");
  ParamRef r{values_.size(), rows, cols};
  values_.resize(values_.size() + r.size(), 0.0);
  entries_.push_back({std::move(name), r});
  return r;
}

bool ParameterStore::contains(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return true;
  return false;
}

ParamRef ParameterStore::ref(const std::string& name) const {
  for (const Entry& e : entries_)
    if (e.name == name) return e.ref;
  throw UsageError("no parameter named '" + name + "'");
}

std::string ParameterStore::describe_index(std::size_t i) const {
  for (const Entry& e : entries_) {
    if (i >= e.ref.offset && i < e.ref.offset + e.ref.size()) {
      const std::size_t local = i - e.ref.offset;
      return e.name + "[" + std::to_string(local / e.ref.cols) + "," +
             std::to_string(local % e.ref.cols) + "]";
    }
  }
  return "<index " + std::to_string(i) + ">";
}

void ParameterStore::init_uniform(double scale, Rng& rng) {
  for (double& v : values_) v = uniform(rng, -scale, scale);
}

}  // namespace noma::tensor
