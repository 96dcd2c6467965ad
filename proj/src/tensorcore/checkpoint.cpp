#include "noma/tensorcore/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "noma/error.hpp"

namespace noma::tensor {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "noma-checkpoint-v1";
}

const NamedArray& Checkpoint::array(const std::string& name) const {
  for (const NamedArray& a : arrays)
    if (a.name == name) return a;
  throw DataError("checkpoint has no array named '" + name + "'");
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const NamedArray& a : arrays)
    if (a.name == name) return true;
  return false;
}

std::vector<NamedArray> arrays_from_store(const ParameterStore& store, const std::string& prefix) {
  std::vector<NamedArray> out;
  for (const auto& e : store.entries()) {
    auto v = store.view(e.ref);
    out.push_back({prefix + e.name, e.ref.rows, e.ref.cols, {v.begin(), v.end()}});
  }
  return out;
}

void load_into_store(const Checkpoint& ckpt, ParameterStore& store, const std::string& prefix) {
  for (const auto& e : store.entries()) {
    const NamedArray& a = ckpt.array(prefix + e.name);
    if (a.rows != e.ref.rows || a.cols != e.ref.cols || a.values.size() != e.ref.size())
      throw DataError("checkpoint array '" + a.name + "' has shape " + std::to_string(a.rows) + "x" +
                      std::to_string(a.cols) + ", expected " + std::to_string(e.ref.rows) + "x" +
                      std::to_string(e.ref.cols));
    auto dst = store.view(e.ref);
    std::copy(a.values.begin(), a.values.end(), dst.begin());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  json arrays = json::array();
  for (const NamedArray& a : ckpt.arrays)
    arrays.push_back({{"name", a.name}, {"rows", a.rows}, {"cols", a.cols}, {"values", a.values}});
  const json doc = {{"format", kFormat},
                    {"config_hash", ckpt.config_hash},
                    {"metadata", ckpt.metadata},
                    {"arrays", arrays}};

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out << doc.dump() << '\n';
    if (!out) throw DataError("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    const json doc = json::parse(buf.str());
    if (doc.at("format").get<std::string>() != kFormat)
      throw DataError(path.string() + ": unknown checkpoint format");
    Checkpoint ckpt;
    ckpt.config_hash = doc.at("config_hash").get<std::string>();
    ckpt.metadata = doc.at("metadata");
    for (const json& a : doc.at("arrays")) {
      NamedArray arr{a.at("name").get<std::string>(), a.at("rows").get<std::size_t>(),
                     a.at("cols").get<std::size_t>(), a.at("values").get<std::vector<double>>()};
      if (arr.values.size() != arr.rows * arr.cols)
        throw DataError(path.string() + ": array '" + arr.name + "' size does not match its shape");
      ckpt.arrays.push_back(std::move(arr));
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint: " + e.what());
  }
}

}  // namespace noma::tensor
