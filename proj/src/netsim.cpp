#include "noma/netsim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "noma/digest.hpp"
#include "noma/error.hpp"

namespace noma {

using nlohmann::json;

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void NetworkConfig::validate() const {
  if (bs_positions.empty()) throw UsageError("network needs at least one base station");
  if (prbs_per_bs == 0) throw UsageError("prbs_per_bs must be >= 1");
  if (!(area_half_width > 0.0)) throw UsageError("area_half_width must be > 0");
  if (!(pathloss_exponent > 0.0)) throw UsageError("pathloss_exponent must be > 0");
  if (!(tx_power > 0.0)) throw UsageError("tx_power must be > 0");
  if (!(noise_variance > 0.0)) throw UsageError("noise_variance must be > 0");
  if (active_ues > ue_count())
    throw UsageError("active_ues = " + std::to_string(active_ues) + " exceeds 2BK = " +
                     std::to_string(ue_count()));
  for (std::size_t k = 0; k < bs_positions.size(); ++k) {
    const Point p = bs_positions[k];
    if (std::abs(p.x) > area_half_width || std::abs(p.y) > area_half_width)
      throw UsageError("base station " + std::to_string(k) + " lies outside the area");
  }
}

std::string NetworkConfig::hash() const {
  std::ostringstream s;
  s << "B=" << prbs_per_bs << ";w=" << format_double(area_half_width)
    << ";beta=" << format_double(pathloss_exponent) << ";P=" << format_double(tx_power)
    << ";s2=" << format_double(noise_variance) << ";active=" << real_ue_count() << ";bs=";
  for (const Point& p : bs_positions) s << format_double(p.x) << ',' << format_double(p.y) << ';';
  return fnv1a_hex(s.str());
}

CsiMatrix::CsiMatrix(std::size_t bs_count, std::size_t ue_count)
    : bs_count_(bs_count), ue_count_(ue_count), gains_(bs_count * ue_count, 0.0) {}

std::vector<double> CsiMatrix::column(std::size_t n) const {
  std::vector<double> out(bs_count_);
  for (std::size_t k = 0; k < bs_count_; ++k) out[k] = (*this)(k, n);
  return out;
}

void CsiMatrix::pad_to(std::size_t ue_count) {
  if (ue_count < ue_count_)
    throw UsageError("cannot pad CSI matrix from " + std::to_string(ue_count_) + " down to " +
                     std::to_string(ue_count) + " UEs");
  std::vector<double> grown(bs_count_ * ue_count, 0.0);
  for (std::size_t k = 0; k < bs_count_; ++k)
    for (std::size_t n = 0; n < ue_count_; ++n) grown[k * ue_count + n] = (*this)(k, n);
  gains_ = std::move(grown);
  ue_count_ = ue_count;
}

double channel_gain(double distance_m, double pathloss_exponent, double fading) {
  if (fading == 0.0) return 0.0;
  return std::pow(distance_m, -pathloss_exponent) * fading;
}

NetworkInstance sample_instance(const NetworkConfig& config, Rng& rng) {
  config.validate();
  const std::size_t real = config.real_ue_count();
  const double w = config.area_half_width;

  NetworkInstance inst;
  inst.config = config;
  inst.ue_positions.reserve(real);
  for (std::size_t n = 0; n < real; ++n) {
    Point p;
    bool on_bs = true;
    while (on_bs) {
      p = {uniform(rng, -w, w), uniform(rng, -w, w)};
      on_bs = false;
      for (const Point& bs : config.bs_positions) on_bs = on_bs || distance(p, bs) == 0.0;
    }
    inst.ue_positions.push_back(p);
  }

  inst.csi = CsiMatrix(config.bs_count(), real);
  for (std::size_t k = 0; k < config.bs_count(); ++k)
    for (std::size_t n = 0; n < real; ++n)
      inst.csi(k, n) = channel_gain(distance(config.bs_positions[k], inst.ue_positions[n]),
                                    config.pathloss_exponent, exponential_unit(rng));
  return pad_with_surrogates(std::move(inst), config.ue_count());
}

NetworkInstance pad_with_surrogates(NetworkInstance instance, std::size_t target_ues) {
  if (target_ues < instance.csi.ue_count())
    throw UsageError("instance already has " + std::to_string(instance.csi.ue_count()) +
                     " UEs, cannot pad to " + std::to_string(target_ues));
  instance.csi.pad_to(target_ues);
  return instance;
}

namespace {

json points_to_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from_json(const json& arr) {
  std::vector<Point> pts;
  for (const json& p : arr) {
    if (!p.is_array() || p.size() != 2) throw DataError("point must be a [x, y] pair");
    pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  }
  return pts;
}

}  // namespace

std::string instance_to_json_line(const NetworkInstance& inst) {
  const NetworkConfig& c = inst.config;
  json csi = json::array();
  for (std::size_t k = 0; k < inst.csi.bs_count(); ++k) {
    auto row = inst.csi.row(k);
    csi.push_back(std::vector<double>(row.begin(), row.end()));
  }
  json j = {
      {"config_hash", c.hash()},
      {"prbs_per_bs", c.prbs_per_bs},
      {"area_half_width", c.area_half_width},
      {"bs_positions", points_to_json(c.bs_positions)},
      {"pathloss_exponent", c.pathloss_exponent},
      {"tx_power", c.tx_power},
      {"noise_variance", c.noise_variance},
      {"active_ues", c.real_ue_count()},
      {"seed", c.seed},
      {"ue_positions", points_to_json(inst.ue_positions)},
      {"csi", csi},
  };
  return j.dump();
}

NetworkInstance instance_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  try {
    NetworkInstance inst;
    NetworkConfig& c = inst.config;
    c.prbs_per_bs = j.at("prbs_per_bs").get<std::size_t>();
    c.area_half_width = j.at("area_half_width").get<double>();
    c.bs_positions = points_from_json(j.at("bs_positions"));
    c.pathloss_exponent = j.at("pathloss_exponent").get<double>();
    c.tx_power = j.at("tx_power").get<double>();
    c.noise_variance = j.at("noise_variance").get<double>();
    c.active_ues = j.at("active_ues").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    try {
      c.validate();
    } catch (const UsageError& e) {
      throw DataError(e.what());
    }
    if (c.active_ues == c.ue_count()) c.active_ues = 0;
    if (j.at("config_hash").get<std::string>() != c.hash())
      throw DataError("config_hash does not match the record's parameters");

    inst.ue_positions = points_from_json(j.at("ue_positions"));
    if (inst.ue_positions.size() != c.real_ue_count())
      throw DataError("expected " + std::to_string(c.real_ue_count()) + " UE positions, got " +
                      std::to_string(inst.ue_positions.size()));

    const json& rows = j.at("csi");
    if (!rows.is_array() || rows.size() != c.bs_count())
      throw DataError("csi must have one row per base station");
    inst.csi = CsiMatrix(c.bs_count(), c.ue_count());
    for (std::size_t k = 0; k < c.bs_count(); ++k) {
      const json& row = rows[k];
      if (!row.is_array() || row.size() != c.ue_count())
        throw DataError("csi row " + std::to_string(k) + " must have " +
                        std::to_string(c.ue_count()) + " entries");
      for (std::size_t n = 0; n < c.ue_count(); ++n) {
        const double g = row[n].get<double>();
        if (!(g >= 0.0) || !std::isfinite(g))
          throw DataError("csi entry (" + std::to_string(k) + ", " + std::to_string(n) +
                          ") must be finite and >= 0");
        if (g != 0.0 && inst.is_surrogate(n))
          throw DataError("surrogate UE " + std::to_string(n) + " has nonzero CSI");
        inst.csi(k, n) = g;
      }
    }
    return inst;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad record field: ") + e.what());
  }
}

void save_dataset(std::span<const NetworkInstance> instances, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const NetworkInstance& inst : instances) out << instance_to_json_line(inst) << '\n';
  if (!out) throw DataError("write to " + path.string() + " failed");
}

std::vector<NetworkInstance> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::vector<NetworkInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(instance_from_json_line(line));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": record " +
                      std::to_string(out.size()) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace noma
