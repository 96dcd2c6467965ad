#include "noma/harness.hpp"

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "noma/assignment.hpp"
#include "noma/digest.hpp"
#include "noma/error.hpp"
#include "noma/stats.hpp"
#include "noma/tensorcore/checkpoint.hpp"

namespace noma::harness {

namespace pt = boost::property_tree;

namespace {

const Point kSites[] = {{0, 0}, {25, 25}, {25, -25}, {-25, 25}, {-25, -25}};

TrainConfig base_config(std::vector<Point> bs, std::size_t prbs) {
  TrainConfig c;
  c.network.bs_positions = std::move(bs);
  c.network.prbs_per_bs = prbs;
  c.network.area_half_width = 50.0;
  c.network.pathloss_exponent = 4.0;
  c.network.tx_power = 1.0;
  c.network.noise_variance = 4e-9;
  c.policy.input_dim = c.network.bs_count();
  c.policy.embed_dim = 128;
  c.policy.hidden_dim = 100;
  c.policy.feature_snr = c.network.tx_power / c.network.noise_variance;
  c.batch_size = 128;
  c.baseline_decay = 0.9;
  c.learning_rate = 1e-3;
  c.steps_per_episode = 10000;
  c.episodes = 200;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"fig3", "fig4-2bs", "fig4-4bs", "scaled"}; }

TrainConfig preset(std::string_view name) {
  if (name == "fig3") return base_config({kSites[0], kSites[1], kSites[2], kSites[3], kSites[4]}, 1);
  if (name == "fig4-2bs") return base_config({kSites[1], kSites[4]}, 2);
  if (name == "fig4-4bs") return base_config({kSites[1], kSites[2], kSites[3], kSites[4]}, 3);
  if (name == "scaled") {
    TrainConfig c = base_config({kSites[1], kSites[4]}, 1);
    c.policy.embed_dim = 64;
    c.policy.hidden_dim = 64;
    c.batch_size = 64;
    c.steps_per_episode = 1000;
    c.episodes = 10;
    c.eval_every = 50;
    return c;
  }
  throw UsageError("unknown preset '" + std::string(name) + "'");
}

namespace {

std::vector<Point> parse_points(const std::string& text) {
  std::vector<Point> pts;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::stringstream coords(item);
    Point p;
    char comma = 0;
    if (!(coords >> p.x >> comma >> p.y) || comma != ',')
      throw DataError("bs_positions entry '" + item + "' is not 'x, y'");
    pts.push_back(p);
  }
  return pts;
}

template <typename T>
void read(const pt::ptree& section, const char* key, T& into) {
  if (auto v = section.get_optional<std::string>(key)) {
    try {
      into = section.get<T>(key);
    } catch (const pt::ptree_bad_data&) {
      throw DataError(std::string("config key '") + key + "' has invalid value '" + *v + "'");
    }
  }
}

void reject_unknown(const pt::ptree& section, const std::string& name, std::set<std::string> known) {
  for (const auto& [key, value] : section)
    if (!known.contains(key)) throw DataError("unknown config key '" + name + "." + key + "'");
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }

  TrainConfig c;
  for (const auto& [name, section] : tree) {
    if (name == "network") {
      reject_unknown(section, name,
                     {"prbs_per_bs", "area_half_width", "bs_positions", "pathloss_exponent", "tx_power",
                      "noise_variance", "active_ues", "seed"});
      NetworkConfig& n = c.network;
      read(section, "prbs_per_bs", n.prbs_per_bs);
      read(section, "area_half_width", n.area_half_width);
      if (auto v = section.get_optional<std::string>("bs_positions")) n.bs_positions = parse_points(*v);
      read(section, "pathloss_exponent", n.pathloss_exponent);
      read(section, "tx_power", n.tx_power);
      read(section, "noise_variance", n.noise_variance);
      read(section, "active_ues", n.active_ues);
      read(section, "seed", n.seed);
    } else if (name == "policy") {
      reject_unknown(section, name, {"embed_dim", "hidden_dim", "feature_scale"});
      read(section, "embed_dim", c.policy.embed_dim);
      read(section, "hidden_dim", c.policy.hidden_dim);
      read(section, "feature_scale", c.policy.feature_scale);
    } else if (name == "train") {
      reject_unknown(section, name,
                     {"episodes", "steps_per_episode", "batch_size", "baseline_decay", "learning_rate",
                      "seed", "eval_instances", "eval_every"});
      read(section, "episodes", c.episodes);
      read(section, "steps_per_episode", c.steps_per_episode);
      read(section, "batch_size", c.batch_size);
      read(section, "baseline_decay", c.baseline_decay);
      read(section, "learning_rate", c.learning_rate);
      read(section, "seed", c.seed);
      read(section, "eval_instances", c.eval_instances);
      read(section, "eval_every", c.eval_every);
    } else {
      throw DataError("unknown config section '" + name + "'");
    }
  }
  c.policy.input_dim = c.network.bs_count();
  if (c.network.noise_variance > 0.0)
    c.policy.feature_snr = c.network.tx_power / c.network.noise_variance;
  try {
    c.validate();
  } catch (const UsageError& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("config file " + path.string() + " not found");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string to_ini(const TrainConfig& c) {
  std::ostringstream s;
  const NetworkConfig& n = c.network;
  s << "[network]\n"
    << "prbs_per_bs = " << n.prbs_per_bs << "\n"
    << "area_half_width = " << format_double(n.area_half_width) << "\n"
    << "bs_positions = ";
  for (std::size_t k = 0; k < n.bs_positions.size(); ++k)
    s << (k ? "; " : "") << format_double(n.bs_positions[k].x) << ", "
      << format_double(n.bs_positions[k].y);
  s << "\n"
    << "pathloss_exponent = " << format_double(n.pathloss_exponent) << "\n"
    << "tx_power = " << format_double(n.tx_power) << "\n"
    << "noise_variance = " << format_double(n.noise_variance) << "\n"
    << "active_ues = " << n.active_ues << "\n"
    << "seed = " << n.seed << "\n\n"
    << "[policy]\n"
    << "embed_dim = " << c.policy.embed_dim << "\n"
    << "hidden_dim = " << c.policy.hidden_dim << "\n"
    << "feature_scale = " << format_double(c.policy.feature_scale) << "\n\n"
    << "[train]\n"
    << "episodes = " << c.episodes << "\n"
    << "steps_per_episode = " << c.steps_per_episode << "\n"
    << "batch_size = " << c.batch_size << "\n"
    << "baseline_decay = " << format_double(c.baseline_decay) << "\n"
    << "learning_rate = " << format_double(c.learning_rate) << "\n"
    << "seed = " << c.seed << "\n"
    << "eval_instances = " << c.eval_instances << "\n"
    << "eval_every = " << c.eval_every << "\n";
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("write to " + path.string() + " failed");
}

void generate_dataset(const NetworkConfig& config, std::size_t count, const std::filesystem::path& out) {
  Rng rng = make_rng(config.seed);
  std::vector<NetworkInstance> instances;
  instances.reserve(count);
  for (std::size_t i = 0; i < count; ++i) instances.push_back(sample_instance(config, rng));
  save_dataset(instances, out);
}

std::vector<CompareRow> compare(const std::vector<NetworkInstance>& instances, const CompareOptions& options) {
  std::vector<CompareRow> rows;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const NetworkInstance& inst = instances[i];
    const RadioParams params = RadioParams::from(inst.config);
    CompareRow row;
    row.instance = i;
    if (exhaustive_candidate_count(inst.csi.ue_count()) <= options.budget)
      row.phi_exhaustive = exhaustive_noma(inst, params, options.budget).phi;
    Rng rng = make_rng(options.seed, i);
    row.phi_random = random_heuristic(inst, params, rng).phi;
    row.phi_oma = optimal_oma(inst, params).phi;
    if (options.policy) {
      if (options.policy->config().input_dim != inst.csi.bs_count())
        throw DataError("instance " + std::to_string(i) + " has " + std::to_string(inst.csi.bs_count()) +
                        " base stations but the policy expects " +
                        std::to_string(options.policy->config().input_dim));
      row.phi_ptrnet = rollout_phi(options.policy->rollout_greedy(inst.csi).u, inst);
      if (row.phi_exhaustive) row.gap_percent = gap_percent(*row.phi_exhaustive, *row.phi_ptrnet);
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

template <typename Get>
std::optional<double> column_median(const std::vector<CompareRow>& rows, Get get) {
  std::vector<double> vals;
  for (const CompareRow& r : rows)
    if (std::optional<double> v = get(r)) vals.push_back(*v);
  if (vals.empty()) return std::nullopt;
  return median(vals);
}

struct Columns {
  std::optional<double> ptrnet, exhaustive, random, oma, gap;
};

Columns medians(const std::vector<CompareRow>& rows) {
  return {column_median(rows, [](const CompareRow& r) { return r.phi_ptrnet; }),
          column_median(rows, [](const CompareRow& r) { return r.phi_exhaustive; }),
          column_median(rows, [](const CompareRow& r) { return std::optional<double>(r.phi_random); }),
          column_median(rows, [](const CompareRow& r) { return std::optional<double>(r.phi_oma); }),
          column_median(rows, [](const CompareRow& r) { return r.gap_percent; })};
}

}  // namespace

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << kCompareHeader << '\n';
  for (const CompareRow& r : rows)
    s << r.instance << ',' << cell(r.phi_ptrnet) << ',' << cell(r.phi_exhaustive) << ','
      << format_double(r.phi_random) << ',' << format_double(r.phi_oma) << ',' << cell(r.gap_percent)
      << '\n';
  const Columns m = medians(rows);
  s << "median," << cell(m.ptrnet) << ',' << cell(m.exhaustive) << ',' << cell(m.random) << ','
    << cell(m.oma) << ',' << cell(m.gap) << '\n';
  return s.str();
}

std::string oracle_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << kOracleHeader << '\n';
  for (const CompareRow& r : rows)
    s << r.instance << ',' << cell(r.phi_exhaustive) << ',' << format_double(r.phi_random) << ','
      << format_double(r.phi_oma) << '\n';
  const Columns m = medians(rows);
  s << "median," << cell(m.exhaustive) << ',' << cell(m.random) << ',' << cell(m.oma) << '\n';
  return s.str();
}

std::string eval_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream s;
  s << kEvalHeader << '\n';
  for (const CompareRow& r : rows) s << r.instance << ',' << cell(r.phi_ptrnet) << '\n';
  s << "median," << cell(medians(rows).ptrnet) << '\n';
  return s.str();
}

namespace {

struct CliArgs {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string dataset;
  std::uint64_t budget = kDefaultExhaustiveBudget;
  std::size_t count = 0;
  bool dump = false;
};

TrainConfig resolve_config(const CliArgs& args) {
  if (!args.config.empty() && !args.preset.empty())
    throw UsageError("--config and --preset are mutually exclusive");
  if (!args.preset.empty()) return preset(args.preset);
  if (args.config.empty()) throw UsageError("one of --config or --preset is required");
  return load_config(args.config);
}

PointerNetwork load_policy(const std::string& path) {
  return policy_from_checkpoint(tensor::load_checkpoint(path));
}

int dispatch(const std::string& command, const CliArgs& args) {
  if (command == "generate") {
    TrainConfig c = resolve_config(args);
    if (args.seed) c.network.seed = *args.seed;
    generate_dataset(c.network, args.count, args.out);
    return kExitOk;
  }
  if (command == "train") {
    TrainConfig c = resolve_config(args);
    if (args.seed) c.seed = *args.seed;
    TrainingState state(c);
    TrainOptions opts;
    opts.out_dir = args.out;
    opts.on_step = [](const StepMetrics& m) {
      if (m.eval_median_phi)
        std::cerr << "step " << m.step << "  batch_phi " << format_double(m.batch_mean_phi)
                  << "  eval_median_phi " << format_double(*m.eval_median_phi) << "  eval_median_gap% "
                  << format_double(*m.eval_median_gap) << '\n';
    };
    const TrainResult r = train(state, opts);
    if (r.resumed_from) std::cerr << "resumed from step " << r.resumed_from << '\n';
    return kExitOk;
  }

  const std::vector<NetworkInstance> instances = load_dataset(args.dataset);
  CompareOptions opts;
  opts.budget = args.budget;
  opts.seed = args.seed.value_or(1);
  std::optional<PointerNetwork> policy;
  if (!args.checkpoint.empty()) {
    policy.emplace(load_policy(args.checkpoint));
    opts.policy = &*policy;
  }

  if (command == "oracle") {
    write_text(args.out, oracle_csv(compare(instances, opts)));
  } else if (command == "eval") {
    if (!policy) throw UsageError("eval needs --checkpoint");
    const std::vector<CompareRow> rows = compare(instances, opts);
    write_text(args.out, eval_csv(rows));
    if (args.dump) {
      for (std::size_t i = 0; i < instances.size(); ++i) {
        const NetworkInstance& inst = instances[i];
        const Rollout r = policy->rollout_greedy(inst.csi);
        const Assignment a = canonicalize(
            Assignment::from_permutation(r.u, inst.csi.bs_count(), inst.config.prbs_per_bs), inst.csi);
        std::cout << "# instance " << i << '\n'
                  << dump_assignment(a, inst, RadioParams::from(inst.config));
      }
    }
  } else {
    write_text(args.out, compare_csv(compare(instances, opts)));
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Multicell NOMA user pairing and association: simulation, baselines, pointer-network training"};
  app.require_subcommand(1);
  CliArgs args;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", args.config, "INI config file");
    sub->add_option("--preset", args.preset, "built-in scenario: fig3, fig4-2bs, fig4-4bs, scaled");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { args.seed = s; }, "seed override");
  };

  CLI::App* gen = app.add_subcommand("generate", "sample network instances into an NDJSON dataset");
  add_config(gen);
  add_seed(gen);
  gen->add_option("--count", args.count, "number of instances")->required();
  gen->add_option("--out", args.out, "output dataset path")->required();

  CLI::App* tr = app.add_subcommand("train", "REINFORCE training; resumes from OUT/checkpoint.json");
  add_config(tr);
  add_seed(tr);
  tr->add_option("--out", args.out, "output directory")->required();

  for (const char* name : {"eval", "oracle", "compare"}) {
    CLI::App* sub = app.add_subcommand(name, std::string(name) == "oracle"
                                                 ? "exhaustive / random / OMA baselines per instance"
                                             : std::string(name) == "eval"
                                                 ? "greedy policy rate per instance"
                                                 : "policy against every baseline");
    sub->add_option("--dataset", args.dataset, "NDJSON dataset")->required();
    sub->add_option("--out", args.out, "output CSV")->required();
    sub->add_option("--checkpoint", args.checkpoint, "policy checkpoint");
    sub->add_option("--budget", args.budget, "max exhaustive candidates per instance");
    add_seed(sub);
    if (std::string(name) == "eval") sub->add_flag("--dump", args.dump, "print assignments to stdout");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace noma::harness
