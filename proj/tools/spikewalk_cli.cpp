// spikewalk: solve, simulate, generate, bench.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikewalk/bench.hpp"
#include "spikewalk/io.hpp"
#include "spikewalk/mcwalk.hpp"
#include "spikewalk/netgen.hpp"
#include "spikewalk/parallel.hpp"
#include "spikewalk/snn/engine.hpp"

namespace {

using namespace spikewalk;
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  double length = 2.0;
  double flux = 3.0;
  double dx = 0.05;
  double dt = 1e-4;
  double threshold_c = kDefaultThreshold;
  std::optional<std::uint64_t> walkers;
  std::uint32_t tiles = 100;
  std::uint64_t neural_steps = 1'000'000;
  std::uint64_t max_steps = 0;
  int runs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> precision_bits;
  std::string rounding = "nearest";
  std::string absorb_policy = "remove";
  std::string preset = "none";
  std::vector<int> start_nodes;
  bool stop_when_absorbed = false;
  std::string sweep_axis;
  std::vector<std::uint64_t> sweep_values;
  unsigned workers = default_workers();
  std::string out = "out";
};

// Keys accepted in --config files; names match the long flags.
const std::map<std::string, std::function<void(RunConfig&, const json&)>>& config_keys() {
  static const std::map<std::string, std::function<void(RunConfig&, const json&)>> keys = {
      {"length", [](RunConfig& c, const json& v) { c.length = v.get<double>(); }},
      {"flux", [](RunConfig& c, const json& v) { c.flux = v.get<double>(); }},
      {"dx", [](RunConfig& c, const json& v) { c.dx = v.get<double>(); }},
      {"dt", [](RunConfig& c, const json& v) { c.dt = v.get<double>(); }},
      {"threshold-c", [](RunConfig& c, const json& v) { c.threshold_c = v.get<double>(); }},
      {"walkers", [](RunConfig& c, const json& v) { c.walkers = v.get<std::uint64_t>(); }},
      {"tiles", [](RunConfig& c, const json& v) { c.tiles = v.get<std::uint32_t>(); }},
      {"neural-steps", [](RunConfig& c, const json& v) { c.neural_steps = v.get<std::uint64_t>(); }},
      {"max-steps", [](RunConfig& c, const json& v) { c.max_steps = v.get<std::uint64_t>(); }},
      {"runs", [](RunConfig& c, const json& v) { c.runs = v.get<int>(); }},
      {"seed", [](RunConfig& c, const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"precision-bits", [](RunConfig& c, const json& v) { c.precision_bits = v.get<int>(); }},
      {"rounding", [](RunConfig& c, const json& v) { c.rounding = v.get<std::string>(); }},
      {"absorb-policy", [](RunConfig& c, const json& v) { c.absorb_policy = v.get<std::string>(); }},
      {"preset", [](RunConfig& c, const json& v) { c.preset = v.get<std::string>(); }},
      {"start-nodes", [](RunConfig& c, const json& v) { c.start_nodes = v.get<std::vector<int>>(); }},
      {"stop-when-absorbed", [](RunConfig& c, const json& v) { c.stop_when_absorbed = v.get<bool>(); }},
      {"sweep-axis", [](RunConfig& c, const json& v) { c.sweep_axis = v.get<std::string>(); }},
      {"sweep-values", [](RunConfig& c, const json& v) { c.sweep_values = v.get<std::vector<std::uint64_t>>(); }},
      {"workers", [](RunConfig& c, const json& v) { c.workers = v.get<unsigned>(); }},
      {"out", [](RunConfig& c, const json& v) { c.out = v.get<std::string>(); }},
  };
  return keys;
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_object()) throw ConfigError("config file " + path + ": expected a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    auto key = config_keys().find(it.key());
    if (key == config_keys().end()) throw ConfigError("config file " + path + ": unknown key '" + it.key() + "'");
    try {
      key->second(cfg, it.value());
    } catch (const json::exception& e) {
      throw ConfigError("config file " + path + ": bad value for '" + it.key() + "': " + e.what());
    }
  }
}

// --config is read before flag parsing so flags override file values.
std::optional<std::string> find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return std::nullopt;
}

void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--config", "JSON file with option values; flags override it");
  sub->add_option("--length", c.length, "wire length l");
  sub->add_option("--flux", c.flux, "forcing F");
  sub->add_option("--dx", c.dx, "mesh spacing");
  sub->add_option("--dt", c.dt, "timestep");
  sub->add_option("--threshold-c", c.threshold_c, "timestep check threshold c");
  sub->add_option("--walkers", c.walkers, "walkers per start node (solve) or per tile");
  sub->add_option("--tiles", c.tiles, "tiles per start node");
  sub->add_option("--neural-steps", c.neural_steps, "neural timestep budget");
  sub->add_option("--max-steps", c.max_steps, "walk step cap for solve (0: 10 tau(0)/dt)");
  sub->add_option("--runs", c.runs, "independent runs");
  sub->add_option("--seed", c.seed, "64-bit seed");
  sub->add_option("--precision-bits", c.precision_bits, "probability resolution bits (0: full)");
  sub->add_option("--rounding", c.rounding, "nearest | one_sided_down | one_sided_up");
  sub->add_option("--absorb-policy", c.absorb_policy, "remove | accumulate");
  sub->add_option("--preset", c.preset, "none | one-sided (asymmetric rounding preset)");
  sub->add_option("--start-nodes", c.start_nodes, "start nodes (default: all)");
  sub->add_flag("--stop-when-absorbed", c.stop_when_absorbed, "end once every walker is absorbed");
  sub->add_option("--sweep-axis", c.sweep_axis, "bench: tiles | walkers | neural_steps");
  sub->add_option("--sweep-values", c.sweep_values, "bench: values along the sweep axis");
  sub->add_option("--workers", c.workers, "worker threads");
  sub->add_option("--out", c.out, "output directory");
}

struct Resolved {
  ProblemSpec spec;
  StepProbabilities probs;
  snn::BuildOptions build;
  snn::RunOptions run;
  std::uint64_t walkers = 0;
  std::uint64_t seed = 0;
  json echo;
};

template <typename T, typename Parse>
T parse_or_throw(const std::string& text, Parse parse, const char* what) {
  auto v = parse(text);
  if (!v) throw ConfigError(std::string("unknown ") + what + " '" + text + "'");
  return *v;
}

Resolved resolve(const std::string& command, const RunConfig& c) {
  std::optional<ProblemSpec> spec;
  try {
    spec = ProblemSpec::create(c.length, c.flux, c.dx, c.dt, c.threshold_c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (command == "bench" && !c.seed) throw ConfigError("bench requires an explicit --seed");
  if (c.runs < 1) throw ConfigError("--runs must be >= 1");
  if (c.tiles < 1) throw ConfigError("--tiles must be >= 1");
  if (c.workers < 1) throw ConfigError("--workers must be >= 1");
  if (command != "solve" && c.neural_steps < 1) throw ConfigError("--neural-steps must be >= 1");
  if (c.preset != "none" && c.preset != "one-sided") throw ConfigError("unknown preset '" + c.preset + "'");

  const bool direct = command == "solve";
  const std::uint64_t walkers = c.walkers.value_or(direct ? 10000 : 100);
  if (walkers < 1) throw ConfigError("--walkers must be >= 1");
  snn::PrecisionConfig precision{c.precision_bits.value_or(direct ? 0 : 8),
                                 parse_or_throw<snn::Rounding>(c.rounding, snn::parse_rounding, "rounding")};
  if (precision.bits < 0 || precision.bits > 52) throw ConfigError("--precision-bits must be 0..52");
  const auto policy = parse_or_throw<snn::AbsorbPolicy>(c.absorb_policy, snn::parse_policy, "absorb policy");
  std::optional<StepProbabilities> preset;
  if (c.preset == "one-sided") preset = snn::one_sided_rounding_preset();

  Resolved r{*spec, snn::gate_probabilities(spec->probabilities(), precision, preset), {}, {}, walkers,
             c.seed.value_or(1), {}};
  r.build.walkers_per_tile = walkers;
  r.build.tiles_per_start = c.tiles;
  r.build.start_nodes = c.start_nodes;
  r.build.precision = precision;
  r.build.absorb_policy = policy;
  r.build.probabilities = preset;
  r.run.neural_timesteps = c.neural_steps;
  r.run.stop_when_all_absorbed = c.stop_when_absorbed;
  r.run.workers = c.workers;
  for (int s : c.start_nodes) {
    if (s < 0 || s >= spec->nodes()) throw ConfigError("start node " + std::to_string(s) + " outside the mesh");
  }
  if (walkers >= snn::kMaxWalkersPerTile && !direct) throw ConfigError("--walkers too large for one tile");

  // Worker count and output path do not influence results and are left out.
  r.echo = {{"command", command},
            {"length", c.length},
            {"flux", c.flux},
            {"dx", c.dx},
            {"dt", c.dt},
            {"threshold-c", c.threshold_c},
            {"walkers", walkers},
            {"seed", r.seed},
            {"precision-bits", precision.bits},
            {"rounding", c.rounding},
            {"preset", c.preset},
            {"probabilities", {{"left", r.probs.left}, {"right", r.probs.right}, {"stay", r.probs.stay}}}};
  if (direct) {
    r.echo["runs"] = c.runs;
    r.echo["max-steps"] = c.max_steps ? c.max_steps : default_max_steps(*spec);
  } else {
    r.echo["tiles"] = c.tiles;
    r.echo["neural-steps"] = c.neural_steps;
    r.echo["absorb-policy"] = c.absorb_policy;
    r.echo["start-nodes"] = c.start_nodes;
    r.echo["stop-when-absorbed"] = c.stop_when_absorbed;
  }
  return r;
}

void cmd_solve(const RunConfig& c, const Resolved& r) {
  const std::uint64_t max_steps = c.max_steps ? c.max_steps : default_max_steps(r.spec);
  const auto result = solve(r.spec, r.probs, r.walkers, r.seed, max_steps, c.runs, c.workers);
  const fs::path out = c.out;
  io::write_file(out / "solution.csv", io::solution_csv(r.spec, result.mean, r.echo));
  io::write_file(out / "runs.csv", io::runs_csv(r.spec, result.runs, r.echo));

  json runs = json::array();
  for (const auto& s : result.runs) {
    runs.push_back({{"errors", io::to_json(bench::error_report(s, r.spec))}, {"unabsorbed_fraction", s.unabsorbed_fraction}});
  }
  const json summary = {{"config", r.echo},
                        {"errors", io::to_json(bench::error_report(result.mean, r.spec))},
                        {"unabsorbed_fraction", result.mean.unabsorbed_fraction},
                        {"runs", runs}};
  io::write_file(out / "summary.json", summary.dump(2) + "\n");
  const auto e = bench::error_report(result.mean, r.spec);
  std::cout << "solve: " << r.spec.nodes() << " nodes, " << c.runs << " run(s); rmse " << e.rmse << ", max |err| "
            << e.max_abs << "; wrote " << out.string() << "\n";
}

void cmd_simulate(const RunConfig& c, const Resolved& r) {
  if (c.runs != 1) throw ConfigError("simulate performs one run; use bench for repeated runs");
  const bench::BenchConfig config{r.spec, r.build, r.run};
  const auto run = bench::timed_run(config, r.seed);
  for (const auto& w : run.network.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path out = c.out;
  const auto solution = snn::decode_solution(run.record, r.spec);
  io::write_file(out / "spikes_in_flight.csv", io::spikes_csv(run.record.spikes_in_flight, r.echo));
  io::write_file(out / "solution.csv", io::solution_csv(r.spec, solution, r.echo));
  const json record = {{"config", r.echo}, {"record", io::to_json(run.record)}, {"report", io::to_json(run.report)}};
  io::write_file(out / "record.json", record.dump(2) + "\n");
  io::write_file(out / "timing.json", json{{"wall_clock_seconds", io::to_json(run.report.wall_clock)}}.dump(2) + "\n");
  std::cout << "simulate: " << run.network.tiles.size() << " tiles, " << run.network.neurons.size() << " neurons, "
            << run.record.neural_steps << " neural steps, " << run.record.sim_steps_completed
            << " simulation steps (fewest per tile), " << run.record.unabsorbed << " unabsorbed; rmse "
            << run.report.errors.rmse << "; wrote " << out.string() << "\n";
}

void cmd_generate(const RunConfig& c, const Resolved& r) {
  const auto net = snn::build_network(r.spec, r.build);
  for (const auto& w : net.warnings) std::cerr << "warning: " << w << "\n";
  const fs::path out = c.out;
  io::write_file(out / "netlist.json", netgen::export_netlist(net, r.seed));
  std::cout << "generate: " << net.tiles.size() << " tiles, " << net.neurons.size() << " neurons, "
            << net.synapses.size() << " synapses; wrote " << (out / "netlist.json").string() << "\n";
}

void cmd_bench(const RunConfig& c, const Resolved& r) {
  bench::SweepAxis axis = bench::SweepAxis::neural_steps;
  std::vector<std::uint64_t> values{c.neural_steps};
  if (!c.sweep_axis.empty()) {
    axis = parse_or_throw<bench::SweepAxis>(c.sweep_axis, bench::parse_axis, "sweep axis");
    if (c.sweep_values.empty()) throw ConfigError("--sweep-axis needs --sweep-values");
    values = c.sweep_values;
  }
  json echo = r.echo;
  echo["sweep-axis"] = std::string(bench::to_string(axis));
  echo["sweep-values"] = values;
  const auto rows = bench::scaling_sweep(axis, values, {r.spec, r.build, r.run}, r.seed);

  json reports = json::array(), timing = json::array();
  for (const auto& row : rows) {
    reports.push_back({{"axis", bench::to_string(row.axis)}, {"value", row.value}, {"seed", row.seed},
                       {"report", io::to_json(row.report)}});
    timing.push_back({{"value", row.value}, {"wall_clock_seconds", io::to_json(row.report.wall_clock)}});
  }
  const fs::path out = c.out;
  io::write_file(out / "bench.csv", io::bench_csv(rows, echo));
  io::write_file(out / "bench.json", json{{"config", echo}, {"rows", reports}}.dump(2) + "\n");
  io::write_file(out / "timing.json", json{{"rows", timing}}.dump(2) + "\n");
  std::cout << "bench: " << rows.size() << " run(s) along " << bench::to_string(axis) << "; wrote " << out.string()
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Random-walk heat solver with a spiking-network backend"};
  app.require_subcommand(1);
  std::map<std::string, std::function<void(const RunConfig&, const Resolved&)>> commands = {
      {"solve", cmd_solve}, {"simulate", cmd_simulate}, {"generate", cmd_generate}, {"bench", cmd_bench}};
  const std::map<std::string, std::string> help = {
      {"solve", "direct Monte Carlo solve"},
      {"simulate", "run the spiking network and decode the solution"},
      {"generate", "export the spiking network as netlist-v1 JSON"},
      {"bench", "benchmark runs and scaling sweeps"}};
  for (const auto& [name, _] : commands) add_common(app.add_subcommand(name, help.at(name)), cfg);

  try {
    if (auto path = find_config_path(argc, argv)) load_config_file(cfg, *path);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const Resolved r = resolve(command, cfg);
    commands.at(command)(cfg, r);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
