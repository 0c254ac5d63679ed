#pragma once

// CSV and JSON writers shared by the command-line tool. Numbers are printed
// with a fixed round-trip format so reruns produce identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikewalk/bench.hpp"
#include "spikewalk/mcwalk.hpp"
#include "spikewalk/problem.hpp"
#include "spikewalk/snn/engine.hpp"

namespace spikewalk::io {

using nlohmann::json;

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline std::string config_line(const json& config) { return "# config: " + config.dump() + "\n"; }

inline std::string solution_csv(const ProblemSpec& spec, const MeshSolution& sol, const json& config) {
  std::string out = config_line(config) + "x,u_estimate,u_analytic,abs_error\n";
  for (int j = 0; j < spec.nodes(); ++j) {
    const double x = spec.position(j);
    const double exact = analytic_solution(spec, x);
    out += format_double(x) + "," + format_double(sol.u[j]) + "," + format_double(exact) + "," +
           format_double(std::abs(sol.u[j] - exact)) + "\n";
  }
  return out;
}

inline std::string runs_csv(const ProblemSpec& spec, const std::vector<MeshSolution>& runs, const json& config) {
  std::string out = config_line(config) + "run,x,u_estimate\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (int j = 0; j < spec.nodes(); ++j) {
      out += std::to_string(r) + "," + format_double(spec.position(j)) + "," + format_double(runs[r].u[j]) + "\n";
    }
  }
  return out;
}

inline std::string spikes_csv(const std::vector<std::uint64_t>& trace, const json& config) {
  std::string out = config_line(config) + "neural_t,count\n";
  for (std::size_t t = 0; t < trace.size(); ++t) out += std::to_string(t) + "," + std::to_string(trace[t]) + "\n";
  return out;
}

inline json to_json(const bench::ErrorReport& e) {
  return {{"rmse", e.rmse}, {"max_abs", e.max_abs}, {"signed_bias", e.signed_bias}};
}

inline json to_json(const bench::BenchReport& r) {
  json absorption = json::array();
  for (const auto& a : r.absorption) {
    absorption.push_back({{"start_node", a.start_node},
                          {"tiles", a.tiles},
                          {"fully_absorbed_tiles", a.fully_absorbed_tiles},
                          {"mean_sim_steps", a.mean_steps},
                          {"max_sim_steps", a.max_steps}});
  }
  json ratio = nullptr;
  if (r.ratio) ratio = {{"count", r.ratio->count}, {"mean", r.ratio->mean}, {"std", r.ratio->std}};
  double peak = 0.0;
  std::size_t peak_t = 0;
  for (std::size_t t = 0; t < r.spikes_in_flight_ma.size(); ++t) {
    if (r.spikes_in_flight_ma[t] > peak) {
      peak = r.spikes_in_flight_ma[t];
      peak_t = t;
    }
  }
  return {{"errors", to_json(r.errors)},
          {"ratio", ratio},
          {"hardware_reference_ratio", {{"mean", bench::kHardwareRatioMean}, {"std", bench::kHardwareRatioStd}}},
          {"absorption", absorption},
          {"neural_steps", r.neural_steps},
          {"sim_steps_completed", r.sim_steps_completed},
          {"unabsorbed", r.unabsorbed},
          {"total_spikes", r.total_spikes},
          {"spikes_in_flight_ma_peak", {{"value", peak}, {"neural_t", peak_t}}}};
}

inline json to_json(const bench::WallClock& w) { return {{"build", w.build}, {"run", w.run}, {"decode", w.decode}}; }

inline json to_json(const snn::SimulationRecord& rec) {
  json tiles = json::array();
  for (const auto& t : rec.tiles) {
    tiles.push_back({{"tile", t.tile},
                     {"start_node", t.start_node},
                     {"walkers", t.walkers},
                     {"absorbed", t.absorbed},
                     {"sim_steps", t.sim_steps},
                     {"cost_mean", t.cost.mean()},
                     {"cost_max", t.cost.count ? t.cost.max : 0},
                     {"full_absorption_step", t.full_absorption_step ? json(*t.full_absorption_step) : json(nullptr)},
                     {"tallies", t.tallies}});
  }
  return {{"seed", rec.seed},
          {"neural_steps", rec.neural_steps},
          {"sim_steps_completed", rec.sim_steps_completed},
          {"unabsorbed", rec.unabsorbed},
          {"counts", {{"nodes", rec.counts.nodes}, {"walkers_per_start", rec.counts.walkers_per_start},
                      {"values", rec.counts.counts}, {"unabsorbed", rec.counts.unabsorbed}}},
          {"tiles", tiles}};
}

inline std::string bench_csv(const std::vector<bench::SweepRow>& rows, const json& config) {
  std::string out = config_line(config) +
                    "axis,value,seed,error_rmse,error_max_abs,signed_bias,ratio_mean,ratio_std,sim_steps_completed,"
                    "unabsorbed,total_spikes\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += std::string(bench::to_string(row.axis)) + "," + std::to_string(row.value) + "," + std::to_string(row.seed) +
           "," + format_double(r.errors.rmse) + "," + format_double(r.errors.max_abs) + "," +
           format_double(r.errors.signed_bias) + "," + (r.ratio ? format_double(r.ratio->mean) : "") + "," +
           (r.ratio ? format_double(r.ratio->std) : "") + "," + std::to_string(r.sim_steps_completed) + "," +
           std::to_string(r.unabsorbed) + "," + std::to_string(r.total_spikes) + "\n";
  }
  return out;
}

}  // namespace spikewalk::io
