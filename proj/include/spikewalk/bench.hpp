#pragma once

// Benchmark metrics over simulation records, parameter sweeps, and the small
// statistics toolkit the property tests rely on.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "spikewalk/errors.hpp"
#include "spikewalk/mcwalk.hpp"
#include "spikewalk/problem.hpp"
#include "spikewalk/rng.hpp"
#include "spikewalk/snn/engine.hpp"

namespace spikewalk::bench {

// Hardware measurement of neural steps per simulation step (mean, std).
// Reference metadata only.
inline constexpr double kHardwareRatioMean = 31.8;
inline constexpr double kHardwareRatioStd = 0.166;
inline constexpr std::size_t kDefaultWindow = 25;

// Trailing average; the first window-1 entries average the available prefix.
template <typename T>
std::vector<double> moving_average(const std::vector<T>& trace, std::size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(trace.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    sum += static_cast<double>(trace[i]);
    if (i >= window) sum -= static_cast<double>(trace[i - window]);
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

struct ErrorReport {
  double rmse = 0.0;
  double max_abs = 0.0;
  double signed_bias = 0.0;  // mean of estimate - analytic
};

inline ErrorReport error_report(const MeshSolution& solution, const ProblemSpec& spec) {
  const int n = spec.nodes();
  if (static_cast<int>(solution.u.size()) != n) throw ContractViolation("error_report: solution does not match the mesh");
  ErrorReport r;
  double sq = 0.0;
  for (int j = 0; j < n; ++j) {
    const double d = solution.u[j] - analytic_solution(spec, spec.position(j));
    sq += d * d;
    r.max_abs = std::max(r.max_abs, std::abs(d));
    r.signed_bias += d;
  }
  r.rmse = std::sqrt(sq / n);
  r.signed_bias /= n;
  return r;
}

struct RatioStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double std = 0.0;
};

// Pooled over every completed simulation step of every tile.
inline RatioStats timestep_ratio(const snn::SimulationRecord& record) {
  if (record.sim_steps_completed < 1) {
    throw std::invalid_argument("timestep_ratio: no tile completed a simulation step");
  }
  snn::CostStats pooled;
  for (const auto& t : record.tiles) pooled.merge(t.cost);
  return {pooled.count, pooled.mean(), std::sqrt(pooled.variance())};
}

struct AbsorptionStat {
  int start_node = 0;
  std::uint64_t tiles = 0;
  std::uint64_t fully_absorbed_tiles = 0;
  double mean_steps = 0.0;  // over fully absorbed tiles
  std::uint64_t max_steps = 0;
};

inline std::vector<AbsorptionStat> absorption_stats(const snn::SimulationRecord& record, int nodes) {
  std::vector<AbsorptionStat> out(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) out[j].start_node = j;
  for (const auto& t : record.tiles) {
    auto& s = out.at(static_cast<std::size_t>(t.start_node));
    ++s.tiles;
    if (t.full_absorption_step) {
      ++s.fully_absorbed_tiles;
      s.mean_steps += static_cast<double>(*t.full_absorption_step);
      s.max_steps = std::max(s.max_steps, *t.full_absorption_step);
    }
  }
  for (auto& s : out) {
    if (s.fully_absorbed_tiles) s.mean_steps /= static_cast<double>(s.fully_absorbed_tiles);
  }
  return out;
}

struct WallClock {
  double build = 0.0;
  double run = 0.0;
  double decode = 0.0;
};

struct BenchReport {
  ErrorReport errors;
  std::vector<double> spikes_in_flight_ma;
  std::optional<RatioStats> ratio;  // empty when no simulation step completed
  std::vector<AbsorptionStat> absorption;
  WallClock wall_clock;
  std::uint64_t neural_steps = 0;
  std::uint64_t sim_steps_completed = 0;
  std::uint64_t unabsorbed = 0;
  std::uint64_t total_spikes = 0;
};

inline BenchReport make_report(const ProblemSpec& spec, const snn::SimulationRecord& record,
                               std::size_t window = kDefaultWindow) {
  BenchReport r;
  r.errors = error_report(snn::decode_solution(record, spec), spec);
  r.spikes_in_flight_ma = moving_average(record.spikes_in_flight, window);
  if (record.sim_steps_completed >= 1) r.ratio = timestep_ratio(record);
  r.absorption = absorption_stats(record, spec.nodes());
  r.neural_steps = record.neural_steps;
  r.sim_steps_completed = record.sim_steps_completed;
  r.unabsorbed = record.unabsorbed;
  r.total_spikes = std::accumulate(record.spikes_in_flight.begin(), record.spikes_in_flight.end(), std::uint64_t{0});
  return r;
}

struct BenchConfig {
  ProblemSpec problem;
  snn::BuildOptions build;
  snn::RunOptions run;
};

struct TimedRun {
  snn::SpikingNetwork network;
  snn::SimulationRecord record;
  BenchReport report;
};

inline TimedRun timed_run(const BenchConfig& config, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  const auto t0 = clock::now();
  auto network = snn::build_network(config.problem, config.build);
  const auto t1 = clock::now();
  auto record = snn::run(network, seed, config.run);
  const auto t2 = clock::now();
  auto report = make_report(config.problem, record);
  const auto t3 = clock::now();
  report.wall_clock = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3)};
  return {std::move(network), std::move(record), std::move(report)};
}

enum class SweepAxis { tiles, walkers, neural_steps };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::tiles: return "tiles";
    case SweepAxis::walkers: return "walkers";
    case SweepAxis::neural_steps: return "neural_steps";
  }
  return "?";
}

inline std::optional<SweepAxis> parse_axis(std::string_view s) {
  for (auto a : {SweepAxis::tiles, SweepAxis::walkers, SweepAxis::neural_steps}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

struct SweepRow {
  SweepAxis axis = SweepAxis::tiles;
  std::uint64_t value = 0;
  std::uint64_t seed = 0;
  BenchReport report;
};

// One full run per value with seed derive_stream(seed, sweep, index).
inline std::vector<SweepRow> scaling_sweep(SweepAxis axis, const std::vector<std::uint64_t>& values,
                                           const BenchConfig& base, std::uint64_t seed) {
  if (values.empty()) throw std::invalid_argument("scaling_sweep: no values");
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    BenchConfig config = base;
    const std::uint64_t v = values[i];
    if (v == 0) throw std::invalid_argument("scaling_sweep: values must be positive");
    switch (axis) {
      case SweepAxis::tiles:
        if (v > UINT32_MAX) throw std::invalid_argument("scaling_sweep: tile count too large");
        config.build.tiles_per_start = static_cast<std::uint32_t>(v);
        break;
      case SweepAxis::walkers: config.build.walkers_per_tile = v; break;
      case SweepAxis::neural_steps: config.run.neural_timesteps = v; break;
    }
    const std::uint64_t run_seed = derive_stream(seed, StreamTag::sweep, i);
    rows.push_back({axis, v, run_seed, timed_run(config, run_seed).report});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Statistics helpers.

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: constant sample");
  return sxy / std::sqrt(sxx * syy);
}

// Spearman rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) { return pearson(ranks(x), ranks(y)); }

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: need two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw NumericError("linear_fit: x is constant");
  return {sxy / sxx, my - sxy / sxx * mx};
}

struct ChiSquare {
  double statistic = 0.0;
  std::uint64_t dof = 0;
  double p_value = 1.0;
};

// Pearson chi-square test that the rows of a contingency table share one
// distribution. All-zero columns are dropped.
inline ChiSquare chi_square_homogeneity(const std::vector<std::vector<std::uint64_t>>& table) {
  if (table.size() < 2) throw std::invalid_argument("chi_square_homogeneity: need at least two rows");
  const std::size_t cols = table.front().size();
  for (const auto& row : table) {
    if (row.size() != cols) throw std::invalid_argument("chi_square_homogeneity: ragged table");
  }
  std::vector<double> col_sum(cols, 0.0), row_sum(table.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = static_cast<double>(table[i][j]);
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  if (std::any_of(row_sum.begin(), row_sum.end(), [](double v) { return v == 0.0; })) {
    throw std::invalid_argument("chi_square_homogeneity: empty row");
  }
  std::size_t used = 0;
  ChiSquare out;
  for (std::size_t j = 0; j < cols; ++j) {
    if (col_sum[j] == 0.0) continue;
    ++used;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double e = row_sum[i] * col_sum[j] / total;
      const double d = static_cast<double>(table[i][j]) - e;
      out.statistic += d * d / e;
    }
  }
  if (used < 2) return out;
  out.dof = (table.size() - 1) * (used - 1);
  out.p_value = boost::math::gamma_q(0.5 * static_cast<double>(out.dof), 0.5 * out.statistic);
  return out;
}

// Counts per bin with edges [edges[k], edges[k+1]); the last bin is open.
inline std::vector<std::uint64_t> histogram(const std::vector<double>& values, const std::vector<double>& edges) {
  if (edges.empty()) throw std::invalid_argument("histogram: no edges");
  std::vector<std::uint64_t> h(edges.size(), 0);
  for (double v : values) {
    if (v < edges.front()) continue;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    ++h[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
  return h;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace spikewalk::bench
