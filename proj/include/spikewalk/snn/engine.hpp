#pragma once

// Discrete-time integer simulator for a SpikingNetwork.
//
// Tiles share no synapses, so each tile is compiled and simulated on its own.
// A neural step for one neuron is: add arriving weights, clamp to the floor,
// fire if the potential reaches threshold, reset, subtract the leak, clamp
// again. A spike emitted at step t reaches its targets at step t + delay.
// Probability gates deliver to exactly one stochastic target, selected by a
// uniform draw keyed by (tile, neuron, t).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "spikewalk/errors.hpp"
#include "spikewalk/mcwalk.hpp"
#include "spikewalk/parallel.hpp"
#include "spikewalk/rng.hpp"
#include "spikewalk/snn/network.hpp"

namespace spikewalk::snn {

inline constexpr std::uint32_t kNoNeuron = std::numeric_limits<std::uint32_t>::max();

struct CompiledTile {
  std::uint32_t tile = 0;
  std::uint32_t first = 0;
  std::uint32_t size = 0;
  int start_node = 0;
  std::uint64_t walkers = 0;
  std::uint64_t stream = 0;

  std::vector<Potential> threshold, leak, floor, reset_value, initial;
  std::vector<std::uint8_t> subtract;

  // Synapses grouped into segments sharing source and delay; a firing
  // enqueues one event per segment.
  std::vector<std::uint32_t> syn_target;
  std::vector<Potential> syn_weight;
  std::vector<std::uint32_t> seg_first, seg_last, seg_delay;

  std::vector<std::uint32_t> out_begin, out_end;  // deterministic segments per neuron
  std::vector<std::uint32_t> route_begin;  // exclusive single-synapse segments per gate
  std::vector<std::uint32_t> route_seg;
  std::vector<std::uint64_t> route_cut;    // cumulative probability on the 2^53 grid

  std::uint32_t ring = 2;  // power of two above the longest delay

  std::uint32_t parity = kNoNeuron;
  std::uint32_t trigger = kNoNeuron;
  std::uint32_t absorbed = kNoNeuron;
  std::vector<std::uint32_t> counters;  // mesh nodes, then the sink counter if any
  std::vector<std::uint32_t> buffers;
  std::vector<std::uint32_t> tallies;
};

inline CompiledTile compile_tile(const SpikingNetwork& net, std::uint32_t tile_index, std::uint64_t seed) {
  if (tile_index >= net.tiles.size()) throw ContractViolation("compile_tile: tile index out of range");
  const TileInfo& info = net.tiles[tile_index];
  CompiledTile c;
  c.tile = tile_index;
  c.first = info.first_neuron;
  c.size = info.neuron_count;
  c.start_node = info.start_node;
  c.walkers = info.walkers;
  c.stream = derive_stream(seed, StreamTag::tile, tile_index);

  const int n = net.nodes();
  c.counters.assign(static_cast<std::size_t>(n), kNoNeuron);
  c.buffers.assign(static_cast<std::size_t>(n), kNoNeuron);
  c.tallies.assign(static_cast<std::size_t>(n), kNoNeuron);
  std::uint32_t sink_counter = kNoNeuron;
  std::uint32_t sink_buffer = kNoNeuron;

  c.threshold.resize(c.size);
  c.leak.resize(c.size);
  c.floor.resize(c.size);
  c.reset_value.resize(c.size);
  c.initial.resize(c.size);
  c.subtract.resize(c.size);
  for (std::uint32_t k = 0; k < c.size; ++k) {
    const NeuronSpec& s = net.neurons[c.first + k];
    const NeuronSite& site = net.sites[c.first + k];
    c.threshold[k] = s.threshold;
    c.leak[k] = s.leak;
    c.floor[k] = s.floor;
    c.reset_value[k] = s.reset_potential;
    c.initial[k] = std::max(s.initial_potential, s.floor);
    c.subtract[k] = s.reset == ResetMode::subtract_threshold ? 1 : 0;

    const bool on_mesh = site.node >= 0 && site.node < n;
    switch (s.role) {
      case Role::counter:
        if (on_mesh) c.counters[site.node] = k;
        else sink_counter = k;
        break;
      case Role::buffer:
        if (on_mesh) c.buffers[site.node] = k;
        else sink_buffer = k;
        break;
      case Role::tally:
        if (s.tag == Tag::absorbed) c.absorbed = k;
        else if (on_mesh) c.tallies[site.node] = k;
        break;
      case Role::supervisor:
        if (s.tag == Tag::parity) c.parity = k;
        if (s.tag == Tag::trigger) c.trigger = k;
        break;
      default: break;
    }
  }
  if (sink_counter != kNoNeuron) {
    c.counters.push_back(sink_counter);
    c.buffers.push_back(sink_buffer);
  }

  const auto by_source = [](const SynapseSpec& s, std::uint32_t id) { return s.source < id; };
  auto lo = std::lower_bound(net.synapses.begin(), net.synapses.end(), c.first, by_source);
  auto hi = std::lower_bound(lo, net.synapses.end(), c.first + c.size, by_source);

  struct Edge {
    std::uint32_t source, target, delay;
    Potential weight;
    bool exclusive;
    double p;
  };
  std::vector<Edge> edges;
  std::uint32_t max_delay = 1;
  for (auto it = lo; it != hi; ++it) {
    if (it->target < c.first || it->target >= c.first + c.size) {
      throw ContractViolation("compile_tile: synapse crosses tiles");
    }
    if (it->delay < 1) throw ContractViolation("compile_tile: synapse delay must be >= 1");
    max_delay = std::max(max_delay, it->delay);
    const NeuronSpec& target = net.neurons[it->target];
    const bool exclusive = net.neurons[it->source].role == Role::probability_gate && target.stochastic_p.has_value();
    edges.push_back({it->source - c.first, it->target - c.first, it->delay, it->weight, exclusive,
                     target.stochastic_p.value_or(0.0)});
  }
  // Exclusive routes keep ascending target order inside each source.
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.source != b.source) return a.source < b.source;
    if (a.exclusive != b.exclusive) return !a.exclusive;
    return !a.exclusive && a.delay < b.delay;
  });

  c.out_begin.assign(c.size, 0);
  c.out_end.assign(c.size, 0);
  c.route_begin.assign(c.size + 1, 0);
  std::size_t e = 0;
  for (std::uint32_t k = 0; k < c.size; ++k) {
    c.out_begin[k] = static_cast<std::uint32_t>(c.seg_first.size());
    while (e < edges.size() && edges[e].source == k && !edges[e].exclusive) {
      const std::uint32_t delay = edges[e].delay;
      c.seg_first.push_back(static_cast<std::uint32_t>(c.syn_target.size()));
      c.seg_delay.push_back(delay);
      while (e < edges.size() && edges[e].source == k && !edges[e].exclusive && edges[e].delay == delay) {
        c.syn_target.push_back(edges[e].target);
        c.syn_weight.push_back(edges[e].weight);
        ++e;
      }
      c.seg_last.push_back(static_cast<std::uint32_t>(c.syn_target.size()));
    }
    c.out_end[k] = static_cast<std::uint32_t>(c.seg_first.size());
    c.route_begin[k] = static_cast<std::uint32_t>(c.route_seg.size());
    double cumulative = 0.0;
    while (e < edges.size() && edges[e].source == k) {
      cumulative += edges[e].p;
      c.route_seg.push_back(static_cast<std::uint32_t>(c.seg_first.size()));
      c.route_cut.push_back(static_cast<std::uint64_t>(std::llround(std::ldexp(std::min(cumulative, 1.0), 53))));
      c.seg_first.push_back(static_cast<std::uint32_t>(c.syn_target.size()));
      c.seg_delay.push_back(edges[e].delay);
      c.syn_target.push_back(edges[e].target);
      c.syn_weight.push_back(edges[e].weight);
      c.seg_last.push_back(static_cast<std::uint32_t>(c.syn_target.size()));
      ++e;
    }
  }
  c.route_begin[c.size] = static_cast<std::uint32_t>(c.route_seg.size());
  c.ring = std::bit_ceil(max_delay + 1);
  return c;
}

struct TileState {
  std::vector<Potential> potential;
  std::vector<std::vector<std::uint32_t>> ring;  // segments arriving at each step
  std::vector<std::uint32_t> active;
  std::vector<std::uint32_t> next;
  std::vector<std::uint8_t> mark;
  std::uint64_t t = 0;
};

inline bool self_driven(const CompiledTile& c, std::uint32_t k, Potential v) {
  return c.leak[k] != 0 || v >= c.threshold[k];
}

inline TileState initial_tile_state(const CompiledTile& c) {
  TileState s;
  s.potential = c.initial;
  s.ring.resize(c.ring);
  s.mark.assign(c.size, 0);
  for (std::uint32_t k = 0; k < c.size; ++k) {
    if (self_driven(c, k, s.potential[k])) {
      s.mark[k] = 1;
      s.active.push_back(k);
    }
  }
  return s;
}

// 53-bit uniform draw for neuron k at step t.
inline std::uint64_t gate_draw(std::uint64_t stream, std::uint32_t k, std::uint64_t t) noexcept {
  return mix64(mix64(stream + (std::uint64_t{k} + 1) * kGolden) ^ (t * 0xd1b54a32d192ed03ULL)) >> 11;
}

// Advances one tile by one neural step; on_fire(k) is called for every
// neuron that fires. Returns the number of firings.
template <typename OnFire>
std::uint32_t step_tile(const CompiledTile& c, TileState& s, OnFire&& on_fire) {
  const std::uint64_t mask = c.ring - 1;
  auto& bucket = s.ring[s.t & mask];
  for (std::uint32_t seg : bucket) {
    for (std::uint32_t i = c.seg_first[seg]; i < c.seg_last[seg]; ++i) {
      const std::uint32_t target = c.syn_target[i];
      s.potential[target] += c.syn_weight[i];
      if (!s.mark[target]) {
        s.mark[target] = 1;
        s.active.push_back(target);
      }
    }
  }
  bucket.clear();

  auto emit = [&](std::uint32_t seg) { s.ring[(s.t + c.seg_delay[seg]) & mask].push_back(seg); };

  std::uint32_t fired = 0;
  s.next.clear();
  for (std::uint32_t k : s.active) {
    Potential v = std::max(s.potential[k], c.floor[k]);
    if (v >= c.threshold[k]) {
      ++fired;
      on_fire(k);
      v = c.subtract[k] ? v - c.threshold[k] : c.reset_value[k];
      for (std::uint32_t seg = c.out_begin[k]; seg < c.out_end[k]; ++seg) emit(seg);
      const std::uint32_t r0 = c.route_begin[k];
      const std::uint32_t r1 = c.route_begin[k + 1];
      if (r0 != r1) {
        const std::uint64_t u = gate_draw(c.stream, k, s.t);
        for (std::uint32_t r = r0; r < r1; ++r) {
          if (u < c.route_cut[r]) {
            emit(c.route_seg[r]);
            break;
          }
        }
      }
    }
    if (c.leak[k] != 0) v = std::max(v - c.leak[k], c.floor[k]);
    s.potential[k] = v;
    if (self_driven(c, k, v)) {
      s.next.push_back(k);
    } else {
      s.mark[k] = 0;
    }
  }
  std::swap(s.active, s.next);
  ++s.t;
  return fired;
}

// ---------------------------------------------------------------------------
// Whole-network stepping, mostly for inspection and tests.

struct NetworkState {
  std::vector<CompiledTile> tiles;
  std::vector<TileState> states;
  std::uint64_t neural_t = 0;

  Potential potential(std::uint32_t neuron) const {
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      if (neuron >= tiles[i].first && neuron < tiles[i].first + tiles[i].size) {
        return states[i].potential[neuron - tiles[i].first];
      }
    }
    throw ContractViolation("NetworkState::potential: unknown neuron");
  }
};

inline NetworkState make_state(const SpikingNetwork& net, std::uint64_t seed) {
  NetworkState state;
  for (std::uint32_t i = 0; i < net.tiles.size(); ++i) {
    state.tiles.push_back(compile_tile(net, i, seed));
    state.states.push_back(initial_tile_state(state.tiles.back()));
  }
  return state;
}

struct StepReport {
  std::uint64_t neural_t = 0;
  std::vector<std::uint32_t> fired;  // global neuron ids
};

inline StepReport neural_step(NetworkState& state) {
  StepReport report{state.neural_t, {}};
  for (std::size_t i = 0; i < state.tiles.size(); ++i) {
    const auto& c = state.tiles[i];
    step_tile(c, state.states[i], [&](std::uint32_t k) { report.fired.push_back(c.first + k); });
  }
  std::sort(report.fired.begin(), report.fired.end());
  ++state.neural_t;
  return report;
}

// ---------------------------------------------------------------------------
// Instrumented runs.

struct CostStats {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  std::uint64_t min = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t max = 0;

  void add(std::uint64_t v) {
    ++count;
    sum += static_cast<double>(v);
    sum_sq += static_cast<double>(v) * static_cast<double>(v);
    min = std::min(min, v);
    max = std::max(max, v);
  }
  void merge(const CostStats& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
    min = std::min(min, o.min);
    max = std::max(max, o.max);
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const {
    if (count < 2) return 0.0;
    const double m = mean();
    return std::max(0.0, (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1));
  }

  friend bool operator==(const CostStats&, const CostStats&) = default;
};

struct SimStepDetail {
  std::uint64_t end_neural_t = 0;  // step at which the parity neuron fired
  std::uint64_t cost = 0;
  std::uint64_t route_load = 0;
  std::uint64_t transfer_load = 0;
  std::uint64_t absorbed_total = 0;
  std::uint64_t walkers_on_mesh = 0;

  friend bool operator==(const SimStepDetail&, const SimStepDetail&) = default;
};

struct TileRecord {
  std::uint32_t tile = 0;
  int start_node = 0;
  std::uint64_t walkers = 0;
  std::uint64_t neural_steps = 0;
  std::uint64_t sim_steps = 0;
  CostStats cost;
  std::uint64_t absorbed = 0;
  std::vector<std::uint32_t> absorption_steps;  // simulation step of each absorbed walker, ascending
  std::optional<std::uint64_t> full_absorption_step;
  std::vector<Potential> tallies;
  std::vector<SimStepDetail> details;

  friend bool operator==(const TileRecord&, const TileRecord&) = default;
};

struct RunOptions {
  std::uint64_t neural_timesteps = 0;
  bool stop_when_all_absorbed = false;
  bool record_step_detail = false;
  unsigned workers = 1;
  // Ascending neural steps (< neural_timesteps) at which decoded counts are
  // also captured. Not combinable with stop_when_all_absorbed.
  std::vector<std::uint64_t> checkpoints;
};

struct Checkpoint {
  std::uint64_t neural_t = 0;
  NodeCounts counts;
  std::uint64_t unabsorbed = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct SimulationRecord {
  std::uint64_t seed = 0;
  std::uint64_t neural_steps = 0;
  std::vector<std::uint64_t> spikes_in_flight;  // firings per neural step, summed over tiles
  std::vector<TileRecord> tiles;
  NodeCounts counts;
  std::uint64_t sim_steps_completed = 0;  // fewest over tiles
  std::uint64_t unabsorbed = 0;
  std::vector<Checkpoint> checkpoints;

  friend bool operator==(const SimulationRecord&, const SimulationRecord&) = default;
};

class TileRunner {
 public:
  TileRunner(const CompiledTile& compiled, bool detail)
      : c_(&compiled), state_(initial_tile_state(compiled)), detail_(detail) {
    record_.tile = compiled.tile;
    record_.start_node = compiled.start_node;
    record_.walkers = compiled.walkers;
    route_load_ = load(c_->counters, 0);
  }

  // Runs up to neural step `until` (exclusive); returns early after the
  // simulation step that absorbs the last walker when stop_on_absorption.
  void run(std::uint64_t until, bool stop_on_absorption, std::uint64_t* trace) {
    const std::uint32_t parity = c_->parity;
    const std::uint32_t trigger = c_->trigger;
    while (state_.t < until) {
      bool parity_fired = false;
      bool trigger_fired = false;
      const std::uint64_t t = state_.t;
      const std::uint32_t fired = step_tile(*c_, state_, [&](std::uint32_t k) {
        parity_fired |= k == parity;
        trigger_fired |= k == trigger;
      });
      if (trace) trace[t] += fired;
      if (trigger_fired) transfer_load_ = load(c_->buffers, kEnableOffset);
      if (parity_fired) {
        end_sim_step(t);
        if (stop_on_absorption && record_.full_absorption_step) return;
      }
    }
  }

  std::uint64_t neural_t() const { return state_.t; }
  bool fully_absorbed() const { return record_.full_absorption_step.has_value(); }

  // Record as of the current neural step.
  TileRecord snapshot() const {
    TileRecord r = record_;
    r.neural_steps = state_.t;
    const std::uint64_t absorbed = absorbed_now();
    // Walkers absorbed during an unfinished simulation step.
    for (std::uint64_t a = r.absorbed; a < absorbed; ++a) {
      r.absorption_steps.push_back(static_cast<std::uint32_t>(r.sim_steps + 1));
    }
    r.absorbed = absorbed;
    for (std::uint32_t k : c_->tallies) r.tallies.push_back(k == kNoNeuron ? 0 : state_.potential[k]);
    return r;
  }

 private:
  std::uint64_t load(const std::vector<std::uint32_t>& ids, Potential offset) const {
    Potential m = 0;
    for (std::uint32_t k : ids) {
      if (k != kNoNeuron) m = std::max(m, state_.potential[k] + offset);
    }
    return static_cast<std::uint64_t>(m);
  }

  std::uint64_t absorbed_now() const {
    return c_->absorbed == kNoNeuron ? 0 : static_cast<std::uint64_t>(state_.potential[c_->absorbed]);
  }

  void end_sim_step(std::uint64_t t) {
    const std::uint64_t cost = static_cast<std::uint64_t>(static_cast<std::int64_t>(t) - last_boundary_);
    last_boundary_ = static_cast<std::int64_t>(t);
    ++record_.sim_steps;
    record_.cost.add(cost);
    const std::uint64_t absorbed = absorbed_now();
    for (std::uint64_t a = record_.absorbed; a < absorbed; ++a) {
      record_.absorption_steps.push_back(static_cast<std::uint32_t>(record_.sim_steps));
    }
    record_.absorbed = absorbed;
    if (absorbed >= record_.walkers && !record_.full_absorption_step) record_.full_absorption_step = record_.sim_steps;
    if (detail_) {
      std::uint64_t on_mesh = 0;
      for (int j = 0; j < static_cast<int>(c_->tallies.size()); ++j) {
        const std::uint32_t k = c_->counters[j];
        if (k != kNoNeuron) on_mesh += static_cast<std::uint64_t>(state_.potential[k] + kEnableOffset);
      }
      record_.details.push_back({t, cost, route_load_, transfer_load_, absorbed, on_mesh});
    }
    route_load_ = load(c_->counters, kEnableOffset);
    transfer_load_ = 0;
  }

  const CompiledTile* c_;
  TileState state_;
  bool detail_;
  TileRecord record_;
  std::int64_t last_boundary_ = -1;
  std::uint64_t route_load_ = 0;
  std::uint64_t transfer_load_ = 0;
};

// Visit tallies summed into the row of each tile's start node.
inline NodeCounts decode_counts(const SpikingNetwork& net, const std::vector<TileRecord>& tiles) {
  const int n = net.nodes();
  NodeCounts counts(n, net.walkers_per_start());
  for (const TileRecord& r : tiles) {
    if (static_cast<int>(r.tallies.size()) != n) throw ContractViolation("decode_counts: tally count mismatch");
    for (int j = 0; j < n; ++j) counts.at(r.start_node, j) += static_cast<std::uint64_t>(r.tallies[j]);
    counts.unabsorbed[r.start_node] += r.walkers - r.absorbed;
    counts.max_steps_used = std::max(counts.max_steps_used, r.sim_steps);
  }
  return counts;
}

inline SimulationRecord run(const SpikingNetwork& net, std::uint64_t seed, const RunOptions& options) {
  const std::size_t tiles = net.tiles.size();
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(std::max<std::size_t>(tiles, 1))));
  const std::uint64_t budget = options.neural_timesteps;
  const auto& cps = options.checkpoints;
  if (!cps.empty()) {
    if (options.stop_when_all_absorbed) throw std::invalid_argument("run: checkpoints need a fixed budget");
    if (!std::is_sorted(cps.begin(), cps.end()) || cps.back() > budget) {
      throw std::invalid_argument("run: checkpoints must be ascending and within the budget");
    }
  }
  std::vector<std::vector<TileRecord>> at_checkpoint(cps.size(), std::vector<TileRecord>(tiles));

  // Contiguous tile chunks, one spike trace per chunk, so integer sums are
  // independent of scheduling.
  std::vector<std::vector<std::uint64_t>> traces(workers, std::vector<std::uint64_t>(budget, 0));
  std::vector<TileRecord> records(tiles);
  std::vector<std::optional<TileRunner>> paused(tiles);
  std::vector<CompiledTile> compiled_paused(options.stop_when_all_absorbed ? tiles : 0);
  std::vector<std::uint64_t> end_t(tiles, 0);

  auto chunk_range = [&](std::size_t w) {
    return std::pair{tiles * w / workers, tiles * (w + 1) / workers};
  };

  parallel_for(workers, workers, [&](std::size_t w) {
    auto [lo, hi] = chunk_range(w);
    for (std::size_t i = lo; i < hi; ++i) {
      if (options.stop_when_all_absorbed) {
        compiled_paused[i] = compile_tile(net, static_cast<std::uint32_t>(i), seed);
        paused[i].emplace(compiled_paused[i], options.record_step_detail);
        paused[i]->run(budget, true, traces[w].data());
        end_t[i] = paused[i]->neural_t();
      } else {
        const CompiledTile c = compile_tile(net, static_cast<std::uint32_t>(i), seed);
        TileRunner runner(c, options.record_step_detail);
        for (std::size_t k = 0; k < cps.size(); ++k) {
          runner.run(cps[k], false, traces[w].data());
          at_checkpoint[k][i] = runner.snapshot();
        }
        runner.run(budget, false, traces[w].data());
        records[i] = runner.snapshot();
        end_t[i] = runner.neural_t();
      }
    }
  });

  std::uint64_t horizon = budget;
  if (options.stop_when_all_absorbed) {
    horizon = tiles ? *std::max_element(end_t.begin(), end_t.end()) : 0;
    parallel_for(workers, workers, [&](std::size_t w) {
      auto [lo, hi] = chunk_range(w);
      for (std::size_t i = lo; i < hi; ++i) {
        paused[i]->run(horizon, false, traces[w].data());
        records[i] = paused[i]->snapshot();
        paused[i].reset();
      }
    });
  }

  SimulationRecord out;
  out.seed = seed;
  out.neural_steps = horizon;
  out.spikes_in_flight.assign(horizon, 0);
  for (const auto& trace : traces) {
    for (std::uint64_t t = 0; t < horizon; ++t) out.spikes_in_flight[t] += trace[t];
  }
  out.sim_steps_completed = std::numeric_limits<std::uint64_t>::max();
  for (const auto& r : records) {
    out.sim_steps_completed = std::min(out.sim_steps_completed, r.sim_steps);
    out.unabsorbed += r.walkers - r.absorbed;
  }
  if (records.empty()) out.sim_steps_completed = 0;
  out.counts = decode_counts(net, records);
  for (std::size_t k = 0; k < cps.size(); ++k) {
    Checkpoint cp{cps[k], decode_counts(net, at_checkpoint[k]), 0};
    for (const auto& r : at_checkpoint[k]) cp.unabsorbed += r.walkers - r.absorbed;
    out.checkpoints.push_back(std::move(cp));
  }
  out.tiles = std::move(records);
  return out;
}

inline MeshSolution decode_solution(const SimulationRecord& record, const ProblemSpec& spec) {
  if (record.counts.nodes != spec.nodes()) throw ContractViolation("decode_solution: record does not match the mesh");
  return estimate_solution(record.counts, spec);
}

// Raw estimate u_i for the tile's start node from this tile's walkers alone.
inline double tile_raw_estimate(const SpikingNetwork& net, const TileRecord& r) {
  double sum = 0.0;
  for (std::size_t j = 0; j < r.tallies.size(); ++j) {
    sum += static_cast<double>(r.tallies[j]) * (net.problem.length() - net.problem.position(static_cast<int>(j)));
  }
  return -net.problem.forcing() * net.problem.dt() * sum / static_cast<double>(r.walkers);
}

}  // namespace spikewalk::snn
