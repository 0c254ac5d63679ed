#pragma once

// Spiking circuit for the density random walk.
//
// Every tile is an independent copy of the mesh carrying its own walkers.
// Per mesh node j the tile holds seven neurons:
//
//   counter C_j   walkers waiting to move; fires once per neural step while
//                 enabled and non-empty (threshold 1, subtractive reset)
//   buffer B_j    walkers that arrived during the current simulation step
//   gate G_j      probability gate; each spike goes to exactly one of the
//                 three output gates, picked with one uniform draw
//   outputs       L_j, R_j, S_j forward the walker to the buffer (and tally)
//                 of node j-1, j+1 or j. At node 0 both L and R point right;
//                 R_{N-1} points at the sink.
//   tally T_j     no-leak accumulator of post-initialization visits
//
// A simulation step has two phases. In the route phase counters are enabled
// and buffers disabled; in the transfer phase buffers drain one walker per
// neural step into their (disabled) counters. Enabling and disabling shift a
// neuron's potential by kEnableOffset. Phases are sequenced by three
// tile-level supervisor neurons:
//
//   quiet Q   integrates +1 per step (negative leak), is pulled to its floor
//             by every counter or buffer spike, and fires after
//             kQuietWindow silent steps: the current phase is finished
//   parity P  fires on every second Q spike: start the next route phase
//   trigger X fires on the other Q spikes: start the transfer phase
//
// The absorbing side is either a single tally (remove policy) or a tally plus
// a sink counter/buffer pair that keeps re-scanning the absorbed walkers each
// simulation step (accumulate policy).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spikewalk/errors.hpp"
#include "spikewalk/mcwalk.hpp"
#include "spikewalk/problem.hpp"

namespace spikewalk::snn {

using Potential = std::int64_t;

enum class Role : std::uint8_t { counter, buffer, probability_gate, output_gate, supervisor, tally };
enum class Tag : std::uint8_t { none, left, right, stay, quiet, parity, trigger, absorbed };
enum class ResetMode : std::uint8_t { to_value, subtract_threshold };
enum class AbsorbPolicy : std::uint8_t { remove, accumulate };
enum class Rounding : std::uint8_t { nearest, one_sided_down, one_sided_up };

inline constexpr Potential kNoFloor = std::numeric_limits<Potential>::min();
inline constexpr Potential kNeverFires = std::numeric_limits<Potential>::max();
inline constexpr Potential kEnableOffset = Potential{1} << 40;
inline constexpr Potential kBusyInhibition = -(Potential{1} << 50);
inline constexpr Potential kQuietWindow = 4;
inline constexpr std::uint64_t kMaxWalkersPerTile = std::uint64_t{1} << 32;

// Neural steps per simulation step when both phases move m_route and
// m_transfer walkers through the busiest node (both non-zero).
constexpr std::uint64_t step_cost(std::uint64_t m_route, std::uint64_t m_transfer) {
  return m_route + m_transfer + 2 * static_cast<std::uint64_t>(kQuietWindow) + 5;
}

struct NeuronSpec {
  Role role = Role::counter;
  Tag tag = Tag::none;
  Potential threshold = 1;
  Potential leak = 0;  // subtracted after reset each neural step; negative values charge
  Potential reset_potential = 0;
  ResetMode reset = ResetMode::to_value;
  Potential floor = kNoFloor;
  Potential initial_potential = 0;
  // For targets of a probability gate: the probability that the gate routes
  // a spike here. Draws are exclusive across a gate's stochastic targets.
  std::optional<double> stochastic_p;

  friend bool operator==(const NeuronSpec&, const NeuronSpec&) = default;
};

struct SynapseSpec {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  Potential weight = 1;
  std::uint32_t delay = 1;

  friend bool operator==(const SynapseSpec&, const SynapseSpec&) = default;
};

inline constexpr std::int32_t kTileLevel = -1;

// Where a neuron lives: node in [0, N) for mesh sub-circuits, N for the
// absorbing side, kTileLevel for supervisors.
struct NeuronSite {
  std::uint32_t tile = 0;
  std::int32_t node = 0;

  friend bool operator==(const NeuronSite&, const NeuronSite&) = default;
};

struct TileInfo {
  int start_node = 0;
  std::uint64_t walkers = 0;
  std::uint32_t first_neuron = 0;
  std::uint32_t neuron_count = 0;

  friend bool operator==(const TileInfo&, const TileInfo&) = default;
};

// bits == 0 means full double precision.
struct PrecisionConfig {
  int bits = 8;
  Rounding rounding = Rounding::nearest;

  friend bool operator==(const PrecisionConfig&, const PrecisionConfig&) = default;
};

struct SpikingNetwork {
  ProblemSpec problem;
  PrecisionConfig precision;
  StepProbabilities gate_probabilities;
  AbsorbPolicy absorb_policy = AbsorbPolicy::remove;
  std::uint64_t walkers_per_tile = 0;
  std::uint32_t tiles_per_start = 0;
  std::vector<TileInfo> tiles;
  std::vector<NeuronSpec> neurons;
  std::vector<NeuronSite> sites;
  std::vector<SynapseSpec> synapses;  // sorted by (source, target)
  std::vector<std::string> warnings;

  int nodes() const noexcept { return problem.nodes(); }
  std::uint64_t walkers_per_start() const noexcept { return walkers_per_tile * tiles_per_start; }

  friend bool operator==(const SpikingNetwork&, const SpikingNetwork&) = default;
};

// k / 2^bits with k chosen by the rounding mode; nearest rounds ties up.
inline double quantize_probability(double p, int resolution_bits, Rounding rounding) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("quantize_probability: p outside [0, 1]");
  if (resolution_bits < 1 || resolution_bits > 52) {
    throw std::domain_error("quantize_probability: resolution_bits must be in [1, 52]");
  }
  const double scale = std::ldexp(1.0, resolution_bits);
  double k = 0.0;
  switch (rounding) {
    case Rounding::nearest: k = std::floor(p * scale + 0.5); break;
    case Rounding::one_sided_down: k = std::floor(p * scale); break;
    case Rounding::one_sided_up: k = std::ceil(p * scale); break;
  }
  return k / scale;
}

inline bool representable(double p, const PrecisionConfig& precision) {
  if (precision.bits == 0) return true;
  const double scaled = std::ldexp(p, precision.bits);
  return scaled == std::floor(scaled);
}

// Asymmetric effective probabilities left by one-sided rounding.
inline StepProbabilities one_sided_rounding_preset() { return {0.0374, 0.0368, 0.9258}; }

// Probabilities loaded into the gates. Left and right are quantized
// separately; stay takes the remainder so every gate's draw is a partition.
inline StepProbabilities gate_probabilities(const TransitionProbabilities& exact, const PrecisionConfig& precision,
                                            const std::optional<StepProbabilities>& override_probs = std::nullopt) {
  StepProbabilities p = override_probs.value_or(StepProbabilities::symmetric(exact));
  if (precision.bits > 0) {
    p.left = quantize_probability(p.left, precision.bits, precision.rounding);
    p.right = quantize_probability(p.right, precision.bits, precision.rounding);
    p.stay = 1.0 - p.left - p.right;
  }
  p.validate();
  return p;
}

// Local neuron indices inside one tile.
class TileLayout {
 public:
  static constexpr std::uint32_t kPerNode = 7;

  TileLayout(int nodes, AbsorbPolicy policy) : nodes_(static_cast<std::uint32_t>(nodes)), policy_(policy) {}

  std::uint32_t counter(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 0; }
  std::uint32_t buffer(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 1; }
  std::uint32_t gate(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 2; }
  std::uint32_t out_left(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 3; }
  std::uint32_t out_right(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 4; }
  std::uint32_t out_stay(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 5; }
  std::uint32_t tally(int j) const { return kPerNode * static_cast<std::uint32_t>(j) + 6; }

  std::uint32_t absorbed_tally() const { return kPerNode * nodes_; }
  bool has_sink_pair() const { return policy_ == AbsorbPolicy::accumulate; }
  std::uint32_t sink_counter() const { return absorbed_tally() + 1; }
  std::uint32_t sink_buffer() const { return absorbed_tally() + 2; }

  std::uint32_t quiet() const { return absorbed_tally() + (has_sink_pair() ? 3 : 1); }
  std::uint32_t parity() const { return quiet() + 1; }
  std::uint32_t trigger() const { return quiet() + 2; }

  // 7 N + 4 (remove) or 7 N + 6 (accumulate)
  std::uint32_t size() const { return trigger() + 1; }

 private:
  std::uint32_t nodes_;
  AbsorbPolicy policy_;
};

inline std::uint64_t neurons_per_tile(int nodes, AbsorbPolicy policy) { return TileLayout(nodes, policy).size(); }

struct BuildOptions {
  std::uint64_t walkers_per_tile = 100;
  std::uint32_t tiles_per_start = 1;
  std::vector<int> start_nodes;  // empty: every mesh node
  PrecisionConfig precision;
  AbsorbPolicy absorb_policy = AbsorbPolicy::remove;
  std::optional<StepProbabilities> probabilities;  // replaces the Gaussian p_g
};

namespace detail {

inline void append_tile(SpikingNetwork& net, const TileLayout& layout, std::uint32_t tile, int start,
                        std::uint64_t walkers) {
  const int n = net.nodes();
  const auto base = static_cast<std::uint32_t>(net.neurons.size());
  const auto& probs = net.gate_probabilities;

  net.tiles.push_back({start, walkers, base, layout.size()});
  net.neurons.resize(base + layout.size());
  net.sites.resize(base + layout.size());

  auto set = [&](std::uint32_t local, std::int32_t node, NeuronSpec spec) {
    net.neurons[base + local] = spec;
    net.sites[base + local] = {tile, node};
  };
  const NeuronSpec counter{Role::counter, Tag::none, 1, 0, 0, ResetMode::subtract_threshold, kNoFloor, 0, {}};
  const NeuronSpec buffer{Role::buffer, Tag::none, 1, 0, 0, ResetMode::subtract_threshold, kNoFloor, -kEnableOffset, {}};
  const NeuronSpec relay{Role::output_gate, Tag::none, 1, 0, 0, ResetMode::to_value, kNoFloor, 0, {}};
  const NeuronSpec tally{Role::tally, Tag::none, kNeverFires, 0, 0, ResetMode::to_value, kNoFloor, 0, {}};

  for (int j = 0; j < n; ++j) {
    NeuronSpec c = counter;
    if (j == start) c.initial_potential = static_cast<Potential>(walkers);
    set(layout.counter(j), j, c);
    set(layout.buffer(j), j, buffer);
    set(layout.gate(j), j, {Role::probability_gate, Tag::none, 1, 0, 0, ResetMode::to_value, kNoFloor, 0, {}});
    NeuronSpec out = relay;
    out.tag = Tag::left;
    out.stochastic_p = probs.left;
    set(layout.out_left(j), j, out);
    out.tag = Tag::right;
    out.stochastic_p = probs.right;
    set(layout.out_right(j), j, out);
    out.tag = Tag::stay;
    out.stochastic_p = probs.stay;
    set(layout.out_stay(j), j, out);
    set(layout.tally(j), j, tally);
  }
  NeuronSpec absorbed = tally;
  absorbed.tag = Tag::absorbed;
  set(layout.absorbed_tally(), n, absorbed);
  if (layout.has_sink_pair()) {
    set(layout.sink_counter(), n, counter);
    set(layout.sink_buffer(), n, buffer);
  }
  // Q starts where the steady cycle leaves it at a route start.
  set(layout.quiet(), kTileLevel,
      {Role::supervisor, Tag::quiet, kQuietWindow, -1, 0, ResetMode::to_value, 0, kQuietWindow - 2, {}});
  set(layout.parity(), kTileLevel, {Role::supervisor, Tag::parity, 2, 0, 0, ResetMode::to_value, kNoFloor, 0, {}});
  set(layout.trigger(), kTileLevel, {Role::supervisor, Tag::trigger, 1, 0, 0, ResetMode::to_value, kNoFloor, 0, {}});

  auto connect = [&](std::uint32_t from, std::uint32_t to, Potential weight, std::uint32_t delay = 1) {
    net.synapses.push_back({base + from, base + to, weight, delay});
  };
  // Deliver a walker to node d (d == n is the absorbing side).
  auto land = [&](std::uint32_t from, int d) {
    if (d < n) {
      connect(from, layout.buffer(d), 1);
      connect(from, layout.tally(d), 1);
    } else {
      connect(from, layout.absorbed_tally(), 1);
      if (layout.has_sink_pair()) connect(from, layout.sink_buffer(), 1);
    }
  };
  auto phase_wiring = [&](std::uint32_t c, std::uint32_t b) {
    connect(c, layout.quiet(), kBusyInhibition);
    connect(b, layout.quiet(), kBusyInhibition);
    connect(b, c, 1);
    connect(layout.parity(), c, kEnableOffset);
    connect(layout.parity(), b, -kEnableOffset);
    connect(layout.trigger(), c, -kEnableOffset);
    connect(layout.trigger(), b, kEnableOffset);
  };

  for (int j = 0; j < n; ++j) {
    connect(layout.counter(j), layout.gate(j), 1);
    connect(layout.gate(j), layout.out_left(j), 1);
    connect(layout.gate(j), layout.out_right(j), 1);
    connect(layout.gate(j), layout.out_stay(j), 1);
    land(layout.out_left(j), j == 0 ? 1 : j - 1);
    land(layout.out_right(j), j + 1);
    land(layout.out_stay(j), j);
    phase_wiring(layout.counter(j), layout.buffer(j));
  }
  if (layout.has_sink_pair()) {
    connect(layout.sink_counter(), layout.sink_buffer(), 1);
    phase_wiring(layout.sink_counter(), layout.sink_buffer());
  }
  connect(layout.quiet(), layout.parity(), 1);
  connect(layout.quiet(), layout.trigger(), 1, 2);
  connect(layout.parity(), layout.trigger(), -1);
}

}  // namespace detail

inline void sort_synapses(std::vector<SynapseSpec>& synapses) {
  std::stable_sort(synapses.begin(), synapses.end(), [](const SynapseSpec& a, const SynapseSpec& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
}

inline SpikingNetwork build_network(const ProblemSpec& spec, const BuildOptions& options) {
  if (options.walkers_per_tile < 1) throw std::invalid_argument("build_network: walkers_per_tile must be >= 1");
  if (options.walkers_per_tile >= kMaxWalkersPerTile) {
    throw std::invalid_argument("build_network: walkers_per_tile exceeds the counter range");
  }
  if (options.tiles_per_start < 1) throw std::invalid_argument("build_network: tiles must be >= 1");
  if (options.precision.bits < 0 || options.precision.bits > 52) {
    throw std::invalid_argument("build_network: precision bits must be 0 (full) or 1..52");
  }

  std::vector<int> starts = options.start_nodes;
  if (starts.empty()) {
    for (int j = 0; j < spec.nodes(); ++j) starts.push_back(j);
  }
  for (int s : starts) {
    if (s < 0 || s >= spec.nodes()) throw std::invalid_argument("build_network: start node outside the mesh");
  }

  SpikingNetwork net{spec, options.precision,
                     gate_probabilities(spec.probabilities(), options.precision, options.probabilities),
                     options.absorb_policy, options.walkers_per_tile, options.tiles_per_start,
                     {}, {}, {}, {}, {}};
  if (net.gate_probabilities.left != net.gate_probabilities.right) {
    net.warnings.push_back("gate probabilities are asymmetric (left " + std::to_string(net.gate_probabilities.left) +
                           ", right " + std::to_string(net.gate_probabilities.right) +
                           "); the walk drifts and biases the estimate");
  }

  const TileLayout layout(spec.nodes(), options.absorb_policy);
  const auto total_tiles = static_cast<std::uint64_t>(starts.size()) * options.tiles_per_start;
  if (total_tiles * layout.size() > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw std::invalid_argument("build_network: network too large");
  }
  net.neurons.reserve(total_tiles * layout.size());
  net.sites.reserve(total_tiles * layout.size());
  std::uint32_t tile = 0;
  for (int s : starts) {
    for (std::uint32_t k = 0; k < options.tiles_per_start; ++k) {
      detail::append_tile(net, layout, tile++, s, options.walkers_per_tile);
    }
  }
  sort_synapses(net.synapses);
  return net;
}

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::counter: return "counter";
    case Role::buffer: return "buffer";
    case Role::probability_gate: return "probability_gate";
    case Role::output_gate: return "output_gate";
    case Role::supervisor: return "supervisor";
    case Role::tally: return "tally";
  }
  return "?";
}

inline std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::none: return "none";
    case Tag::left: return "left";
    case Tag::right: return "right";
    case Tag::stay: return "stay";
    case Tag::quiet: return "quiet";
    case Tag::parity: return "parity";
    case Tag::trigger: return "trigger";
    case Tag::absorbed: return "absorbed";
  }
  return "?";
}

inline std::string_view to_string(ResetMode m) {
  return m == ResetMode::to_value ? "to_value" : "subtract_threshold";
}

inline std::string_view to_string(AbsorbPolicy p) { return p == AbsorbPolicy::remove ? "remove" : "accumulate"; }

inline std::string_view to_string(Rounding r) {
  switch (r) {
    case Rounding::nearest: return "nearest";
    case Rounding::one_sided_down: return "one_sided_down";
    case Rounding::one_sided_up: return "one_sided_up";
  }
  return "?";
}

template <typename Enum, std::size_t K>
std::optional<Enum> parse_enum(std::string_view text, const Enum (&values)[K]) {
  for (Enum v : values) {
    if (to_string(v) == text) return v;
  }
  return std::nullopt;
}

inline std::optional<Role> parse_role(std::string_view s) {
  static constexpr Role all[] = {Role::counter,     Role::buffer,     Role::probability_gate,
                                 Role::output_gate, Role::supervisor, Role::tally};
  return parse_enum(s, all);
}
inline std::optional<Tag> parse_tag(std::string_view s) {
  static constexpr Tag all[] = {Tag::none, Tag::left, Tag::right, Tag::stay,
                                Tag::quiet, Tag::parity, Tag::trigger, Tag::absorbed};
  return parse_enum(s, all);
}
inline std::optional<ResetMode> parse_reset(std::string_view s) {
  static constexpr ResetMode all[] = {ResetMode::to_value, ResetMode::subtract_threshold};
  return parse_enum(s, all);
}
inline std::optional<AbsorbPolicy> parse_policy(std::string_view s) {
  static constexpr AbsorbPolicy all[] = {AbsorbPolicy::remove, AbsorbPolicy::accumulate};
  return parse_enum(s, all);
}
inline std::optional<Rounding> parse_rounding(std::string_view s) {
  static constexpr Rounding all[] = {Rounding::nearest, Rounding::one_sided_down, Rounding::one_sided_up};
  return parse_enum(s, all);
}

}  // namespace spikewalk::snn
