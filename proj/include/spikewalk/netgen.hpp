#pragma once

// netlist-v1: portable JSON form of a SpikingNetwork. See docs/netlist-v1.md.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "spikewalk/snn/network.hpp"

namespace spikewalk::netgen {

inline constexpr const char* kFormat = "netlist-v1";
inline constexpr const char* kFormatVersion = "1.0.0";

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string location, const std::string& message)
      : std::runtime_error(location.empty() ? message : location + ": " + message), location_(std::move(location)) {}

  // JSON pointer to the offending value; empty for syntax errors.
  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

struct Netlist {
  snn::SpikingNetwork network;
  std::optional<std::uint64_t> seed;
};

namespace detail {

using nlohmann::json;

inline json optional_potential(snn::Potential v, snn::Potential none) { return v == none ? json(nullptr) : json(v); }

inline json problem_json(const ProblemSpec& p) {
  return {{"length", p.length()}, {"forcing", p.forcing()}, {"dx", p.dx()},
          {"dt", p.dt()},         {"threshold_c", p.threshold()}, {"nodes", p.nodes()}};
}

}  // namespace detail

inline nlohmann::json to_json(const snn::SpikingNetwork& net, std::optional<std::uint64_t> seed = std::nullopt) {
  using nlohmann::json;
  json metadata = {
      {"problem", detail::problem_json(net.problem)},
      {"tiles", net.tiles.size()},
      {"tiles_per_start", net.tiles_per_start},
      {"walkers_per_tile", net.walkers_per_tile},
      {"absorb_policy", snn::to_string(net.absorb_policy)},
      {"precision", {{"bits", net.precision.bits}, {"rounding", snn::to_string(net.precision.rounding)}}},
      {"probabilities",
       {{"left", net.gate_probabilities.left}, {"right", net.gate_probabilities.right}, {"stay", net.gate_probabilities.stay}}},
      {"seed", seed ? json(*seed) : json(nullptr)},
      {"warnings", net.warnings},
  };

  json tiles = json::array();
  for (std::size_t i = 0; i < net.tiles.size(); ++i) {
    const auto& t = net.tiles[i];
    tiles.push_back({{"id", i},
                     {"start_node", t.start_node},
                     {"walkers", t.walkers},
                     {"first_neuron", t.first_neuron},
                     {"neuron_count", t.neuron_count}});
  }

  json neurons = json::array();
  for (std::size_t k = 0; k < net.neurons.size(); ++k) {
    const auto& n = net.neurons[k];
    neurons.push_back({
        {"id", k},
        {"tile", net.sites[k].tile},
        {"node", net.sites[k].node},
        {"role", snn::to_string(n.role)},
        {"tag", snn::to_string(n.tag)},
        {"threshold", detail::optional_potential(n.threshold, snn::kNeverFires)},
        {"leak", n.leak},
        {"reset", snn::to_string(n.reset)},
        {"reset_potential", n.reset_potential},
        {"floor", detail::optional_potential(n.floor, snn::kNoFloor)},
        {"initial_potential", n.initial_potential},
        {"stochastic_p", n.stochastic_p ? json(*n.stochastic_p) : json(nullptr)},
        {"precision_bits", net.precision.bits},
    });
  }

  json synapses = json::array();
  for (const auto& s : net.synapses) {
    synapses.push_back({{"source", s.source}, {"target", s.target}, {"weight", s.weight}, {"delay", s.delay}});
  }

  return {{"format", kFormat},   {"format_version", kFormatVersion}, {"metadata", std::move(metadata)},
          {"tiles", std::move(tiles)}, {"neurons", std::move(neurons)}, {"synapses", std::move(synapses)}};
}

// Canonical text: sorted keys, compact, trailing newline.
inline std::string export_netlist(const snn::SpikingNetwork& net, std::optional<std::uint64_t> seed = std::nullopt) {
  return to_json(net, seed).dump() + "\n";
}

namespace detail {

// Typed field access that reports failures as JSON pointers.
class Reader {
 public:
  const json& at(const json& obj, const std::string& ptr, const char* key) const {
    if (!obj.is_object()) throw ParseError(ptr, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(ptr + "/" + key, "missing required field");
    return *it;
  }

  std::string string(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = at(obj, ptr, key);
    if (!v.is_string()) throw ParseError(ptr + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  double number(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = at(obj, ptr, key);
    if (!v.is_number()) throw ParseError(ptr + "/" + key, "expected a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = at(obj, ptr, key);
    if (!v.is_number_integer()) throw ParseError(ptr + "/" + key, "expected an integer");
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      throw ParseError(ptr + "/" + key, "integer out of range");
    }
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = at(obj, ptr, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ParseError(ptr + "/" + key, "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::uint32_t index(const json& obj, const std::string& ptr, const char* key) const {
    const std::uint64_t v = unsigned_integer(obj, ptr, key);
    if (v > UINT32_MAX) throw ParseError(ptr + "/" + key, "index out of range");
    return static_cast<std::uint32_t>(v);
  }

  std::optional<std::int64_t> nullable_integer(const json& obj, const std::string& ptr, const char* key) const {
    if (at(obj, ptr, key).is_null()) return std::nullopt;
    return integer(obj, ptr, key);
  }

  template <typename Parse>
  auto enumeration(const json& obj, const std::string& ptr, const char* key, Parse parse) const {
    const std::string text = string(obj, ptr, key);
    auto v = parse(text);
    if (!v) throw ParseError(ptr + "/" + key, "unknown value '" + text + "'");
    return *v;
  }

  const json& array(const json& obj, const std::string& ptr, const char* key) const {
    const json& v = at(obj, ptr, key);
    if (!v.is_array()) throw ParseError(ptr + "/" + key, "expected an array");
    return v;
  }
};

}  // namespace detail

inline Netlist import_netlist(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  const detail::Reader r;

  if (r.string(root, "", "format") != kFormat) throw ParseError("/format", "unsupported format");
  const std::string version = r.string(root, "", "format_version");
  if (version.rfind("1.", 0) != 0) throw ParseError("/format_version", "unsupported version " + version);

  const json& meta = r.at(root, "", "metadata");
  const json& pj = r.at(meta, "/metadata", "problem");
  std::optional<ProblemSpec> problem;
  try {
    problem = ProblemSpec::create(r.number(pj, "/metadata/problem", "length"),
                                  r.number(pj, "/metadata/problem", "forcing"),
                                  r.number(pj, "/metadata/problem", "dx"), r.number(pj, "/metadata/problem", "dt"),
                                  r.number(pj, "/metadata/problem", "threshold_c"));
  } catch (const std::invalid_argument& e) {
    throw ParseError("/metadata/problem", e.what());
  }
  if (r.integer(pj, "/metadata/problem", "nodes") != problem->nodes()) {
    throw ParseError("/metadata/problem/nodes", "does not match length / dx");
  }

  const json& prec = r.at(meta, "/metadata", "precision");
  snn::PrecisionConfig precision{static_cast<int>(r.integer(prec, "/metadata/precision", "bits")),
                                 r.enumeration(prec, "/metadata/precision", "rounding", snn::parse_rounding)};
  if (precision.bits < 0 || precision.bits > 52) throw ParseError("/metadata/precision/bits", "must be 0..52");

  const json& pr = r.at(meta, "/metadata", "probabilities");
  StepProbabilities probs{r.number(pr, "/metadata/probabilities", "left"), r.number(pr, "/metadata/probabilities", "right"),
                          r.number(pr, "/metadata/probabilities", "stay")};
  try {
    probs.validate();
  } catch (const std::exception& e) {
    throw ParseError("/metadata/probabilities", e.what());
  }

  snn::SpikingNetwork net{*problem,
                          precision,
                          probs,
                          r.enumeration(meta, "/metadata", "absorb_policy", snn::parse_policy),
                          r.unsigned_integer(meta, "/metadata", "walkers_per_tile"),
                          r.index(meta, "/metadata", "tiles_per_start"),
                          {}, {}, {}, {}, {}};
  for (const auto& w : r.array(meta, "/metadata", "warnings")) {
    if (!w.is_string()) throw ParseError("/metadata/warnings", "expected strings");
    net.warnings.push_back(w.get<std::string>());
  }
  std::optional<std::uint64_t> seed;
  if (!r.at(meta, "/metadata", "seed").is_null()) seed = r.unsigned_integer(meta, "/metadata", "seed");

  const json& tiles = r.array(root, "", "tiles");
  if (r.unsigned_integer(meta, "/metadata", "tiles") != tiles.size()) {
    throw ParseError("/metadata/tiles", "does not match the tile list");
  }
  std::uint32_t expected_first = 0;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const std::string ptr = "/tiles/" + std::to_string(i);
    const json& t = tiles[i];
    if (r.unsigned_integer(t, ptr, "id") != i) throw ParseError(ptr + "/id", "tile ids must be 0..n-1 in order");
    snn::TileInfo info{static_cast<int>(r.integer(t, ptr, "start_node")), r.unsigned_integer(t, ptr, "walkers"),
                       r.index(t, ptr, "first_neuron"), r.index(t, ptr, "neuron_count")};
    if (info.start_node < 0 || info.start_node >= problem->nodes()) {
      throw ParseError(ptr + "/start_node", "outside the mesh");
    }
    if (info.first_neuron != expected_first) throw ParseError(ptr + "/first_neuron", "tiles must be contiguous");
    expected_first += info.neuron_count;
    net.tiles.push_back(info);
  }

  const json& neurons = r.array(root, "", "neurons");
  if (neurons.size() != expected_first) throw ParseError("/neurons", "count does not match the tiles");
  net.neurons.reserve(neurons.size());
  net.sites.reserve(neurons.size());
  std::uint32_t tile = 0;
  for (std::size_t k = 0; k < neurons.size(); ++k) {
    const std::string ptr = "/neurons/" + std::to_string(k);
    const json& n = neurons[k];
    if (r.unsigned_integer(n, ptr, "id") != k) throw ParseError(ptr + "/id", "neuron ids must be 0..n-1 in order");
    while (tile + 1 < net.tiles.size() && k >= net.tiles[tile + 1].first_neuron) ++tile;
    const std::uint32_t declared_tile = r.index(n, ptr, "tile");
    if (declared_tile != tile) throw ParseError(ptr + "/tile", "neuron lies outside its tile's range");
    const auto node = r.integer(n, ptr, "node");
    if (node < snn::kTileLevel || node > problem->nodes()) throw ParseError(ptr + "/node", "outside the mesh");

    snn::NeuronSpec spec;
    spec.role = r.enumeration(n, ptr, "role", snn::parse_role);
    spec.tag = r.enumeration(n, ptr, "tag", snn::parse_tag);
    spec.threshold = r.nullable_integer(n, ptr, "threshold").value_or(snn::kNeverFires);
    spec.leak = r.integer(n, ptr, "leak");
    spec.reset = r.enumeration(n, ptr, "reset", snn::parse_reset);
    spec.reset_potential = r.integer(n, ptr, "reset_potential");
    spec.floor = r.nullable_integer(n, ptr, "floor").value_or(snn::kNoFloor);
    spec.initial_potential = r.integer(n, ptr, "initial_potential");
    if (!r.at(n, ptr, "stochastic_p").is_null()) {
      const double p = r.number(n, ptr, "stochastic_p");
      const snn::PrecisionConfig own{static_cast<int>(r.integer(n, ptr, "precision_bits")), precision.rounding};
      if (!(p >= 0.0 && p <= 1.0)) throw ParseError(ptr + "/stochastic_p", "must lie in [0, 1]");
      if (!snn::representable(p, own)) throw ParseError(ptr + "/stochastic_p", "not representable at precision_bits");
      spec.stochastic_p = p;
    }
    net.neurons.push_back(spec);
    net.sites.push_back({tile, static_cast<std::int32_t>(node)});
  }

  const json& synapses = r.array(root, "", "synapses");
  net.synapses.reserve(synapses.size());
  for (std::size_t i = 0; i < synapses.size(); ++i) {
    const std::string ptr = "/synapses/" + std::to_string(i);
    const json& s = synapses[i];
    snn::SynapseSpec syn{r.index(s, ptr, "source"), r.index(s, ptr, "target"), r.integer(s, ptr, "weight"),
                         r.index(s, ptr, "delay")};
    if (syn.source >= net.neurons.size()) throw ParseError(ptr + "/source", "dangling endpoint");
    if (syn.target >= net.neurons.size()) throw ParseError(ptr + "/target", "dangling endpoint");
    if (net.sites[syn.source].tile != net.sites[syn.target].tile) throw ParseError(ptr, "synapse crosses tiles");
    if (syn.delay < 1) throw ParseError(ptr + "/delay", "must be >= 1");
    net.synapses.push_back(syn);
  }
  snn::sort_synapses(net.synapses);
  return {std::move(net), seed};
}

}  // namespace spikewalk::netgen
