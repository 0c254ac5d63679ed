#include <gtest/gtest.h>

#include <algorithm>
#include <functional>

#include <json.hpp>

#include "spikewalk/netgen.hpp"
#include "spikewalk/snn/engine.hpp"

namespace {

using namespace spikewalk;
using nlohmann::json;

snn::SpikingNetwork small_network(snn::AbsorbPolicy policy = snn::AbsorbPolicy::remove) {
  snn::BuildOptions o;
  o.walkers_per_tile = 12;
  o.tiles_per_start = 2;
  o.absorb_policy = policy;
  return snn::build_network(ProblemSpec::create(0.25, 3.0, 0.05, 1e-4), o);
}

std::string location_of(const std::string& text) {
  try {
    netgen::import_netlist(text);
  } catch (const netgen::ParseError& e) {
    return e.location();
  }
  return "no error";
}

std::string mutate(const std::function<void(json&)>& edit) {
  json doc = json::parse(netgen::export_netlist(small_network(), 9));
  edit(doc);
  return doc.dump();
}

TEST(Export, MinimalNetworkHasOneSubcircuit) {
  snn::BuildOptions o;
  o.walkers_per_tile = 1;
  const auto net = snn::build_network(ProblemSpec::create(0.05, 3.0, 0.05, 1e-4), o);
  const json doc = json::parse(netgen::export_netlist(net));
  EXPECT_EQ(doc["tiles"].size(), 1u);
  EXPECT_EQ(doc["neurons"].size(), 11u);
  int counters = 0;
  for (const auto& n : doc["neurons"]) counters += n["role"] == "counter";
  EXPECT_EQ(counters, 1);
  EXPECT_EQ(doc["format"], "netlist-v1");
  EXPECT_TRUE(doc["metadata"]["seed"].is_null());
}

TEST(Export, NeuronCountFollowsTheFormula) {
  snn::BuildOptions o;
  o.walkers_per_tile = 100;
  o.start_nodes = {0};
  for (auto policy : {snn::AbsorbPolicy::remove, snn::AbsorbPolicy::accumulate}) {
    o.absorb_policy = policy;
    const json doc = json::parse(netgen::export_netlist(snn::build_network(reference_problem(), o)));
    const std::size_t extra = policy == snn::AbsorbPolicy::remove ? 4 : 6;
    EXPECT_EQ(doc["neurons"].size(), 7u * 40u + extra);
  }
  o.start_nodes = {};
  o.tiles_per_start = 2;
  o.walkers_per_tile = 5;
  o.absorb_policy = snn::AbsorbPolicy::remove;
  const json doc = json::parse(netgen::export_netlist(snn::build_network(ProblemSpec::create(0.25, 3, 0.05, 1e-4), o)));
  EXPECT_EQ(doc["neurons"].size(), 10u * (7u * 5u + 4u));
}

TEST(Export, CanonicalAndDeterministic) {
  const auto a = netgen::export_netlist(small_network(), 3);
  EXPECT_EQ(a, netgen::export_netlist(small_network(), 3));
  const json doc = json::parse(a);
  std::vector<std::string> keys;
  for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  const auto& syn = doc["synapses"];
  for (std::size_t i = 1; i < syn.size(); ++i) {
    const auto prev = std::pair{syn[i - 1]["source"].get<int>(), syn[i - 1]["target"].get<int>()};
    const auto cur = std::pair{syn[i]["source"].get<int>(), syn[i]["target"].get<int>()};
    EXPECT_LT(prev, cur);
  }
}

TEST(RoundTrip, ExportImportExportIsByteIdentical) {
  for (auto policy : {snn::AbsorbPolicy::remove, snn::AbsorbPolicy::accumulate}) {
    const auto net = small_network(policy);
    const auto text = netgen::export_netlist(net, 77);
    const auto back = netgen::import_netlist(text);
    EXPECT_EQ(back.network, net);
    EXPECT_EQ(back.seed, std::optional<std::uint64_t>(77));
    EXPECT_EQ(netgen::export_netlist(back.network, back.seed), text);
  }
}

TEST(RoundTrip, FullPrecisionAndPresetProbabilitiesSurvive) {
  snn::BuildOptions o;
  o.walkers_per_tile = 3;
  o.precision.bits = 0;
  o.probabilities = snn::one_sided_rounding_preset();
  const auto net = snn::build_network(ProblemSpec::create(0.25, 3.0, 0.05, 1e-4), o);
  const auto back = netgen::import_netlist(netgen::export_netlist(net));
  EXPECT_EQ(back.network, net);
  EXPECT_FALSE(back.network.warnings.empty());
}

TEST(RoundTrip, ImportedNetworkRunsIdentically) {
  const auto net = small_network();
  const auto back = netgen::import_netlist(netgen::export_netlist(net)).network;
  snn::RunOptions ro;
  ro.neural_timesteps = 20000;
  ro.record_step_detail = true;
  EXPECT_EQ(snn::run(net, 5, ro), snn::run(back, 5, ro));
}

TEST(Import, AcceptsUnsortedSynapses) {
  const auto text = mutate([](json& d) { std::reverse(d["synapses"].begin(), d["synapses"].end()); });
  EXPECT_EQ(netgen::import_netlist(text).network, small_network());
}

TEST(Import, ErrorsCarryLocations) {
  EXPECT_EQ(location_of("{not json"), "");
  EXPECT_EQ(location_of(mutate([](json& d) { d["format"] = "netlist-v0"; })), "/format");
  EXPECT_EQ(location_of(mutate([](json& d) { d["format_version"] = "2.0.0"; })), "/format_version");
  EXPECT_EQ(location_of(mutate([](json& d) { d["synapses"][4]["target"] = 100000; })), "/synapses/4/target");
  EXPECT_EQ(location_of(mutate([](json& d) { d["synapses"][2]["source"] = -1; })), "/synapses/2/source");
  EXPECT_EQ(location_of(mutate([](json& d) { d["synapses"][0]["delay"] = 0; })), "/synapses/0/delay");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3].erase("leak"); })), "/neurons/3/leak");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3]["role"] = "dendrite"; })), "/neurons/3/role");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3]["id"] = 4; })), "/neurons/3/id");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3]["tile"] = 1; })), "/neurons/3/tile");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3]["threshold"] = "high"; })), "/neurons/3/threshold");
  EXPECT_EQ(location_of(mutate([](json& d) { d["neurons"][3]["stochastic_p"] = 0.3; })), "/neurons/3/stochastic_p");
  EXPECT_EQ(location_of(mutate([](json& d) { d["tiles"][1]["first_neuron"] = 3; })), "/tiles/1/first_neuron");
  EXPECT_EQ(location_of(mutate([](json& d) { d["metadata"]["problem"]["dt"] = 0.01; })), "/metadata/problem");
  EXPECT_EQ(location_of(mutate([](json& d) { d["metadata"]["absorb_policy"] = "keep"; })), "/metadata/absorb_policy");
  EXPECT_EQ(location_of(mutate([](json& d) { d.erase("synapses"); })), "/synapses");
}

TEST(Import, RejectsCrossTileSynapses) {
  const auto text = mutate([](json& d) {
    d["synapses"][0]["target"] = d["tiles"][1]["first_neuron"];
  });
  EXPECT_EQ(location_of(text), "/synapses/0");
}

}  // namespace
