#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "spikewalk/bench.hpp"

namespace {

using namespace spikewalk;
using namespace spikewalk::bench;

ProblemSpec wire(double length) { return ProblemSpec::create(length, 3.0, 0.05, 1e-4); }

TEST(MovingAverage, ConstantIdentityAndRamp) {
  EXPECT_EQ(moving_average(std::vector<int>{4, 4, 4, 4, 4}, 3), (std::vector<double>{4, 4, 4, 4, 4}));
  EXPECT_EQ(moving_average(std::vector<int>{3, 1, 4, 1, 5}, 1), (std::vector<double>{3, 1, 4, 1, 5}));
  EXPECT_EQ(moving_average(std::vector<int>{1, 2, 3, 4}, 2), (std::vector<double>{1, 1.5, 2.5, 3.5}));
  EXPECT_EQ(moving_average(std::vector<int>{2, 4, 6, 8, 10}, 25), (std::vector<double>{2, 3, 4, 5, 6}));
  EXPECT_TRUE(moving_average(std::vector<int>{}, 25).empty());
  EXPECT_THROW(moving_average(std::vector<int>{1}, 0), std::invalid_argument);
}

TEST(ErrorReport, ZeroForTheAnalyticCurveAndHandValuesForAnOffset) {
  const auto spec = wire(0.5);
  MeshSolution exact;
  for (int j = 0; j < spec.nodes(); ++j) exact.u.push_back(analytic_solution(spec, spec.position(j)));
  const auto zero = error_report(exact, spec);
  EXPECT_EQ(zero.rmse, 0.0);
  EXPECT_EQ(zero.max_abs, 0.0);
  EXPECT_EQ(zero.signed_bias, 0.0);

  MeshSolution shifted = exact;
  for (auto& v : shifted.u) v += 0.1;
  shifted.u[3] -= 0.4;  // one node at -0.3
  const auto r = error_report(shifted, spec);
  EXPECT_NEAR(r.max_abs, 0.3, 1e-12);
  EXPECT_NEAR(r.rmse, std::sqrt((9 * 0.01 + 0.09) / 10.0), 1e-12);
  EXPECT_NEAR(r.signed_bias, (0.9 - 0.3) / 10.0, 1e-12);
  EXPECT_LE(r.rmse, r.max_abs);

  shifted.u.pop_back();
  EXPECT_THROW(error_report(shifted, spec), ContractViolation);
}

TEST(Stats, SpearmanAgainstReferenceValues) {
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
  EXPECT_NEAR(spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}), 0.8207826816681233, 1e-12);
  EXPECT_NEAR(spearman({3, 1, 4, 1, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8, 1, 8}), 0.19885368120992467, 1e-12);
  EXPECT_THROW(spearman({1, 1}, {1, 2}), NumericError);
}

TEST(Stats, LinearFitRecoversALine) {
  const auto fit = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(fit.slope, 2.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
  EXPECT_THROW(linear_fit({1, 1}, {1, 2}), NumericError);
}

TEST(Stats, ChiSquareAgainstReferenceValues) {
  const auto a = chi_square_homogeneity({{10, 20}, {20, 10}});
  EXPECT_NEAR(a.statistic, 6.666666666666667, 1e-12);
  EXPECT_EQ(a.dof, 1u);
  EXPECT_NEAR(a.p_value, 0.009823274507519235, 1e-12);

  // Empty columns do not count towards the degrees of freedom.
  const auto b = chi_square_homogeneity({{12, 5, 0, 9}, {7, 11, 0, 4}, {3, 8, 0, 15}});
  EXPECT_NEAR(b.statistic, 13.824735870190414, 1e-10);
  EXPECT_EQ(b.dof, 4u);
  EXPECT_NEAR(b.p_value, 0.007875954947627165, 1e-12);

  EXPECT_THROW(chi_square_homogeneity({{1, 2}}), std::invalid_argument);
}

TEST(Stats, HistogramAndMedian) {
  EXPECT_EQ(histogram({0.5, 1, 1.5, 2, 7, -1}, {0, 1, 2}), (std::vector<std::uint64_t>{1, 2, 2}));
  EXPECT_EQ(median({3, 1, 2}), 2.0);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
}

TEST(TimestepRatio, EmptyTileHasAConstantRatio) {
  auto net = snn::build_network(wire(0.5), {.walkers_per_tile = 1, .start_nodes = {2}});
  net.neurons[snn::TileLayout(10, snn::AbsorbPolicy::remove).counter(2)].initial_potential = 0;
  net.tiles[0].walkers = 0;
  snn::RunOptions ro;
  ro.neural_timesteps = 1000;
  const auto rec = snn::run(net, 1, ro);
  const auto ratio = timestep_ratio(rec);
  EXPECT_EQ(ratio.mean, 2.0 * snn::kQuietWindow);
  EXPECT_EQ(ratio.std, 0.0);
  EXPECT_EQ(rec.sim_steps_completed, 1000u / (2 * snn::kQuietWindow));
  for (int j = 0; j < 10; ++j) EXPECT_EQ(rec.counts.at(2, j), 0u);

  ro.neural_timesteps = 5;
  EXPECT_THROW(timestep_ratio(snn::run(net, 1, ro)), std::invalid_argument);
}

TEST(TimestepRatio, AccumulateGrowsWithTheSinkWhileRemoveStaysBounded) {
  snn::BuildOptions o{.walkers_per_tile = 60, .start_nodes = {8}};
  snn::RunOptions ro{.neural_timesteps = 400000, .record_step_detail = true};
  const auto remove = snn::run(snn::build_network(wire(0.5), o), 12, ro);
  o.absorb_policy = snn::AbsorbPolicy::accumulate;
  const auto accumulate = snn::run(snn::build_network(wire(0.5), o), 12, ro);

  EXPECT_GT(timestep_ratio(accumulate).mean, timestep_ratio(remove).mean);
  std::vector<double> sink, cost;
  for (const auto& d : accumulate.tiles[0].details) {
    sink.push_back(static_cast<double>(d.absorbed_total));
    cost.push_back(static_cast<double>(d.cost));
  }
  EXPECT_GT(spearman(sink, cost), 0.5);
  EXPECT_LE(remove.tiles[0].cost.max, snn::step_cost(60, 60));
}

TEST(Report, ConsistentWithTheRecord) {
  const BenchConfig config{wire(0.5), {.walkers_per_tile = 20, .tiles_per_start = 2}, {.neural_timesteps = 30000}};
  const auto run = timed_run(config, 3);
  const auto& r = run.report;
  EXPECT_LE(r.errors.rmse, r.errors.max_abs);
  EXPECT_EQ(r.spikes_in_flight_ma.size(), run.record.spikes_in_flight.size());
  EXPECT_EQ(r.neural_steps, 30000u);
  ASSERT_TRUE(r.ratio.has_value());
  EXPECT_EQ(r.absorption.size(), 10u);
  for (const auto& a : r.absorption) EXPECT_EQ(a.tiles, 2u);
  EXPECT_GE(r.wall_clock.run, 0.0);
}

TEST(Sweep, OneRunPerValueWithDistinctSeeds) {
  const BenchConfig base{wire(0.25), {.walkers_per_tile = 10}, {.neural_timesteps = 20000}};
  const auto rows = scaling_sweep(SweepAxis::neural_steps, {5000, 10000, 20000}, base, 42);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NE(rows[0].seed, rows[1].seed);
  for (const auto& row : rows) EXPECT_EQ(row.report.neural_steps, row.value);

  const auto tiles = scaling_sweep(SweepAxis::tiles, {1, 3}, base, 42);
  EXPECT_EQ(tiles[1].report.absorption.front().tiles, 3u);
  const auto walkers = scaling_sweep(SweepAxis::walkers, {5}, base, 42);
  EXPECT_EQ(walkers.size(), 1u);

  EXPECT_THROW(scaling_sweep(SweepAxis::tiles, {}, base, 1), std::invalid_argument);
  EXPECT_EQ(parse_axis("walkers"), SweepAxis::walkers);
  EXPECT_FALSE(parse_axis("cores").has_value());
}

// Splitting a fixed walker budget over more tiles leaves the per-walker
// absorption-time distribution unchanged and shortens simulation steps.
TEST(Properties, TilingPreservesDistributionAndCutsStepCost) {
  const auto spec = wire(0.5);
  const std::uint64_t total = 400;
  std::vector<std::vector<std::uint64_t>> table;
  std::vector<double> mean_cost;
  std::vector<std::uint64_t> max_load;
  const std::vector<double> edges{0, 100, 200, 400, 700, 1000, 1500, 2500, 4000};
  for (std::uint32_t tiles : {1u, 4u, 20u}) {
    snn::BuildOptions o{.walkers_per_tile = total / tiles, .tiles_per_start = tiles, .start_nodes = {4}};
    snn::RunOptions ro{.neural_timesteps = 50'000'000, .stop_when_all_absorbed = true, .record_step_detail = true};
    const auto rec = snn::run(snn::build_network(spec, o), 100 + tiles, ro);
    ASSERT_EQ(rec.unabsorbed, 0u);
    std::vector<double> times;
    std::uint64_t load = 0;
    snn::CostStats cost;
    for (const auto& t : rec.tiles) {
      for (auto s : t.absorption_steps) times.push_back(s);
      for (const auto& d : t.details) {
        if (d.absorbed_total < t.walkers) cost.add(d.cost);
        load = std::max(load, d.route_load);
      }
    }
    table.push_back(histogram(times, edges));
    mean_cost.push_back(cost.mean());
    max_load.push_back(load);
  }
  EXPECT_GT(chi_square_homogeneity(table).p_value, 0.01);
  EXPECT_GT(mean_cost[0], mean_cost[1]);
  EXPECT_GT(mean_cost[1], mean_cost[2]);
  EXPECT_GT(max_load[0], max_load[1]);
  EXPECT_GT(max_load[1], max_load[2]);
}

// Under accumulation, starts near the sink fill the sink early and complete
// fewer simulation steps within a fixed neural budget.
TEST(Properties, AccumulateStepsDecreaseTowardTheSink) {
  snn::BuildOptions o{.walkers_per_tile = 100, .absorb_policy = snn::AbsorbPolicy::accumulate};
  snn::RunOptions ro{.neural_timesteps = 200000};
  const auto rec = snn::run(snn::build_network(wire(0.5), o), 77, ro);
  std::vector<double> start, steps;
  for (const auto& t : rec.tiles) {
    start.push_back(t.start_node);
    steps.push_back(static_cast<double>(t.sim_steps));
  }
  EXPECT_LT(spearman(start, steps), 0.0);
}

}  // namespace
