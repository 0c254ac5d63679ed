#pragma once

// Direct Monte Carlo execution of the reflecting/absorbing walk on the
// midpoint mesh, the visit-count estimator, and an exact fundamental-matrix
// oracle for small meshes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spikewalk/errors.hpp"
#include "spikewalk/parallel.hpp"
#include "spikewalk/problem.hpp"
#include "spikewalk/rng.hpp"

namespace spikewalk {

// Per-step move probabilities. The symmetric walk has left == right == p_g;
// asymmetric values model hardware that cannot express p_g exactly.
struct StepProbabilities {
  double left = 0.0;
  double right = 0.0;
  double stay = 1.0;

  static StepProbabilities symmetric(const TransitionProbabilities& p) {
    return {p.p_go, p.p_go, p.p_stay};
  }

  void validate() const {
    if (!(left >= 0.0 && right >= 0.0 && stay >= 0.0) || !(left + right > 0.0)) {
      throw std::invalid_argument("step probabilities must be non-negative with left + right > 0");
    }
    if (std::abs(left + right + stay - 1.0) > 1e-12) {
      std::ostringstream msg;
      msg << "step probabilities sum to " << (left + right + stay) << ", expected 1";
      throw std::invalid_argument(msg.str());
    }
  }

  friend bool operator==(const StepProbabilities&, const StepProbabilities&) = default;
};

inline constexpr int kAbsorbed = -1;

struct WalkerState {
  int node = 0;
  std::uint64_t steps_taken = 0;

  bool absorbed() const noexcept { return node == kAbsorbed; }
};

// Draw partition per node:
//   interior      [0, left) left | [left, left+right) right  | rest stay
//   node 0        [0, left+right) right                       | rest stay
//   node N-1      [0, left) left | [left, left+right) absorb | rest stay
// Node 0 takes precedence when N == 1, so its rightward move is absorption.
inline WalkerState step_walker(WalkerState state, const StepProbabilities& probs, int n_nodes,
                               double draw) {
  if (state.absorbed()) throw ContractViolation("step_walker: walker is already absorbed");
  if (state.node < 0 || state.node >= n_nodes) {
    throw ContractViolation("step_walker: node index outside the mesh");
  }
  const double move = probs.left + probs.right;
  int next = state.node;
  if (state.node == 0) {
    if (draw < move) next = 1;
  } else if (draw < probs.left) {
    next = state.node - 1;
  } else if (draw < move) {
    next = state.node + 1;
  }
  if (next == n_nodes) next = kAbsorbed;
  return {next, state.steps_taken + 1};
}

// 10 x the mean absorption time from x = 0, in steps.
inline std::uint64_t default_max_steps(const ProblemSpec& spec) {
  return static_cast<std::uint64_t>(std::ceil(10.0 * expected_stopping_time(spec, 0.0) / spec.dt()));
}

// Outcome of the walkers released from one start node.
struct WalkRow {
  int start = 0;
  std::uint64_t walkers = 0;
  std::uint64_t max_steps = 0;
  std::vector<std::uint64_t> visits;  // n_ij, initialization excluded
  std::vector<double> visits_sq;      // sum over walkers of (per-walker visits to j)^2
  double path_sq = 0.0;               // sum over walkers of (sum_j visits_j (l - x_j))^2
  std::vector<std::uint64_t> absorption_steps;  // per walker; max_steps if never absorbed
  std::vector<std::uint8_t> absorbed;           // per walker; distinguishes the sentinel
  std::uint64_t unabsorbed = 0;
};

inline WalkRow run_walkers(const ProblemSpec& spec, const StepProbabilities& probs, int start_index,
                           std::uint64_t walkers, std::uint64_t seed, std::uint64_t max_steps,
                           unsigned workers = 1) {
  const int n = spec.nodes();
  if (start_index < 0 || start_index >= n) throw ContractViolation("run_walkers: start node outside the mesh");
  if (walkers < 1) throw ContractViolation("run_walkers: need at least one walker");
  if (max_steps < 1) throw ContractViolation("run_walkers: max_steps must be at least 1");
  probs.validate();

  const std::uint64_t start_stream = derive_stream(seed, StreamTag::start, static_cast<std::uint64_t>(start_index));
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) weight[j] = spec.length() - spec.position(j);

  WalkRow row;
  row.start = start_index;
  row.walkers = walkers;
  row.max_steps = max_steps;
  row.absorption_steps.assign(walkers, max_steps);
  row.absorbed.assign(walkers, 0);

  constexpr std::uint64_t kBlock = 1024;
  const std::uint64_t blocks = (walkers + kBlock - 1) / kBlock;
  struct Partial {
    std::vector<std::uint64_t> visits;
    std::vector<double> visits_sq;
    double path_sq = 0.0;
    std::uint64_t unabsorbed = 0;
  };
  std::vector<Partial> partials(blocks);

  // u < p  <=>  (bits >> 11) < ceil(p * 2^53), so the hot loop compares integers.
  auto cut = [](double p) { return static_cast<std::uint64_t>(std::ceil(std::ldexp(p, 53))); };
  const std::uint64_t left = cut(probs.left);
  const std::uint64_t move = cut(probs.left + probs.right);

  parallel_for(blocks, workers, [&](std::size_t b) {
    Partial& part = partials[b];
    part.visits.assign(static_cast<std::size_t>(n), 0);
    part.visits_sq.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<std::uint64_t> local(static_cast<std::size_t>(n), 0);

    const std::uint64_t first = b * kBlock;
    const std::uint64_t last = std::min(walkers, first + kBlock);
    for (std::uint64_t w = first; w < last; ++w) {
      std::fill(local.begin(), local.end(), 0);
      SplitMix64 rng(derive_stream(start_stream, StreamTag::walker, w));
      int node = start_index;
      std::uint64_t steps = 0;
      bool absorbed = false;
      // Same partition as step_walker, inlined for the hot loop.
      while (steps < max_steps) {
        const std::uint64_t u = rng() >> 11;
        ++steps;
        if (node == 0) {
          if (u < move) node = 1;
        } else if (u < left) {
          --node;
        } else if (u < move) {
          ++node;
        }
        if (node == n) {
          absorbed = true;
          break;
        }
        ++local[static_cast<std::size_t>(node)];
      }
      if (absorbed) {
        row.absorption_steps[w] = steps;
        row.absorbed[w] = 1;
      } else {
        ++part.unabsorbed;
      }
      double path = 0.0;
      for (int j = 0; j < n; ++j) {
        const auto c = local[static_cast<std::size_t>(j)];
        if (c == 0) continue;
        part.visits[j] += c;
        part.visits_sq[j] += static_cast<double>(c) * static_cast<double>(c);
        path += static_cast<double>(c) * weight[j];
      }
      part.path_sq += path * path;
    }
  });

  row.visits.assign(static_cast<std::size_t>(n), 0);
  row.visits_sq.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& part : partials) {
    for (int j = 0; j < n; ++j) {
      row.visits[j] += part.visits[j];
      row.visits_sq[j] += part.visits_sq[j];
    }
    row.path_sq += part.path_sq;
    row.unabsorbed += part.unabsorbed;
  }
  return row;
}

// Cumulative occupancy table n_ij for every start node i.
struct NodeCounts {
  int nodes = 0;
  std::uint64_t walkers_per_start = 0;
  std::uint64_t max_steps_used = 0;
  std::vector<std::uint64_t> counts;      // row-major nodes x nodes
  std::vector<std::uint64_t> unabsorbed;  // per start node
  // Second moments from per-walker data; empty when unavailable (spiking runs).
  std::vector<double> visits_sq;
  std::vector<double> path_sq;

  NodeCounts() = default;
  NodeCounts(int n, std::uint64_t walkers)
      : nodes(n),
        walkers_per_start(walkers),
        counts(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0),
        unabsorbed(static_cast<std::size_t>(n), 0) {}

  std::uint64_t& at(int i, int j) { return counts[static_cast<std::size_t>(i) * nodes + j]; }
  std::uint64_t at(int i, int j) const { return counts[static_cast<std::size_t>(i) * nodes + j]; }

  bool has_moments() const noexcept { return !path_sq.empty(); }

  void set_row(const WalkRow& row) {
    if (row.start < 0 || row.start >= nodes || static_cast<int>(row.visits.size()) != nodes) {
      throw ContractViolation("NodeCounts::set_row: row does not fit the table");
    }
    if (row.walkers != walkers_per_start) throw ContractViolation("NodeCounts::set_row: walker count mismatch");
    if (visits_sq.empty()) {
      visits_sq.assign(counts.size(), 0.0);
      path_sq.assign(static_cast<std::size_t>(nodes), 0.0);
    }
    for (int j = 0; j < nodes; ++j) {
      at(row.start, j) = row.visits[j];
      visits_sq[static_cast<std::size_t>(row.start) * nodes + j] = row.visits_sq[j];
    }
    path_sq[row.start] = row.path_sq;
    unabsorbed[row.start] = row.unabsorbed;
    max_steps_used = std::max(max_steps_used, row.max_steps);
  }

  friend bool operator==(const NodeCounts&, const NodeCounts&) = default;
};

struct MeshSolution {
  std::vector<double> u_raw;  // u_i
  std::vector<double> u;      // u_i - u_0
  double unabsorbed_fraction = 0.0;
};

// u_i = -(F dt / M) sum_j n_ij (l - x_j);  u[i] = u_i - u_0.
inline MeshSolution estimate_solution(const NodeCounts& counts, const ProblemSpec& spec) {
  const int n = spec.nodes();
  if (counts.nodes != n || counts.counts.size() != static_cast<std::size_t>(n) * n) {
    throw ContractViolation("estimate_solution: count table does not match the mesh");
  }
  if (counts.walkers_per_start == 0) throw ContractViolation("estimate_solution: walkers_per_start is zero");

  MeshSolution sol;
  sol.u_raw.resize(static_cast<std::size_t>(n));
  sol.u.resize(static_cast<std::size_t>(n));
  const double scale = -spec.forcing() * spec.dt() / static_cast<double>(counts.walkers_per_start);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += static_cast<double>(counts.at(i, j)) * (spec.length() - spec.position(j));
    sol.u_raw[i] = scale * sum;
  }
  for (int i = 0; i < n; ++i) sol.u[i] = sol.u_raw[i] - sol.u_raw[0];
  sol.u[0] = 0.0;

  std::uint64_t unabsorbed = 0;
  for (auto v : counts.unabsorbed) unabsorbed += v;
  sol.unabsorbed_fraction =
      static_cast<double>(unabsorbed) / (static_cast<double>(counts.walkers_per_start) * n);
  return sol;
}

// Standard error of each u[i] = u_i - u_0 from the per-walker second moments.
// Rows i and 0 use disjoint walkers, so their variances add.
inline std::vector<double> solution_standard_errors(const NodeCounts& counts, const ProblemSpec& spec) {
  if (!counts.has_moments()) throw ContractViolation("solution_standard_errors: counts carry no moments");
  const int n = spec.nodes();
  const double m = static_cast<double>(counts.walkers_per_start);
  const double scale = spec.forcing() * spec.dt();
  std::vector<double> var_raw(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += static_cast<double>(counts.at(i, j)) * (spec.length() - spec.position(j));
    const double mean = sum / m;
    const double var = std::max(0.0, counts.path_sq[i] / m - mean * mean) * m / std::max(1.0, m - 1.0);
    var_raw[i] = scale * scale * var / m;
  }
  std::vector<double> se(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i < n; ++i) se[i] = std::sqrt(var_raw[i] + var_raw[0]);
  return se;
}

// Dense N x N matrix of expected post-initialization visits per walker.
struct ExpectedCounts {
  int nodes = 0;
  std::vector<double> values;  // row-major

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * nodes + j]; }
};

inline constexpr int kMaxOracleNodes = 512;

// Full (N+1) x (N+1) transition matrix built directly from the movement
// rules; the last state is absorbing.
inline Eigen::MatrixXd transition_matrix(int n, const StepProbabilities& probs) {
  if (n < 1) throw ContractViolation("transition_matrix: need at least one node");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int j = 0; j < n; ++j) {
    p(j, j) += probs.stay;
    if (j == 0) {
      // reflecting: both moves go right (out of the mesh when N == 1)
      p(0, 1) += probs.left + probs.right;
      continue;
    }
    p(j, j - 1) += probs.left;
    p(j, j + 1) += probs.right;
  }
  p(n, n) = 1.0;
  return p;
}

// Solves (I - Q) V = I for the transient block Q and returns V - I.
inline ExpectedCounts exact_expected_counts(const ProblemSpec& spec, const StepProbabilities& probs) {
  const int n = spec.nodes();
  if (n > kMaxOracleNodes) throw ContractViolation("exact_expected_counts: mesh too large for a dense solve");
  probs.validate();

  const Eigen::MatrixXd q = transition_matrix(n, probs).topLeftCorner(n, n);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - q;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw NumericError("exact_expected_counts: I - Q is singular");
  const Eigen::MatrixXd v = lu.solve(Eigen::MatrixXd::Identity(n, n));

  ExpectedCounts out;
  out.nodes = n;
  out.values.resize(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.values[static_cast<std::size_t>(i) * n + j] = v(i, j) - (i == j ? 1.0 : 0.0);
  }
  return out;
}

// Expected number of steps to absorption from each node (row sums of V).
inline std::vector<double> expected_absorption_steps(const ExpectedCounts& expected) {
  std::vector<double> steps(static_cast<std::size_t>(expected.nodes));
  for (int i = 0; i < expected.nodes; ++i) {
    double sum = 1.0;  // the initial occupancy
    for (int j = 0; j < expected.nodes; ++j) sum += expected.at(i, j);
    steps[i] = sum;
  }
  return steps;
}

// Solution implied by the expected counts (the infinite-walker limit).
inline MeshSolution expected_solution(const ExpectedCounts& expected, const ProblemSpec& spec) {
  const int n = spec.nodes();
  if (expected.nodes != n) throw ContractViolation("expected_solution: dimension mismatch");
  MeshSolution sol;
  sol.u_raw.resize(static_cast<std::size_t>(n));
  sol.u.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += expected.at(i, j) * (spec.length() - spec.position(j));
    sol.u_raw[i] = -spec.forcing() * spec.dt() * sum;
  }
  for (int i = 0; i < n; ++i) sol.u[i] = sol.u_raw[i] - sol.u_raw[0];
  return sol;
}

struct AbsorptionSummary {
  std::uint64_t absorbed = 0;
  std::uint64_t unabsorbed = 0;
  double mean_steps = 0.0;
  double sd_steps = 0.0;
  std::uint64_t max_steps = 0;
};

// Statistics over absorbed walkers only; unabsorbed walkers are counted apart.
inline AbsorptionSummary summarize_absorption(const WalkRow& row) {
  AbsorptionSummary s;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t w = 0; w < row.absorption_steps.size(); ++w) {
    if (!row.absorbed[w]) {
      ++s.unabsorbed;
      continue;
    }
    const auto t = row.absorption_steps[w];
    ++s.absorbed;
    sum += static_cast<double>(t);
    sum_sq += static_cast<double>(t) * static_cast<double>(t);
    s.max_steps = std::max(s.max_steps, t);
  }
  if (s.absorbed > 0) {
    const double m = static_cast<double>(s.absorbed);
    s.mean_steps = sum / m;
    s.sd_steps = s.absorbed > 1 ? std::sqrt(std::max(0.0, (sum_sq - m * s.mean_steps * s.mean_steps) / (m - 1.0))) : 0.0;
  }
  return s;
}

struct SolveResult {
  std::vector<NodeCounts> counts;      // one table per run
  std::vector<MeshSolution> runs;
  MeshSolution mean;
};

// `runs` independent solves; run r uses the stream derive_stream(seed, run, r).
inline SolveResult solve(const ProblemSpec& spec, const StepProbabilities& probs, std::uint64_t walkers,
                         std::uint64_t seed, std::uint64_t max_steps, int runs,
                         unsigned workers = default_workers()) {
  if (runs < 1) throw ContractViolation("solve: runs must be at least 1");
  const int n = spec.nodes();
  const auto total = static_cast<std::size_t>(runs) * static_cast<std::size_t>(n);
  std::vector<WalkRow> rows(total);
  parallel_for(total, workers, [&](std::size_t k) {
    const auto r = static_cast<std::uint64_t>(k / n);
    const int start = static_cast<int>(k % n);
    rows[k] = run_walkers(spec, probs, start, walkers, derive_stream(seed, StreamTag::run, r), max_steps, 1);
    rows[k].absorption_steps = {};
    rows[k].absorbed = {};
  });

  SolveResult result;
  result.mean.u_raw.assign(static_cast<std::size_t>(n), 0.0);
  result.mean.u.assign(static_cast<std::size_t>(n), 0.0);
  for (int r = 0; r < runs; ++r) {
    NodeCounts counts(n, walkers);
    for (int i = 0; i < n; ++i) counts.set_row(rows[static_cast<std::size_t>(r) * n + i]);
    auto sol = estimate_solution(counts, spec);
    for (int i = 0; i < n; ++i) {
      result.mean.u_raw[i] += sol.u_raw[i] / runs;
      result.mean.u[i] += sol.u[i] / runs;
    }
    result.mean.unabsorbed_fraction += sol.unabsorbed_fraction / runs;
    result.counts.push_back(std::move(counts));
    result.runs.push_back(std::move(sol));
  }
  if (runs == 1) result.mean = result.runs.front();
  return result;
}

}  // namespace spikewalk
