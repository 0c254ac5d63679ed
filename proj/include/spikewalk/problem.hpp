#pragma once

// Steady-state heat wire: u'' = F (l - x) on [0, l], u(0) = 0, u'(0) = 0,
// its closed-form solution, the midpoint mesh, and the Gaussian hop
// probabilities that drive the random walk.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikewalk {

inline constexpr double kDefaultThreshold = 0.05;

// Standard normal CDF through the complementary error function.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

struct TransitionProbabilities {
  double p_stay = 0.0;
  double p_go = 0.0;
  // 2 * P[X_dt <= -3 dx / 2]: probability that one step would skip a node.
  double tail_mass = 0.0;
};

inline TransitionProbabilities transition_probabilities(double dx, double dt) {
  if (!(dx > 0.0) || !(dt > 0.0) || !std::isfinite(dx) || !std::isfinite(dt)) {
    throw std::domain_error("transition_probabilities: dx and dt must be positive and finite");
  }
  // X_dt ~ N(0, 2 dt)
  const double sigma = std::sqrt(2.0 * dt);
  TransitionProbabilities p;
  p.p_go = normal_cdf(-dx / (2.0 * sigma));
  p.p_stay = 1.0 - 2.0 * p.p_go;
  p.tail_mass = 2.0 * normal_cdf(-3.0 * dx / (2.0 * sigma));
  return p;
}

struct TimestepCheck {
  bool pass = false;
  double tail_mass = 0.0;
  double threshold = 0.0;
};

inline TimestepCheck validate_timestep(double dx, double dt, double c = kDefaultThreshold) {
  if (!(c > 0.0 && c < 1.0)) {
    throw std::domain_error("validate_timestep: threshold c must lie in (0, 1)");
  }
  const auto probs = transition_probabilities(dx, dt);
  return {probs.tail_mass < c, probs.tail_mass, c};
}

// The physical problem plus its discretization. Construct through create(),
// which enforces that the mesh divides the wire exactly and that dt passes
// the single-hop check.
class ProblemSpec {
 public:
  static ProblemSpec create(double length, double forcing, double dx, double dt,
                            double threshold = kDefaultThreshold) {
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(length)) throw std::invalid_argument("length must be positive");
    if (!positive(forcing)) throw std::invalid_argument("forcing must be positive");
    if (!positive(dx)) throw std::invalid_argument("dx must be positive");
    if (!positive(dt)) throw std::invalid_argument("dt must be positive");
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw std::invalid_argument("threshold c must lie in (0, 1)");
    }

    const double ratio = length / dx;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
      std::ostringstream msg;
      msg << "length / dx = " << ratio << " is not a positive integer";
      throw std::invalid_argument(msg.str());
    }
    if (rounded > static_cast<double>(std::numeric_limits<int>::max() / 8)) {
      throw std::invalid_argument("mesh is too fine");
    }

    const auto check = validate_timestep(dx, dt, threshold);
    if (!check.pass) {
      std::ostringstream msg;
      msg << "timestep check failed: tail mass " << check.tail_mass << " >= c = " << threshold;
      throw std::invalid_argument(msg.str());
    }
    if (!(transition_probabilities(dx, dt).p_go > 0.0)) {
      throw std::invalid_argument("hop probability underflows to zero; dt is too small for dx");
    }
    return ProblemSpec(length, forcing, dx, dt, threshold, static_cast<int>(rounded));
  }

  double length() const noexcept { return length_; }
  double forcing() const noexcept { return forcing_; }
  double dx() const noexcept { return dx_; }
  double dt() const noexcept { return dt_; }
  double threshold() const noexcept { return threshold_; }
  int nodes() const noexcept { return nodes_; }

  // Midpoint of division j.
  double position(int j) const noexcept { return (j + 0.5) * dx_; }

  TransitionProbabilities probabilities() const { return transition_probabilities(dx_, dt_); }

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;

 private:
  ProblemSpec(double length, double forcing, double dx, double dt, double threshold, int nodes)
      : length_(length), forcing_(forcing), dx_(dx), dt_(dt), threshold_(threshold), nodes_(nodes) {}

  double length_;
  double forcing_;
  double dx_;
  double dt_;
  double threshold_;
  int nodes_;
};

// Values used throughout the examples and defaults: F = 3, l = 2, dx = 0.05, dt = 1e-4.
inline ProblemSpec reference_problem() { return ProblemSpec::create(2.0, 3.0, 0.05, 1e-4); }

struct Mesh {
  std::vector<double> positions;
  // Index of the virtual state past the last node.
  int absorbing_index = 0;
};

inline Mesh make_mesh(const ProblemSpec& spec) {
  Mesh mesh;
  mesh.positions.reserve(static_cast<std::size_t>(spec.nodes()));
  for (int j = 0; j < spec.nodes(); ++j) mesh.positions.push_back(spec.position(j));
  mesh.absorbing_index = spec.nodes();
  return mesh;
}

// u(x) = F l x^2 / 2 - F x^3 / 6
inline double analytic_solution(const ProblemSpec& spec, double x) {
  if (!(x >= 0.0 && x <= spec.length())) {
    throw std::domain_error("analytic_solution: x outside [0, l]");
  }
  const double f = spec.forcing();
  return f * spec.length() * x * x / 2.0 - f * x * x * x / 6.0;
}

// Mean absorption time of the continuous process started at y.
inline double expected_stopping_time(const ProblemSpec& spec, double y) {
  if (!(y >= 0.0 && y <= spec.length())) {
    throw std::domain_error("expected_stopping_time: y outside [0, l]");
  }
  const double l = spec.length();
  return (l * l - y * y) / 2.0;
}

}  // namespace spikewalk
