#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "greenpot/domain_grid.hpp"
#include "greenpot/lattice.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/rng.hpp"

namespace greenpot {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(trials)
  long trials = 0;
  std::uint64_t seed = 0;
  std::optional<double> tail_bound;
};

inline constexpr long kDefaultStepBudget = 100'000'000;

// Sum and sum of squares of fn(t) over t = 0..trials-1. Trials run in
// parallel but are accumulated in fixed blocks, so the result does not depend
// on the thread count.
std::pair<double, double> accumulate_trials(long trials, const std::function<double(long)>& fn);

McEstimate make_estimate(double sum, double sum_sq, long trials, std::uint64_t seed);

// Simple random walk on Z^d killed on leaving a finite set.
class ExitSampler {
 public:
  explicit ExitSampler(const LatticeSet& set, long step_budget = kDefaultStepBudget);

  const LatticeSet& set() const { return set_; }

  // Runs the walk from point index `start` until it leaves the set; returns
  // the first outside point. When tally is given, tally[i] is incremented
  // per visit to point i (the start counts as a visit). Throws
  // std::runtime_error when the step budget is exhausted.
  IntPoint sample(std::size_t start, RngStream& rng, std::vector<long>* tally = nullptr) const;

 private:
  LatticeSet set_;
  std::vector<long> table_;
  long budget_;
};

struct ExitSample {
  IntPoint exit;
  std::vector<long> visits;  // per point of the set
};

ExitSample sample_exit(const LatticeSet& set, std::span<const long> start, RngStream& rng,
                       long step_budget = kDefaultStepBudget);

struct VisitEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
  long trials = 0;
  std::uint64_t seed = 0;
};

// Mean visit counts from `start`; trial t uses RngStream(seed, t).
VisitEstimate mean_visits(const LatticeSet& set, std::span<const long> start, long trials, std::uint64_t seed);

// Empirical exit law from `start` (trial t uses RngStream(seed, t)).
ExitLaw sample_exit_law(const LatticeSet& set, std::span<const long> start, long trials, std::uint64_t seed);

// Boundary term of the killed kernel from sampled exits of the grid domain.
// d >= 3: per trial the scaled Green value g(S - y(n)) n^{d/2-1}/d^{d/2}, and
// free_part = g(x(n) - y(n)) n^{d/2-1}/d^{d/2}.
// d = 2: per trial -a(S - y(n))/2, and free_part = -a(x(n) - y(n))/2.
// In both cases free_part - term.mean estimates the scaled killed kernel. The
// pole y may lie outside the domain (the killed kernel then vanishes).
struct BoundaryEstimate {
  McEstimate term;
  double free_part = 0.0;
  double killed_value() const { return free_part - term.mean; }
};

BoundaryEstimate estimate_boundary_term(const DomainSpec& domain, const GridSpec& grid, std::span<const double> x,
                                        std::span<const double> y, long trials, std::uint64_t seed);

// t^2 / (2 Z^2), Z standard normal: the subordinator with Laplace transform
// exp(-t sqrt(lambda)) at time t.
double sample_half_stable(double t, RngStream& rng);

// Positive (alpha/2)-stable variable with Laplace transform
// exp(-dt lambda^{alpha/2}), by Kanter's representation
//   S = sin(aU)/sin(U)^{1/a} (sin((1-a)U)/W)^{(1-a)/a},  a = alpha/2,
// U uniform on (0, pi), W standard exponential; scaled by dt^{1/a}.
double sample_stable_increment(double alpha, double dt, RngStream& rng);

struct RieszMcOptions {
  double time_step = 0.01;
  double horizon = 10.0;
  long trials = 100000;
  std::uint64_t seed = 0;
  // Largest acceptable tail bound (absolute); larger bounds throw.
  double tail_tolerance = std::numeric_limits<double>::infinity();
};

// D E_x int_0^H 1_B(B_{eta_t}) dt for the (alpha/2)-stable subordinator eta,
// alpha = d - beta (d - 2), by sampling the subordinated Brownian path at the
// times k dt (trapezoid rule). tail_bound bounds the omitted part
// D |B| int_H^inf p_t(0) dt with p_t the density of the subordinated path.
McEstimate estimate_riesz_potential(int d, double beta, std::span<const double> center, double r,
                                    std::span<const double> x, const RieszMcOptions& options);

// The tail bound on its own.
double riesz_tail_bound(int d, double beta, double r, double horizon);

}  // namespace greenpot
