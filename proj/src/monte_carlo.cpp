#include "greenpot/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

namespace {

constexpr long kBlock = 256;

}  // namespace

std::pair<double, double> accumulate_trials(long trials, const std::function<double(long)>& fn) {
  if (trials < 0) throw std::invalid_argument("negative trial count");
  const auto blocks = static_cast<std::size_t>((trials + kBlock - 1) / kBlock);
  std::vector<std::pair<double, double>> partial(blocks, {0.0, 0.0});
  parallel_for(blocks, [&](std::size_t b) {
    const long begin = static_cast<long>(b) * kBlock;
    const long end = std::min(trials, begin + kBlock);
    double s = 0.0, q = 0.0;
    for (long t = begin; t < end; ++t) {
      const double v = fn(t);
      s += v;
      q += v * v;
    }
    partial[b] = {s, q};
  });
  double s = 0.0, q = 0.0;
  for (const auto& [ps, pq] : partial) {
    s += ps;
    q += pq;
  }
  return {s, q};
}

McEstimate make_estimate(double sum, double sum_sq, long trials, std::uint64_t seed) {
  if (trials < 2) throw std::invalid_argument("an estimate needs at least two trials");
  const double n = static_cast<double>(trials);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return McEstimate{mean, std::sqrt(var / n), trials, seed, std::nullopt};
}

ExitSampler::ExitSampler(const LatticeSet& set, long step_budget)
    : set_(set), table_(set.neighbour_table()), budget_(step_budget) {
  if (set.empty()) throw std::invalid_argument("walk on an empty set");
  if (step_budget < 1) throw std::invalid_argument("step budget must be positive");
}

IntPoint ExitSampler::sample(std::size_t start, RngStream& rng, std::vector<long>* tally) const {
  if (start >= set_.size()) throw std::out_of_range("start index outside the set");
  const auto width = 2 * static_cast<std::uint64_t>(set_.dim());
  std::size_t at = start;
  for (long step = 0; step < budget_; ++step) {
    if (tally != nullptr) ++(*tally)[at];
    const auto dir = rng.below(width);
    const long next = table_[at * width + dir];
    if (next < 0) {
      IntPoint exit = set_[at];
      exit[dir / 2] += (dir % 2 == 0) ? 1 : -1;
      return exit;
    }
    at = static_cast<std::size_t>(next);
  }
  throw std::runtime_error("random walk exceeded its step budget of " + std::to_string(budget_));
}

ExitSample sample_exit(const LatticeSet& set, std::span<const long> start, RngStream& rng, long step_budget) {
  const auto i = set.index_of(start);
  if (!i) throw std::invalid_argument("start point is not in the set");
  const ExitSampler sampler(set, step_budget);
  ExitSample out;
  out.visits.assign(set.size(), 0);
  out.exit = sampler.sample(*i, rng, &out.visits);
  return out;
}

VisitEstimate mean_visits(const LatticeSet& set, std::span<const long> start, long trials, std::uint64_t seed) {
  const auto i = set.index_of(start);
  if (!i) throw std::invalid_argument("start point is not in the set");
  if (trials < 2) throw std::invalid_argument("an estimate needs at least two trials");
  const ExitSampler sampler(set);
  const auto size = static_cast<Eigen::Index>(set.size());
  const auto blocks = static_cast<std::size_t>((trials + kBlock - 1) / kBlock);
  std::vector<Eigen::VectorXd> sums(blocks), squares(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(size), q = Eigen::VectorXd::Zero(size);
    std::vector<long> tally(set.size());
    const long begin = static_cast<long>(b) * kBlock;
    const long end = std::min(trials, begin + kBlock);
    for (long t = begin; t < end; ++t) {
      std::fill(tally.begin(), tally.end(), 0);
      RngStream rng(seed, static_cast<std::uint64_t>(t));
      sampler.sample(*i, rng, &tally);
      for (Eigen::Index k = 0; k < size; ++k) {
        const double v = static_cast<double>(tally[static_cast<std::size_t>(k)]);
        s(k) += v;
        q(k) += v * v;
      }
    }
    sums[b] = std::move(s);
    squares[b] = std::move(q);
  });
  Eigen::VectorXd s = Eigen::VectorXd::Zero(size), q = Eigen::VectorXd::Zero(size);
  for (std::size_t b = 0; b < blocks; ++b) {
    s += sums[b];
    q += squares[b];
  }
  VisitEstimate out;
  out.trials = trials;
  out.seed = seed;
  const double n = static_cast<double>(trials);
  out.mean = s / n;
  out.std_error = ((q.array() - n * out.mean.array().square()).max(0.0) / (n - 1.0) / n).sqrt().matrix();
  return out;
}

ExitLaw sample_exit_law(const LatticeSet& set, std::span<const long> start, long trials, std::uint64_t seed) {
  const auto i = set.index_of(start);
  if (!i) throw std::invalid_argument("start point is not in the set");
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  const ExitSampler sampler(set);
  std::vector<IntPoint> exits(static_cast<std::size_t>(trials));
  parallel_for(exits.size(), [&](std::size_t t) {
    RngStream rng(seed, t);
    exits[t] = sampler.sample(*i, rng);
  });
  std::map<IntPoint, long> counts;
  for (const auto& e : exits) ++counts[e];
  ExitLaw law;
  for (const auto& [p, c] : counts) law.emplace_back(p, static_cast<double>(c) / static_cast<double>(trials));
  return law;
}

BoundaryEstimate estimate_boundary_term(const DomainSpec& domain, const GridSpec& grid, std::span<const double> x,
                                        std::span<const double> y, long trials, std::uint64_t seed) {
  const int d = grid.dim();
  if (d < 2) throw std::invalid_argument("boundary term needs d >= 2");
  if (std::equal(x.begin(), x.end(), y.begin(), y.end())) throw std::invalid_argument("boundary term needs x != y");
  const LatticeSet set = grid_points(domain, grid);
  const IntPoint xn = round_to_grid(x, grid);
  const IntPoint yn = round_to_grid(y, grid);
  const auto start = set.index_of(xn);
  if (!start) throw std::invalid_argument("x must round to a grid point of the domain");
  if (xn == yn) throw std::invalid_argument("x and y round to the same grid point");
  const double dd = static_cast<double>(d);
  const double scale = std::pow(static_cast<double>(grid.scale()), dd / 2.0 - 1.0) / std::pow(dd, dd / 2.0);
  const auto kernel = [&](const IntPoint& p) {
    IntPoint z(p.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = p[i] - yn[i];
    // d = 2: scale = 1/2, and -a replaces g
    return d == 2 ? -0.5 * potential_kernel_2d(z) : scale * whole_space_green(d, z);
  };
  const ExitSampler sampler(set);
  const auto [s, q] = accumulate_trials(trials, [&](long t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    return kernel(sampler.sample(*start, rng));
  });
  BoundaryEstimate out;
  out.term = make_estimate(s, q, trials, seed);
  out.free_part = kernel(xn);
  return out;
}

double sample_half_stable(double t, RngStream& rng) {
  if (!(t > 0.0)) throw std::invalid_argument("half-stable time must be positive");
  double z = 0.0;
  while (z == 0.0) z = rng.normal();
  return t * t / (2.0 * z * z);
}

double sample_stable_increment(double alpha, double dt, RngStream& rng) {
  if (!(alpha > 0.0 && alpha < 2.0)) throw std::invalid_argument("stable increment requires 0 < alpha < 2");
  if (!(dt > 0.0)) throw std::invalid_argument("time increment must be positive");
  const double a = alpha / 2.0;
  const double u = std::numbers::pi * rng.uniform();
  const double w = rng.exponential();
  const double s = std::sin(a * u) / std::pow(std::sin(u), 1.0 / a) *
                   std::pow(std::sin((1.0 - a) * u) / w, (1.0 - a) / a);
  return std::pow(dt, 1.0 / a) * s;
}

double riesz_tail_bound(int d, double beta, double r, double horizon) {
  const RieszParams p = riesz_params(d, beta);
  const double dd = static_cast<double>(d);
  const double k = dd / p.alpha;
  // Density at 0 of B at time eta_t: characteristic exponent (|xi|^2/2)^{alpha/2}.
  //   p_t(0) = (2 pi)^{-d} S(d) Gamma(d/alpha)/alpha (t 2^{-alpha/2})^{-d/alpha}
  const double coef = std::pow(2.0 * std::numbers::pi, -dd) * unit_sphere_area(d) * std::tgamma(k) / p.alpha *
                      std::pow(2.0, k * p.alpha / 2.0);
  const double ball = std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0) * std::pow(r, dd);
  return p.D * ball * coef * std::pow(horizon, 1.0 - k) / (k - 1.0);
}

McEstimate estimate_riesz_potential(int d, double beta, std::span<const double> center, double r,
                                    std::span<const double> x, const RieszMcOptions& options) {
  const RieszParams p = riesz_params(d, beta);
  if (center.size() != static_cast<std::size_t>(d) || x.size() != center.size()) {
    throw std::invalid_argument("point dimension mismatch");
  }
  if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
  if (!(options.time_step > 0.0) || !(options.horizon > options.time_step)) {
    throw std::invalid_argument("need 0 < time_step < horizon");
  }
  double on_sphere = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) on_sphere += (x[i] - center[i]) * (x[i] - center[i]);
  if (std::abs(std::sqrt(on_sphere) - r) <= 1e-12 * r) throw std::invalid_argument("x lies on the boundary of the ball");

  const double tail = riesz_tail_bound(d, beta, r, options.horizon);
  if (tail > options.tail_tolerance) {
    throw std::invalid_argument("horizon too small: tail bound " + std::to_string(tail) + " exceeds the tolerance");
  }
  const auto steps = static_cast<long>(std::floor(options.horizon / options.time_step + 1e-9));
  const double dt = options.time_step;
  const double r2 = r * r;
  const bool brownian = p.alpha == 2.0;
  const auto inside = [&](const std::vector<double>& pos) {
    double q = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) q += (pos[i] - center[i]) * (pos[i] - center[i]);
    return q < r2;
  };
  const auto [s, q] = accumulate_trials(options.trials, [&](long t) {
    RngStream rng(options.seed, static_cast<std::uint64_t>(t));
    std::vector<double> pos(x.begin(), x.end());
    double occupation = inside(pos) ? 0.5 : 0.0;
    for (long k = 1; k <= steps; ++k) {
      const double elapsed = brownian ? dt : sample_stable_increment(p.alpha, dt, rng);
      const double sd = std::sqrt(elapsed);
      for (double& c : pos) c += sd * rng.normal();
      if (inside(pos)) occupation += (k == steps) ? 0.5 : 1.0;
    }
    return p.D * dt * occupation;
  });
  McEstimate out = make_estimate(s, q, options.trials, options.seed);
  out.tail_bound = tail;
  return out;
}

}  // namespace greenpot
