#include "greenpot/discrete_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "greenpot/errors.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

void validate_operator_transform(int d, const Transform& transform) {
  if (d < 2) throw std::invalid_argument("operators need d >= 2");
  if (const auto* p = std::get_if<PowerTransform>(&transform)) {
    if (!(p->beta >= 1.0)) throw std::invalid_argument("power transform requires beta >= 1");
    if (d >= 3 && !(p->beta < static_cast<double>(d) / static_cast<double>(d - 2))) {
      throw std::invalid_argument("power transform requires beta < d/(d-2)");
    }
  } else {
    const double alpha = std::get<ExpTransform>(transform).alpha;
    if (d != 2) throw std::invalid_argument("exponential transform is only defined for d = 2");
    if (!(alpha > 0.0 && alpha < 2.0 * std::numbers::pi)) throw std::invalid_argument("exponential transform requires 0 < alpha < 2 pi");
  }
}

double operator_entry(int d, long n, const Transform& transform, double g) {
  const double dd = static_cast<double>(d);
  const double nn = static_cast<double>(n);
  const double weight = std::pow(dd / nn, dd / 2.0);
  const double scaled = g * std::pow(nn, dd / 2.0 - 1.0) / std::pow(dd, dd / 2.0);
  return weight * apply_transform(transform, scaled);
}

struct DiscreteOperator::FreeKernel {
  int d;
  long n;
  Transform transform;
  std::shared_ptr<const LatticeGreenTable> own_table;
  const LatticeGreenTable* table;
  long reach;                 // cached offsets have |z_i| <= reach
  std::vector<double> cache;  // indexed by |z_1|, ..., |z_d| in base reach+1

  double at(std::span<const long> z) const {
    std::size_t index = 0;
    bool cached = true;
    for (long v : z) {
      const long a = std::abs(v);
      if (a > reach) {
        cached = false;
        break;
      }
      index = index * static_cast<std::size_t>(reach + 1) + static_cast<std::size_t>(a);
    }
    if (cached) return cache[index];
    return operator_entry(d, n, transform, (*table)(z));
  }
};

DiscreteOperator::DiscreteOperator(GridSpec grid, LatticeSet points, Transform transform)
    : grid_(grid), points_(std::move(points)), transform_(transform) {}

DiscreteOperator DiscreteOperator::killed(const DomainSpec& domain, const GridSpec& grid, Transform transform) {
  validate_operator_transform(grid.dim(), transform);
  LatticeSet points = grid_points(domain, grid);
  if (points.empty()) throw std::invalid_argument("domain has no points on this grid");
  if (points.size() > kMaxDenseOperator) {
    throw ResourceError("killed operator would need " + std::to_string(points.size()) +
                        " grid points; the dense limit is 20000");
  }
  DiscreteOperator op = from_killed(killed_green_matrix(points), grid, transform);
  op.domain_ = domain;
  return op;
}

DiscreteOperator DiscreteOperator::from_killed(const KilledGreenMatrix& green, const GridSpec& grid,
                                               Transform transform) {
  validate_operator_transform(grid.dim(), transform);
  if (green.dim() != grid.dim()) throw std::invalid_argument("grid and Green matrix dimensions differ");
  if (green.set.size() > kMaxDenseOperator) throw ResourceError("killed operator exceeds the dense limit of 20000 points");
  DiscreteOperator op(grid, green.set, transform);
  const int d = grid.dim();
  const long n = grid.scale();
  op.dense_ = std::make_shared<Eigen::MatrixXd>(
      green.entries.unaryExpr([&](double g) { return operator_entry(d, n, transform, g); }));
  return op;
}

DiscreteOperator DiscreteOperator::free_space(const DomainSpec& support, const GridSpec& grid, Transform transform,
                                              long cutoff) {
  const int d = grid.dim();
  if (d < 3) throw std::invalid_argument("free-space operators need d >= 3");
  validate_operator_transform(d, transform);
  // Shifted evaluation moves sample points by at most h/2, so cover every grid
  // point within h of the support.
  LatticeSet points = exterior_grid(support, grid);
  if (points.empty()) throw std::invalid_argument("support has no points on this grid");
  if (points.size() > kMaxDenseOperator) {
    throw ResourceError("free-space operator would need " + std::to_string(points.size()) +
                        " grid points; the limit is 20000");
  }
  auto kernel = std::make_shared<FreeKernel>();
  kernel->d = d;
  kernel->n = grid.scale();
  kernel->transform = transform;
  if (cutoff == 16) {
    kernel->table = &lattice_green_table(d);
  } else {
    kernel->own_table = std::make_shared<const LatticeGreenTable>(d, cutoff);
    kernel->table = kernel->own_table.get();
  }
  long reach = 0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(d); ++i) {
    long lo = points[0][i], hi = points[0][i];
    for (const auto& p : points.points()) {
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    reach = std::max(reach, hi - lo);
  }
  kernel->reach = reach;
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(reach + 1);
  kernel->cache.resize(total);
  parallel_for(total, [&](std::size_t index) {
    IntPoint z(static_cast<std::size_t>(d));
    std::size_t rest = index;
    for (int i = d - 1; i >= 0; --i) {
      z[static_cast<std::size_t>(i)] = static_cast<long>(rest % static_cast<std::size_t>(reach + 1));
      rest /= static_cast<std::size_t>(reach + 1);
    }
    kernel->cache[index] = operator_entry(d, kernel->n, transform, (*kernel->table)(z));
  });
  DiscreteOperator op(grid, std::move(points), transform);
  op.domain_ = support;
  op.free_ = std::move(kernel);
  return op;
}

DiscreteOperator DiscreteOperator::from_matrix(const GridSpec& grid, LatticeSet points, Eigen::MatrixXd entries) {
  if (entries.rows() != static_cast<Eigen::Index>(points.size()) || entries.cols() != entries.rows()) {
    throw std::invalid_argument("entry matrix does not match the index set");
  }
  if ((entries.array() < 0.0).any()) throw std::invalid_argument("operator entries must be nonnegative");
  DiscreteOperator op(grid, std::move(points), PowerTransform{1.0});
  op.dense_ = std::make_shared<Eigen::MatrixXd>(std::move(entries));
  return op;
}

double DiscreteOperator::entry(std::span<const long> x, std::span<const long> w) const {
  if (free_) {
    IntPoint z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = w[i] - x[i];
    return free_->at(z);
  }
  const auto i = points_.index_of(x);
  const auto j = points_.index_of(w);
  if (!i || !j) return 0.0;
  return (*dense_)(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

Eigen::VectorXd DiscreteOperator::row(std::span<const long> x) const {
  const auto size = static_cast<Eigen::Index>(points_.size());
  if (!free_) {
    const auto i = points_.index_of(x);
    if (!i) return Eigen::VectorXd::Zero(size);
    return dense_->row(static_cast<Eigen::Index>(*i)).transpose();
  }
  Eigen::VectorXd out(size);
  IntPoint z(x.size());
  for (Eigen::Index j = 0; j < size; ++j) {
    const auto& w = points_[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = w[k] - x[k];
    out(j) = free_->at(z);
  }
  return out;
}

const Eigen::MatrixXd& DiscreteOperator::matrix() const {
  if (!dense_) {
    const auto size = static_cast<Eigen::Index>(points_.size());
    auto dense = std::make_shared<Eigen::MatrixXd>(size, size);
    parallel_for(points_.size(), [&](std::size_t i) {
      dense->row(static_cast<Eigen::Index>(i)) = row(points_[i]).transpose();
    });
    dense_ = std::move(dense);
  }
  return *dense_;
}

namespace {

Eigen::VectorXd sample(const DiscreteOperator& op, const Function& f, std::span<const double> shift) {
  const double h = op.grid().spacing();
  Eigen::VectorXd values(static_cast<Eigen::Index>(op.points().size()));
  std::vector<double> y(shift.size());
  for (std::size_t j = 0; j < op.points().size(); ++j) {
    const auto& w = op.points()[j];
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = h * static_cast<double>(w[i]) + shift[i];
    values(static_cast<Eigen::Index>(j)) = f(y);
  }
  return values;
}

}  // namespace

double apply(const DiscreteOperator& op, const Function& f, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(op.dim())) throw std::invalid_argument("point dimension does not match the operator");
  const IntPoint xn = round_to_grid(x, op.grid());
  const double h = op.grid().spacing();
  std::vector<double> shift(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) shift[i] = x[i] - h * static_cast<double>(xn[i]);
  return op.row(xn).dot(sample(op, f, shift));
}

Eigen::VectorXd apply_on_grid(const DiscreteOperator& op, const Function& f) {
  const std::vector<double> zero(static_cast<std::size_t>(op.dim()), 0.0);
  return op.matrix() * sample(op, f, zero);
}

double cmp_functional(const DiscreteOperator& op, const Function& f) {
  const std::vector<double> zero(static_cast<std::size_t>(op.dim()), 0.0);
  const Eigen::VectorXd values = sample(op, f, zero);
  const Eigen::VectorXd action = op.matrix() * values;
  const double cell = std::pow(op.grid().spacing(), op.dim());
  return ((action.array() - 1.0).max(0.0) * values.array()).sum() * cell;
}

double RandomBumps::operator()(std::span<const double> x) const {
  double total = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - centers[k][i]) * (x[i] - centers[k][i]);
    total += weights[k] * std::exp(-q / (2.0 * widths[k] * widths[k]));
  }
  return total;
}

RandomBumps random_bumps(std::span<const double> lo, std::span<const double> hi, int count, double amplitude,
                         RngStream& rng) {
  if (count < 1) throw std::invalid_argument("need at least one bump");
  double extent = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) extent = std::max(extent, hi[i] - lo[i]);
  RandomBumps f;
  for (int k = 0; k < count; ++k) {
    std::vector<double> c(lo.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    f.centers.push_back(std::move(c));
    f.widths.push_back(extent * (0.05 + 0.45 * rng.uniform()));
    // alternate signs so every draw changes sign
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    f.weights.push_back(sign * amplitude * rng.uniform());
  }
  return f;
}

bool ConvergenceReport::errors_decrease() const {
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].abs_err < levels[i - 1].abs_err)) return false;
  }
  return true;
}

double ConvergenceReport::final_rel_err() const {
  if (levels.empty()) throw std::logic_error("empty convergence report");
  return levels.back().rel_err;
}

ConvergenceReport make_convergence_report(std::string quantity, double reference, std::string source,
                                          const std::vector<std::pair<long, double>>& values) {
  ConvergenceReport report{std::move(quantity), reference, std::move(source), {}};
  for (const auto& [n, value] : values) {
    if (!report.levels.empty() && n <= report.levels.back().n) throw std::invalid_argument("levels must increase in n");
    ConvergenceLevel level;
    level.n = n;
    level.value = value;
    level.abs_err = std::abs(value - reference);
    level.rel_err = reference != 0.0 ? level.abs_err / std::abs(reference) : level.abs_err;
    level.rate = std::numeric_limits<double>::quiet_NaN();
    if (!report.levels.empty()) {
      const auto& prev = report.levels.back();
      level.rate = std::log(prev.abs_err / level.abs_err) /
                   std::log(static_cast<double>(n) / static_cast<double>(prev.n));
    }
    report.levels.push_back(level);
  }
  return report;
}

ConvergenceReport converge_disk_green(double radius, std::span<const double> x, std::span<const double> y,
                                      long m, int levels) {
  if (x.size() != 2 || y.size() != 2) throw std::invalid_argument("disk convergence is planar");
  const DomainSpec disk = make_ball({0.0, 0.0}, radius);
  const double reference = disk_green_2d(radius, x, y);
  std::vector<std::pair<long, double>> values;
  for (const auto& grid : refinement_sequence(2, m, levels)) {
    const LatticeSet points = grid_points(disk, grid);
    if (points.size() > kMaxDenseOperator) throw ResourceError("disk grid exceeds 20000 points");
    const IntPoint xn = round_to_grid(x, grid);
    const IntPoint yn = round_to_grid(y, grid);
    const auto i = points.index_of(xn);
    const auto j = points.index_of(yn);
    double value = 0.0;
    if (i && j) {
      const KilledGreenSolver solver(points);
      value = 0.5 * solver.entry(*i, *j);
    }
    values.emplace_back(grid.scale(), value);
  }
  return make_convergence_report("half killed lattice Green function", reference, "disk_green_2d closed form",
                                 values);
}

ConvergenceReport converge_free_ball(int d, double beta, std::span<const double> x,
                                     std::span<const double> center, double r, long m, int levels) {
  const KernelSpec spec(d, FreeSpace{}, PowerTransform{beta});
  const double reference = ball_kernel_integral(spec, x, center, r);
  const DomainSpec ball = make_ball(std::vector<double>(center.begin(), center.end()), r);
  const Function indicator = [&](std::span<const double> p) { return contains(ball, p) ? 1.0 : 0.0; };
  std::vector<std::pair<long, double>> values;
  for (const auto& grid : refinement_sequence(d, m, levels)) {
    const auto op = DiscreteOperator::free_space(ball, grid, PowerTransform{beta});
    values.emplace_back(grid.scale(), apply(op, indicator, x));
  }
  return make_convergence_report("free-space operator on a ball indicator", reference,
                                 "ball_kernel_integral quadrature", values);
}

ConvergenceReport converge_killed(const DomainSpec& domain, const Transform& transform, const Function& f,
                                  std::span<const double> x, long m, int levels, double reference,
                                  std::string source) {
  std::vector<std::pair<long, double>> values;
  for (const auto& grid : refinement_sequence(domain.d, m, levels)) {
    const auto op = DiscreteOperator::killed(domain, grid, transform);
    values.emplace_back(grid.scale(), apply(op, f, x));
  }
  return make_convergence_report("killed operator value", reference, std::move(source), values);
}

double gamma_cap(int d, double beta, std::span<const double> lo, std::span<const double> hi) {
  if (d < 3) throw std::invalid_argument("gamma_cap needs d >= 3");
  validate_operator_transform(d, PowerTransform{beta});
  const double dd = static_cast<double>(d);
  const double alpha = dd - beta * (dd - 2.0);
  const double c3 = std::pow(lattice_decay_constant(d) / dd * std::pow(2.0 + std::sqrt(dd), dd - 2.0), beta);
  double vol = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) vol *= hi[i] - lo[i] + 4.0 * std::sqrt(dd);
  // Among sets of volume V the integral of |u - z|^{-(d - alpha)} is largest
  // on the ball about u: S(d) rho^alpha / alpha.
  const double unit_ball = std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0);
  const double rho = std::pow(vol / unit_ball, 1.0 / dd);
  const double sup_integral = unit_sphere_area(d) * std::pow(rho, alpha) / alpha;
  const double g00 = whole_space_green(d, IntPoint(static_cast<std::size_t>(d), 0));
  return std::pow(g00, beta) * std::pow(dd, dd / 2.0 * (1.0 - beta)) + c3 * sup_integral;
}

double sampled_oscillation(const Function& f, std::span<const double> lo, std::span<const double> hi,
                           double delta, double spacing) {
  if (!(spacing > 0.0) || delta < 0.0) throw std::invalid_argument("bad oscillation sampling parameters");
  // resolve delta by at least four samples
  if (delta > 0.0) spacing = std::min(spacing, delta / 4.0);
  const std::size_t d = lo.size();
  std::vector<long> count(d);
  double total = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    count[i] = static_cast<long>(std::ceil((hi[i] - lo[i] + 2.0 * delta) / spacing)) + 1;
    total *= static_cast<double>(count[i]);
  }
  if (total > 2e7) throw ResourceError("oscillation sampling grid too large");
  const long reach = static_cast<long>(std::floor(delta / spacing * (1.0 + 1e-12)));
  std::vector<double> values(static_cast<std::size_t>(total));
  std::vector<long> idx(d, 0);
  std::vector<double> p(d);
  for (std::size_t flat = 0; flat < values.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = d; i-- > 0;) {
      idx[i] = static_cast<long>(rest % static_cast<std::size_t>(count[i]));
      rest /= static_cast<std::size_t>(count[i]);
    }
    for (std::size_t i = 0; i < d; ++i) p[i] = lo[i] - delta + spacing * static_cast<double>(idx[i]);
    values[flat] = f(p);
  }
  // Compare each sample with its forward neighbours in the half-space of
  // offsets; the reverse pairs are the same differences.
  std::vector<double> best(values.size(), 0.0);
  parallel_for(values.size(), [&](std::size_t flat) {
    std::vector<long> at(d), off(d, -reach);
    std::size_t rest = flat;
    for (std::size_t i = d; i-- > 0;) {
      at[i] = static_cast<long>(rest % static_cast<std::size_t>(count[i]));
      rest /= static_cast<std::size_t>(count[i]);
    }
    double local = 0.0;
    while (true) {
      bool inside = true;
      std::size_t other = 0;
      for (std::size_t i = 0; i < d; ++i) {
        const long c = at[i] + off[i];
        if (c < 0 || c >= count[i]) {
          inside = false;
          break;
        }
        other = other * static_cast<std::size_t>(count[i]) + static_cast<std::size_t>(c);
      }
      if (inside && other > flat) local = std::max(local, std::abs(values[flat] - values[other]));
      std::size_t i = 0;
      while (i < d && ++off[i] > reach) off[i++] = -reach;
      if (i == d) break;
    }
    best[flat] = local;
  });
  return *std::max_element(best.begin(), best.end());
}

}  // namespace greenpot
