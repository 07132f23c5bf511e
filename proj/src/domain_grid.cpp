#include "greenpot/domain_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_set>

#include "greenpot/errors.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

namespace {

constexpr double kSnap = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};

bool snapped_less(double a, double b) {
  // a < b, treating values within a relative 1e-12 as equal
  if (std::isinf(a) || std::isinf(b)) return a < b;
  return a < b - kSnap * std::max({1.0, std::abs(a), std::abs(b)});
}

double cube_side(int d, long m) { return std::sqrt(static_cast<double>(d) / static_cast<double>(m)); }

// l-infinity distance from x to the closed cube of side s centred at s*c.
double distance_to_cube(std::span<const double> x, const IntPoint& c, double s) {
  double dist = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dist = std::max(dist, std::abs(x[i] - s * static_cast<double>(c[i])) - 0.5 * s);
  }
  return std::max(dist, 0.0);
}

std::unordered_set<IntPoint, IntPointHash> basis_set(const CubicShape& c) {
  return {c.basis.begin(), c.basis.end()};
}

std::pair<IntPoint, IntPoint> basis_bounds(const CubicShape& c) {
  IntPoint lo = c.basis.front(), hi = c.basis.front();
  for (const auto& b : c.basis) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      lo[i] = std::min(lo[i], b[i]);
      hi[i] = std::max(hi[i], b[i]);
    }
  }
  return {lo, hi};
}

bool cubic_contains(const CubicShape& c, int d, std::span<const double> x) {
  const double s = cube_side(d, c.m);
  const auto cells = basis_set(c);
  // Per coordinate, the cells whose closure touches x; x is interior iff all
  // combinations are basis cells.
  std::vector<std::vector<long>> choices(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double t = x[static_cast<std::size_t>(i)] / s;
    const double f = std::floor(t);
    if (std::abs(t - f - 0.5) <= kSnap * std::max(1.0, std::abs(t))) {
      choices[static_cast<std::size_t>(i)] = {static_cast<long>(f), static_cast<long>(f) + 1};
    } else {
      choices[static_cast<std::size_t>(i)] = {static_cast<long>(std::round(t))};
    }
  }
  IntPoint cell(static_cast<std::size_t>(d));
  std::vector<std::size_t> pick(static_cast<std::size_t>(d), 0);
  while (true) {
    for (std::size_t i = 0; i < pick.size(); ++i) cell[i] = choices[i][pick[i]];
    if (!cells.contains(cell)) return false;
    std::size_t i = 0;
    while (i < pick.size() && ++pick[i] == choices[i].size()) pick[i++] = 0;
    if (i == pick.size()) return true;
  }
}

double cubic_distance_to_complement(const CubicShape& c, int d, std::span<const double> x) {
  if (!cubic_contains(c, d, x)) return 0.0;
  const double s = cube_side(d, c.m);
  const auto [lo, hi] = basis_bounds(c);
  double best = kInf;
  for (int i = 0; i < d; ++i) {
    const auto k = static_cast<std::size_t>(i);
    best = std::min({best, x[k] - s * (static_cast<double>(lo[k]) - 0.5),
                     s * (static_cast<double>(hi[k]) + 0.5) - x[k]});
  }
  const auto cells = basis_set(c);
  IntPoint cell = lo;
  while (true) {
    if (!cells.contains(cell)) best = std::min(best, distance_to_cube(x, cell, s));
    std::size_t i = 0;
    while (i < cell.size() && ++cell[i] > hi[i]) {
      cell[i] = lo[i];
      ++i;
    }
    if (i == cell.size()) break;
  }
  return best;
}

double ball_distance_to_complement(const BallShape& b, std::span<const double> x) {
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i] - b.center[i]);
    s += a;
    q += a * a;
  }
  const double r2 = b.radius * b.radius;
  if (q >= r2) return 0.0;
  // Largest t whose cube about x stays in the ball: the far corner sits on
  // the sphere, sum (a_i + t)^2 = r^2.
  const double dd = static_cast<double>(x.size());
  return (-s + std::sqrt(s * s - dd * (q - r2))) / dd;
}

double ball_distance_to_domain(const BallShape& b, std::span<const double> x) {
  std::vector<double> a(x.size());
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    a[i] = std::abs(x[i] - b.center[i]);
    q += a[i] * a[i];
  }
  const double r2 = b.radius * b.radius;
  if (q <= r2) return 0.0;
  // Smallest t with sum (a_i - t)^+^2 = r^2; try each active set.
  std::sort(a.begin(), a.end(), std::greater<>());
  double s = 0.0;
  q = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += a[k];
    q += a[k] * a[k];
    const double kk = static_cast<double>(k + 1);
    const double disc = s * s - kk * (q - r2);
    if (disc < 0.0) continue;
    const double t = (s - std::sqrt(disc)) / kk;
    const double next = k + 1 < a.size() ? a[k + 1] : 0.0;
    if (t >= next - 1e-15 * a[0] && t <= a[k] + 1e-15 * a[0]) return std::max(t, 0.0);
  }
  return 0.0;
}

// Whether the closed cube of half-width t about x meets the closure of the
// intersection of a box with B(0, radius).
bool box_ball_meet(const std::vector<double>& lo, const std::vector<double>& hi, double radius,
                   std::span<const double> x, double t) {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::max(lo[i], x[i] - t);
    const double b = std::min(hi[i], x[i] + t);
    if (a > b) return false;
    const double nearest = std::clamp(0.0, a, b);
    q += nearest * nearest;
  }
  return q <= radius * radius;
}

double intersect_distance_to_domain(const IntersectBallShape& s, int d, std::span<const double> x) {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pieces;
  std::visit(Overload{
                 [&](const BoxShape& b) { pieces.emplace_back(b.lo, b.hi); },
                 [&](const CubicShape& c) {
                   const double side = cube_side(d, c.m);
                   for (const auto& b : c.basis) {
                     std::vector<double> lo(b.size()), hi(b.size());
                     for (std::size_t i = 0; i < b.size(); ++i) {
                       lo[i] = side * (static_cast<double>(b[i]) - 0.5);
                       hi[i] = side * (static_cast<double>(b[i]) + 0.5);
                     }
                     pieces.emplace_back(std::move(lo), std::move(hi));
                   }
                 },
                 [](const auto&) {
                   throw std::invalid_argument("distance to a ball intersected with a ball or nested intersection is unsupported");
                 },
             },
             s.inner->shape);
  const auto feasible = [&](double t) {
    return std::any_of(pieces.begin(), pieces.end(),
                       [&](const auto& p) { return box_ball_meet(p.first, p.second, s.radius, x, t); });
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0;
  double hi = std::max(distance_to_domain(*s.inner, x), 1e-300);
  for (int i = 0; !feasible(hi); ++i) {
    if (i > 2000) throw std::invalid_argument("domain is empty");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

void require_dim(const DomainSpec& domain, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(domain.d)) throw std::invalid_argument("point dimension does not match the domain");
}

enum class Select { kInside, kInterior, kExterior };

LatticeSet enumerate(const DomainSpec& domain, const GridSpec& grid, Select select) {
  validate(domain);
  if (grid.dim() != domain.d) throw std::invalid_argument("grid and domain dimensions differ");
  const int d = domain.d;
  const double h = grid.spacing();
  auto [lo, hi] = bounding_box(domain);
  const double pad = select == Select::kExterior ? h : 0.0;
  IntPoint zlo(static_cast<std::size_t>(d)), zhi(static_cast<std::size_t>(d));
  double count = 1.0;
  for (std::size_t i = 0; i < zlo.size(); ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw std::invalid_argument("cannot enumerate grid points of an unbounded domain");
    zlo[i] = static_cast<long>(std::floor((lo[i] - pad) / h)) - 1;
    zhi[i] = static_cast<long>(std::ceil((hi[i] + pad) / h)) + 1;
    count *= static_cast<double>(zhi[i] - zlo[i] + 1);
  }
  if (count > 4e8) throw ResourceError("grid enumeration exceeds 4e8 candidate points");

  const auto keep = [&](const std::vector<double>& x) {
    switch (select) {
      case Select::kInside:
        return contains(domain, x);
      case Select::kInterior:
        return snapped_less(h, distance_to_complement(domain, x));
      case Select::kExterior:
        return snapped_less(distance_to_domain(domain, x), h);
    }
    return false;
  };

  // Slabs along the first coordinate; within a slab the odometer runs the
  // last coordinate fastest so output stays lexicographic.
  const auto slabs = static_cast<std::size_t>(zhi[0] - zlo[0] + 1);
  std::vector<std::vector<IntPoint>> found(slabs);
  parallel_for(slabs, [&](std::size_t k) {
    IntPoint z = zlo;
    z[0] = zlo[0] + static_cast<long>(k);
    std::vector<double> x(static_cast<std::size_t>(d));
    while (true) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = h * static_cast<double>(z[i]);
      if (keep(x)) found[k].push_back(z);
      std::size_t i = z.size() - 1;
      while (i > 0 && ++z[i] > zhi[i]) {
        z[i] = zlo[i];
        --i;
      }
      if (i == 0) break;
    }
  });
  std::vector<IntPoint> points;
  for (auto& slab : found) points.insert(points.end(), slab.begin(), slab.end());
  return LatticeSet(d, std::move(points));
}

}  // namespace

DomainSpec make_ball(std::vector<double> center, double radius) {
  DomainSpec out{static_cast<int>(center.size()), BallShape{std::move(center), radius}};
  validate(out);
  return out;
}

DomainSpec make_box(std::vector<double> lo, std::vector<double> hi) {
  DomainSpec out{static_cast<int>(lo.size()), BoxShape{std::move(lo), std::move(hi)}};
  validate(out);
  return out;
}

DomainSpec intersect_with_ball(DomainSpec inner, double radius) {
  const int d = inner.d;
  DomainSpec out{d, IntersectBallShape{std::make_shared<const DomainSpec>(std::move(inner)), radius}};
  validate(out);
  return out;
}

DomainSpec cubic_open_set(long m, std::vector<IntPoint> basis) {
  if (basis.empty()) throw std::invalid_argument("cubic open set needs a nonempty basis");
  DomainSpec out{static_cast<int>(basis.front().size()), CubicShape{m, std::move(basis)}};
  validate(out);
  return out;
}

void validate(const DomainSpec& domain) {
  const auto d = static_cast<std::size_t>(domain.d);
  if (domain.d < 1) throw std::invalid_argument("domain dimension must be positive");
  std::visit(Overload{
                 [&](const BallShape& b) {
                   if (b.center.size() != d) throw std::invalid_argument("ball centre dimension mismatch");
                   if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw std::invalid_argument("ball radius must be positive");
                   for (double c : b.center) {
                     if (!std::isfinite(c)) throw std::invalid_argument("ball centre must be finite");
                   }
                 },
                 [&](const BoxShape& b) {
                   if (b.lo.size() != d || b.hi.size() != d) throw std::invalid_argument("box corner dimension mismatch");
                   for (std::size_t i = 0; i < d; ++i) {
                     if (!(b.lo[i] < b.hi[i])) throw std::invalid_argument("box has empty interior");
                   }
                 },
                 [&](const CubicShape& c) {
                   if (c.m < 1) throw std::invalid_argument("cubic height must be positive");
                   if (c.basis.empty()) throw std::invalid_argument("cubic open set needs a nonempty basis");
                   for (const auto& b : c.basis) {
                     if (b.size() != d) throw std::invalid_argument("basis point dimension mismatch");
                   }
                 },
                 [&](const IntersectBallShape& s) {
                   if (!s.inner) throw std::invalid_argument("intersection needs an inner domain");
                   if (s.inner->d != domain.d) throw std::invalid_argument("inner domain dimension mismatch");
                   if (!(s.radius > 0.0)) throw std::invalid_argument("truncation radius must be positive");
                   validate(*s.inner);
                 },
             },
             domain.shape);
}

bool contains(const DomainSpec& domain, std::span<const double> x) {
  require_dim(domain, x);
  return std::visit(Overload{
                        [&](const BallShape& b) {
                          double q = 0.0;
                          for (std::size_t i = 0; i < x.size(); ++i) q += (x[i] - b.center[i]) * (x[i] - b.center[i]);
                          return snapped_less(q, b.radius * b.radius);
                        },
                        [&](const BoxShape& b) {
                          for (std::size_t i = 0; i < x.size(); ++i) {
                            if (!snapped_less(b.lo[i], x[i]) || !snapped_less(x[i], b.hi[i])) return false;
                          }
                          return true;
                        },
                        [&](const CubicShape& c) { return cubic_contains(c, domain.d, x); },
                        [&](const IntersectBallShape& s) {
                          double q = 0.0;
                          for (double v : x) q += v * v;
                          return snapped_less(q, s.radius * s.radius) && contains(*s.inner, x);
                        },
                    },
                    domain.shape);
}

double distance_to_complement(const DomainSpec& domain, std::span<const double> x) {
  require_dim(domain, x);
  return std::visit(Overload{
                        [&](const BallShape& b) { return ball_distance_to_complement(b, x); },
                        [&](const BoxShape& b) {
                          double best = kInf;
                          for (std::size_t i = 0; i < x.size(); ++i) best = std::min({best, x[i] - b.lo[i], b.hi[i] - x[i]});
                          return std::max(best, 0.0);
                        },
                        [&](const CubicShape& c) { return cubic_distance_to_complement(c, domain.d, x); },
                        [&](const IntersectBallShape& s) {
                          const BallShape ball{std::vector<double>(x.size(), 0.0), s.radius};
                          return std::min(ball_distance_to_complement(ball, x), distance_to_complement(*s.inner, x));
                        },
                    },
                    domain.shape);
}

double distance_to_domain(const DomainSpec& domain, std::span<const double> x) {
  require_dim(domain, x);
  return std::visit(Overload{
                        [&](const BallShape& b) { return ball_distance_to_domain(b, x); },
                        [&](const BoxShape& b) {
                          double best = 0.0;
                          for (std::size_t i = 0; i < x.size(); ++i) best = std::max({best, b.lo[i] - x[i], x[i] - b.hi[i]});
                          return best;
                        },
                        [&](const CubicShape& c) {
                          const double s = cube_side(domain.d, c.m);
                          double best = kInf;
                          for (const auto& b : c.basis) best = std::min(best, distance_to_cube(x, b, s));
                          return best;
                        },
                        [&](const IntersectBallShape& s) { return intersect_distance_to_domain(s, domain.d, x); },
                    },
                    domain.shape);
}

std::pair<std::vector<double>, std::vector<double>> bounding_box(const DomainSpec& domain) {
  const auto d = static_cast<std::size_t>(domain.d);
  return std::visit(Overload{
                        [&](const BallShape& b) {
                          std::vector<double> lo(d), hi(d);
                          for (std::size_t i = 0; i < d; ++i) {
                            lo[i] = b.center[i] - b.radius;
                            hi[i] = b.center[i] + b.radius;
                          }
                          return std::pair{lo, hi};
                        },
                        [&](const BoxShape& b) { return std::pair{b.lo, b.hi}; },
                        [&](const CubicShape& c) {
                          const double s = cube_side(domain.d, c.m);
                          const auto [blo, bhi] = basis_bounds(c);
                          std::vector<double> lo(d), hi(d);
                          for (std::size_t i = 0; i < d; ++i) {
                            lo[i] = s * (static_cast<double>(blo[i]) - 0.5);
                            hi[i] = s * (static_cast<double>(bhi[i]) + 0.5);
                          }
                          return std::pair{lo, hi};
                        },
                        [&](const IntersectBallShape& s) {
                          auto [lo, hi] = bounding_box(*s.inner);
                          for (std::size_t i = 0; i < d; ++i) {
                            lo[i] = std::max(lo[i], -s.radius);
                            hi[i] = std::min(hi[i], s.radius);
                          }
                          return std::pair{lo, hi};
                        },
                    },
                    domain.shape);
}

double diameter(const DomainSpec& domain) {
  if (const auto* b = std::get_if<BallShape>(&domain.shape)) return 2.0 * b->radius;
  const auto [lo, hi] = bounding_box(domain);
  double q = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) q += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  if (!std::isfinite(q)) throw std::invalid_argument("unbounded domain has no finite diameter");
  return std::sqrt(q);
}

double volume(const DomainSpec& domain) {
  const double dd = static_cast<double>(domain.d);
  return std::visit(Overload{
                        [&](const BallShape& b) {
                          return std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0) * std::pow(b.radius, dd);
                        },
                        [&](const BoxShape& b) {
                          double v = 1.0;
                          for (std::size_t i = 0; i < b.lo.size(); ++i) v *= b.hi[i] - b.lo[i];
                          if (!std::isfinite(v)) throw std::invalid_argument("unbounded box has infinite volume");
                          return v;
                        },
                        [&](const CubicShape& c) {
                          return static_cast<double>(basis_set(c).size()) * std::pow(cube_side(domain.d, c.m), dd);
                        },
                        [](const IntersectBallShape&) -> double {
                          throw std::invalid_argument("volume of a truncated domain is not available in closed form");
                        },
                    },
                    domain.shape);
}

GridSpec::GridSpec(int d, long n) : d_(d), n_(n) {
  if (d < 1) throw std::invalid_argument("grid dimension must be positive");
  if (n < 1) throw std::invalid_argument("grid scale must be a positive integer");
  h_ = std::sqrt(static_cast<double>(d) / static_cast<double>(n));
}

GridSpec GridSpec::refined(int levels) const {
  if (levels < 0) throw std::invalid_argument("refinement levels must be nonnegative");
  long n = n_;
  for (int i = 0; i < levels; ++i) {
    if (n > std::numeric_limits<long>::max() / kRefinement) throw std::overflow_error("grid scale overflow");
    n *= kRefinement;
  }
  return GridSpec(d_, n);
}

bool GridSpec::nests_in(const GridSpec& other) const {
  if (other.d_ != d_ || other.n_ < n_ || other.n_ % n_ != 0) return false;
  long q = other.n_ / n_;
  while (q % kRefinement == 0) q /= kRefinement;
  return q == 1;
}

std::vector<double> GridSpec::to_point(std::span<const long> z) const {
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = h_ * static_cast<double>(z[i]);
  return x;
}

std::vector<GridSpec> refinement_sequence(int d, long m, int levels) {
  std::vector<GridSpec> out;
  for (int l = 0; l < levels; ++l) out.push_back(GridSpec(d, m).refined(l));
  return out;
}

LatticeSet grid_points(const DomainSpec& domain, const GridSpec& grid) {
  return enumerate(domain, grid, Select::kInside);
}

LatticeSet interior_grid(const DomainSpec& domain, const GridSpec& grid) {
  return enumerate(domain, grid, Select::kInterior);
}

LatticeSet exterior_grid(const DomainSpec& domain, const GridSpec& grid) {
  return enumerate(domain, grid, Select::kExterior);
}

IntPoint round_to_grid(std::span<const double> x, const GridSpec& grid) {
  if (x.size() != static_cast<std::size_t>(grid.dim())) throw std::invalid_argument("point dimension does not match the grid");
  IntPoint z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] / grid.spacing();
    const double f = std::floor(t);
    if (std::abs(t - f - 0.5) <= kSnap * std::max(1.0, std::abs(t))) {
      z[i] = static_cast<long>(f);
    } else {
      z[i] = static_cast<long>(std::round(t));
    }
  }
  return z;
}

DomainSpec cubic_hull(const LatticeSet& set, long m) {
  if (set.empty()) throw std::invalid_argument("cubic hull of an empty set");
  return cubic_open_set(m, set.points());
}

}  // namespace greenpot
