#pragma once

#include <memory>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "greenpot/lattice.hpp"

namespace greenpot {

struct BallShape {
  std::vector<double> center;
  double radius = 1.0;
};

// Open box (lo, hi); infinite corners are allowed.
struct BoxShape {
  std::vector<double> lo;
  std::vector<double> hi;
};

// Interior of the union of the closed cubes of side sqrt(d/m) centred at
// sqrt(d/m) * b for b in basis.
struct CubicShape {
  long m = 1;
  std::vector<IntPoint> basis;
};

struct DomainSpec;

// inner ∩ B(0, radius), Euclidean ball about the origin.
struct IntersectBallShape {
  std::shared_ptr<const DomainSpec> inner;
  double radius = 1.0;
};

using Shape = std::variant<BallShape, BoxShape, CubicShape, IntersectBallShape>;

struct DomainSpec {
  int d = 2;
  Shape shape;
};

DomainSpec make_ball(std::vector<double> center, double radius);
DomainSpec make_box(std::vector<double> lo, std::vector<double> hi);
DomainSpec intersect_with_ball(DomainSpec inner, double radius);
// Throws std::invalid_argument for an empty basis or mixed dimensions.
DomainSpec cubic_open_set(long m, std::vector<IntPoint> basis);

// Throws std::invalid_argument on inconsistent dimensions or empty interior.
void validate(const DomainSpec& domain);

bool contains(const DomainSpec& domain, std::span<const double> x);

// l-infinity distance from x to the complement; 0 when x is outside.
double distance_to_complement(const DomainSpec& domain, std::span<const double> x);

// l-infinity distance from x to the domain; 0 when x is inside. Throws
// std::invalid_argument for a ball intersected with a ball.
double distance_to_domain(const DomainSpec& domain, std::span<const double> x);

// Closed bounding box; coordinates may be infinite.
std::pair<std::vector<double>, std::vector<double>> bounding_box(const DomainSpec& domain);

// Euclidean diameter of the bounding box (finite domains only).
double diameter(const DomainSpec& domain);

// Lebesgue measure; throws for unbounded domains.
double volume(const DomainSpec& domain);

// The grid sqrt(d/n) Z^d. Refinement multiplies n by 9 so that grids nest.
class GridSpec {
 public:
  static constexpr long kRefinement = 9;

  GridSpec(int d, long n);

  int dim() const { return d_; }
  long scale() const { return n_; }
  double spacing() const { return h_; }
  GridSpec refined(int levels = 1) const;
  // True when other = this refined some number of times.
  bool nests_in(const GridSpec& other) const;

  std::vector<double> to_point(std::span<const long> z) const;

 private:
  int d_;
  long n_;
  double h_;
};

// Scales m * 9^l for l = 0..levels-1.
std::vector<GridSpec> refinement_sequence(int d, long m, int levels);

// Integer points z with h z inside the open domain, lexicographically sorted.
LatticeSet grid_points(const DomainSpec& domain, const GridSpec& grid);

// Grid points whose l-infinity distance to the complement exceeds h.
LatticeSet interior_grid(const DomainSpec& domain, const GridSpec& grid);

// Grid points whose l-infinity distance to the domain is below h.
LatticeSet exterior_grid(const DomainSpec& domain, const GridSpec& grid);

// Nearest grid point in l-infinity; ties go to the lexicographically smaller
// point.
IntPoint round_to_grid(std::span<const double> x, const GridSpec& grid);

// Cubic open set at height m built from the grid points of a lattice set at
// the same scale.
DomainSpec cubic_hull(const LatticeSet& set, long m);

}  // namespace greenpot
