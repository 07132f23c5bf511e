#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/domain_grid.hpp"
#include "greenpot/lattice.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/rng.hpp"

namespace greenpot {

using Function = std::function<double(std::span<const double>)>;

inline constexpr std::size_t kMaxDenseOperator = 20000;

// Validates a transform for walk operators in dimension d: power beta >= 1
// (beta < d/(d-2) for d >= 3), exponential only in d = 2 with 0 < alpha < 2 pi.
void validate_operator_transform(int d, const Transform& transform);

// Operator entry for a lattice Green value g at scale n:
//   (d/n)^{d/2} T(g n^{d/2-1} / d^{d/2}),
// with T the transform (in d = 2 the inner scaling is g/2).
double operator_entry(int d, long n, const Transform& transform, double g);

// Discretized Green operator on the grid sqrt(d/n) Z^d. Killed operators hold
// the dense entry matrix over the grid points of the domain; free-space
// operators cover the grid points near the support of the functions they act
// on and compute rows from the whole-space lattice Green function on demand.
class DiscreteOperator {
 public:
  // Killed on leaving the domain. Throws ResourceError beyond 20000 points and
  // std::invalid_argument when the domain has no grid points.
  static DiscreteOperator killed(const DomainSpec& domain, const GridSpec& grid, Transform transform);

  // Killed operator from an already computed killed Green matrix of the grid
  // set (lets several transforms share one solve).
  static DiscreteOperator from_killed(const KilledGreenMatrix& green, const GridSpec& grid, Transform transform);

  // Whole-space kernel (d >= 3) for functions supported in `support`. The
  // lattice Green table switches to its asymptote beyond `cutoff`.
  static DiscreteOperator free_space(const DomainSpec& support, const GridSpec& grid, Transform transform,
                                     long cutoff = 16);

  // Arbitrary nonnegative entry matrix on a lattice set (probes with
  // synthetic, possibly non-potential, matrices).
  static DiscreteOperator from_matrix(const GridSpec& grid, LatticeSet points, Eigen::MatrixXd entries);

  int dim() const { return grid_.dim(); }
  const GridSpec& grid() const { return grid_; }
  const LatticeSet& points() const { return points_; }
  const Transform& transform() const { return transform_; }
  bool is_free_space() const { return free_ != nullptr; }
  const std::optional<DomainSpec>& domain() const { return domain_; }

  // K(x, w) for lattice points; killed operators vanish off the index set.
  double entry(std::span<const long> x, std::span<const long> w) const;

  // Row of K at lattice point x over points().
  Eigen::VectorXd row(std::span<const long> x) const;

  // Dense entry matrix over points(); built on first use for free space.
  const Eigen::MatrixXd& matrix() const;

 private:
  struct FreeKernel;

  DiscreteOperator(GridSpec grid, LatticeSet points, Transform transform);

  GridSpec grid_;
  LatticeSet points_;
  Transform transform_;
  std::optional<DomainSpec> domain_;
  std::shared_ptr<const FreeKernel> free_;
  mutable std::shared_ptr<Eigen::MatrixXd> dense_;
};

// sum_w K(x(n), w) F(h w + x - h x(n)), x(n) = round_to_grid(x).
double apply(const DiscreteOperator& op, const Function& f, std::span<const double> x);

// Values of apply at every index point (matrix-vector action).
Eigen::VectorXd apply_on_grid(const DiscreteOperator& op, const Function& f);

// sum_x ((apply at x) - 1)^+ F(x) h^d over the index points.
double cmp_functional(const DiscreteOperator& op, const Function& f);

// Random sign-changing test function: a sum of Gaussian bumps with random
// centres in [lo, hi], widths between 5% and 50% of the box, and signed
// weights of magnitude up to `amplitude`.
struct RandomBumps {
  std::vector<std::vector<double>> centers;
  std::vector<double> widths;
  std::vector<double> weights;

  double operator()(std::span<const double> x) const;
};

RandomBumps random_bumps(std::span<const double> lo, std::span<const double> hi, int count, double amplitude,
                         RngStream& rng);

struct ConvergenceLevel {
  long n = 0;
  double value = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  // log(e_prev / e) / log(n / n_prev); NaN on the first level.
  double rate = 0.0;
};

struct ConvergenceReport {
  std::string quantity;
  double reference = 0.0;
  std::string reference_source;
  std::vector<ConvergenceLevel> levels;

  bool errors_decrease() const;
  double final_rel_err() const;
};

// Fills errors and rates. Throws when n is not strictly increasing.
ConvergenceReport make_convergence_report(std::string quantity, double reference, std::string source,
                                          const std::vector<std::pair<long, double>>& values);

// (1/2) g_{E_n}(x(n), y(n)) on the grid of the disk B(0, radius), n = m 9^l,
// against disk_green_2d.
ConvergenceReport converge_disk_green(double radius, std::span<const double> x, std::span<const double> y,
                                      long m, int levels);

// Free-space operator applied to 1_{B(center, r)} at x, n = m 9^l, against
// ball_kernel_integral.
ConvergenceReport converge_free_ball(int d, double beta, std::span<const double> x,
                                     std::span<const double> center, double r, long m, int levels);

// Killed operator applied to f at x over the levels, against a supplied
// reference.
ConvergenceReport converge_killed(const DomainSpec& domain, const Transform& transform, const Function& f,
                                  std::span<const double> x, long m, int levels, double reference,
                                  std::string source);

// Cap Gamma(F)/|F|_inf of the uniform and equicontinuity bounds for the
// free-space power-beta operator with F supported in the box [lo, hi]:
//   g(0,0)^beta d^{d(1-beta)/2} + c3 sup_u int_{K''} |u - z|^{beta(2-d)} dz,
// c3 = (c0/d (2 + sqrt d)^{d-2})^beta and K'' the box grown by 2 sqrt(d) in
// l-infinity. The sup-integral is bounded by the ball of equal volume.
double gamma_cap(int d, double beta, std::span<const double> lo, std::span<const double> hi);

// sup |F(a) - F(b)| over |a - b|_inf <= delta, sampled on a lattice of the
// given spacing (refined to at most delta/4) covering [lo - delta, hi + delta].
double sampled_oscillation(const Function& f, std::span<const double> lo, std::span<const double> hi,
                           double delta, double spacing);

}  // namespace greenpot
