#pragma once

#include <map>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "greenpot/lattice.hpp"

namespace greenpot {

// Green function g(0, x) of the simple random walk on Z^d (d >= 3), i.e. the
// expected number of visits to x starting from 0, by Fourier quadrature:
//   g(0,x) = (2 pi)^{-d} int_{[-pi,pi]^d} cos(theta.x) / (1 - phi(theta)) dtheta.
// The coordinate of largest modulus is integrated in closed form; the rest is
// a tensor Gauss-Legendre rule after a corner (Duffy) split that removes the
// singularity at theta = 0. Not cached.
double lattice_green_fourier(int d, std::span<const long> x);

// Cached whole-space lattice Green function. Values with |x|_inf <= cutoff are
// computed by lattice_green_fourier and memoized; beyond the cutoff the
// asymptote d C(d) |x|^{2-d} is returned.
class LatticeGreenTable {
 public:
  explicit LatticeGreenTable(int d, long cutoff = 16);

  int dim() const { return d_; }
  long cutoff() const { return cutoff_; }
  double operator()(std::span<const long> x) const;

 private:
  int d_;
  long cutoff_;
  mutable std::mutex mutex_;
  mutable std::map<IntPoint, double> memo_;
};

// Shared default table (cutoff 16) for dimension d.
const LatticeGreenTable& lattice_green_table(int d);

double whole_space_green(int d, std::span<const long> x);

// Constant c0(d) with g(0,x) <= c0 |x|^{2-d} for x != 0. For d = 3 this is the
// frozen max over 0 < |x|_inf <= 16 of g(0,x) |x| (estimate_decay_constant);
// higher dimensions scan |x|_inf <= 3 once per process.
double lattice_decay_constant(int d);

// Recomputes max over 0 < |x|_inf <= cutoff of g(0,x) |x|^{d-2}.
double estimate_decay_constant(int d, long cutoff);

// Potential kernel a(x) = sum_n [p_n(0,0) - p_n(0,x)] of the planar walk, by a
// one-dimensional Fourier quadrature (memoized).
double potential_kernel_2d(std::span<const long> x);

// (2/pi) log|x| + (2 gamma_Euler + log 8)/pi, the large-|x| form of a(x).
double potential_kernel_asymptote(double norm);

// Killed Green matrix: U = (I - P_E)^{-1}, P_E the walk restricted to E.
struct KilledGreenMatrix {
  LatticeSet set;
  Eigen::MatrixXd entries;
  int dim() const { return set.dim(); }
};

// Sparse I - P_E.
Eigen::SparseMatrix<double> killed_generator(const LatticeSet& set);

// Sparse Cholesky factorization of I - P_E; columns of the killed Green
// matrix on demand.
class KilledGreenSolver {
 public:
  explicit KilledGreenSolver(const LatticeSet& set);

  const LatticeSet& set() const { return set_; }
  Eigen::VectorXd column(std::size_t j) const;
  double entry(std::size_t i, std::size_t j) const { return column(j)(static_cast<Eigen::Index>(i)); }

 private:
  LatticeSet set_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> factor_;
};

// Dense for |E| <= 5000, sparse Cholesky columns beyond. The result is
// symmetrized and roundoff negatives are clamped to zero.
KilledGreenMatrix killed_green_matrix(const LatticeSet& set);

// Distribution of the first point outside E for the walk started at x.
using ExitLaw = std::vector<std::pair<IntPoint, double>>;

// Exact exit law from the absorbing-chain solve.
ExitLaw exact_exit_law(const LatticeSet& set, std::span<const long> x);

// g_E(x,y) from the whole-space kernel and an exit law:
//   d = 2:  sum_z a(z - y) p(z) - a(x - y)
//   d >= 3: g(x - y) - sum_z g(z - y) p(z)
// Throws std::invalid_argument when the law is not a sub-probability.
double killed_green_via_kernel(const LatticeSet& set, std::span<const long> x,
                               std::span<const long> y, const ExitLaw& exit_law);

}  // namespace greenpot
