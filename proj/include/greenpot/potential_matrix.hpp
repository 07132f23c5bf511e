#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "greenpot/lattice_green.hpp"

namespace greenpot {

// Outcome of the Choquet-Deny test (nonsingular U is a potential iff U^{-1}
// has nonpositive off-diagonal entries and nonnegative row sums), optionally
// with a sampled CMP-inequality minimum.
struct PotentialReport {
  bool nonsingular = false;
  double max_offdiag_of_inverse = 0.0;
  double min_row_sum_of_inverse = 0.0;
  bool is_potential = false;
  // false when the condition estimate exceeds 1e12; is_potential is then
  // left false rather than decided.
  bool reliable = true;
  double condition_estimate = 0.0;
  double tol = 1e-8;
  std::optional<double> cmp_inequality_min;
  long trials = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kUnreliableCondition = 1e12;

// Inverts U and checks the sign pattern relative to scale = max |U^{-1}_ij|.
// Singularity is a report outcome, not an error. U must be entrywise >= 0.
PotentialReport is_inverse_m_matrix(const Eigen::MatrixXd& u, double tol = 1e-8);

// sum_j ((Uv)_j - 1)^+ v_j
double cmp_inequality(const Eigen::MatrixXd& u, const Eigen::VectorXd& v);

struct CmpSample {
  double min_value = 0.0;
  Eigen::VectorXd argmin;
  long trials = 0;
  std::uint64_t seed = 0;
};

// Minimum of cmp_inequality over random and adversarial v. Trial t draws from
// RngStream(seed, t); adversarial candidates (signed scaled indicators,
// rows of U^{-1}) are evaluated in addition to the random trials.
CmpSample sample_cmp(const Eigen::MatrixXd& u, long trials, std::uint64_t seed);

// is_inverse_m_matrix followed by sample_cmp (reported even when singular).
PotentialReport classify_potential(const Eigen::MatrixXd& u, double tol, long trials,
                                   std::uint64_t seed);

// Entrywise U_ij^beta, beta >= 1 (0^beta = 0).
Eigen::MatrixXd hadamard_power(const Eigen::MatrixXd& u, double beta);

// Entrywise exp(alpha U_ij), alpha > 0.
Eigen::MatrixXd hadamard_exp(const Eigen::MatrixXd& u, double alpha);

// Killed Green matrix of a random connected lattice set grown from the
// origin by random nearest-neighbour dilation; size uniform in
// [min_size, max_size].
KilledGreenMatrix random_potential(int d, std::size_t min_size, std::size_t max_size,
                                   std::uint64_t seed);

}  // namespace greenpot
