#include "greenpot/potential_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "greenpot/parallel.hpp"
#include "greenpot/rng.hpp"

namespace greenpot {

namespace {

void require_square(const Eigen::MatrixXd& u) {
  if (u.rows() != u.cols() || u.rows() == 0) throw std::invalid_argument("matrix must be square and nonempty");
}

void require_nonnegative(const Eigen::MatrixXd& u) {
  if ((u.array() < 0.0).any()) throw std::invalid_argument("matrix must be entrywise nonnegative");
  if (!u.allFinite()) throw std::invalid_argument("matrix entries must be finite");
}

// Random draw for trial t. Modes cycle: scaled Gaussian, Gaussian on a
// two-point support, and (when U is invertible) U^{-1}(1 + sigma z).
Eigen::VectorXd draw_trial(const Eigen::MatrixXd& u, const Eigen::MatrixXd* inverse, double unit,
                           std::uint64_t seed, long t) {
  RngStream rng(seed, static_cast<std::uint64_t>(t));
  const Eigen::Index n = u.rows();
  const double scale = unit * std::exp(std::log(0.05) + rng.uniform() * std::log(400.0));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  const int modes = inverse != nullptr ? 3 : 2;
  switch (t % modes) {
    case 0:
      for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
      break;
    case 1: {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      const auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
      v(i) += scale * rng.normal();
      v(j) += scale * rng.normal();
      break;
    }
    default: {
      const double sigma = std::exp(std::log(0.01) + rng.uniform() * std::log(100.0));
      Eigen::VectorXd w(n);
      for (Eigen::Index i = 0; i < n; ++i) w(i) = 1.0 + sigma * rng.normal();
      v = *inverse * w;
      break;
    }
  }
  return v;
}

}  // namespace

PotentialReport is_inverse_m_matrix(const Eigen::MatrixXd& u, double tol) {
  require_square(u);
  require_nonnegative(u);
  PotentialReport report;
  report.tol = tol;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(u);
  if (!lu.isInvertible()) {
    report.nonsingular = false;
    report.reliable = true;
    report.condition_estimate = std::numeric_limits<double>::infinity();
    return report;
  }
  report.nonsingular = true;
  const double rcond = lu.rcond();
  report.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd inv = lu.inverse();
  const double scale = inv.cwiseAbs().maxCoeff();
  const Eigen::Index n = u.rows();
  double max_off = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) max_off = std::max(max_off, inv(i, j));
    }
  }
  report.max_offdiag_of_inverse = n > 1 ? max_off / scale : 0.0;
  report.min_row_sum_of_inverse = inv.rowwise().sum().minCoeff() / scale;
  const bool pattern = report.max_offdiag_of_inverse <= tol && report.min_row_sum_of_inverse >= -tol;
  report.reliable = report.condition_estimate <= kUnreliableCondition;
  report.is_potential = report.reliable && pattern;
  return report;
}

double cmp_inequality(const Eigen::MatrixXd& u, const Eigen::VectorXd& v) {
  if (u.cols() != v.size() || u.rows() != v.size()) throw std::invalid_argument("cmp_inequality: dimension mismatch");
  const Eigen::VectorXd uv = u * v;
  return ((uv.array() - 1.0).max(0.0) * v.array()).sum();
}

CmpSample sample_cmp(const Eigen::MatrixXd& u, long trials, std::uint64_t seed) {
  require_square(u);
  if (trials < 1) throw std::invalid_argument("sample_cmp needs at least one trial");
  const Eigen::Index n = u.rows();
  const double row_max = u.rowwise().sum().maxCoeff();
  const double unit = row_max > 0.0 ? 1.0 / row_max : 1.0;

  std::optional<Eigen::MatrixXd> inverse;
  {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(u);
    if (lu.isInvertible()) inverse = lu.inverse();
  }
  const Eigen::MatrixXd* inv = inverse ? &*inverse : nullptr;

  std::vector<Eigen::VectorXd> fixed;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (double s : {0.5, 1.0, 2.0, 8.0}) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        e(i) = sign * s * unit * static_cast<double>(n);
        fixed.push_back(e);
        if (inv != nullptr) fixed.push_back(sign * s * inv->row(i).transpose());
      }
    }
  }

  CmpSample best;
  best.trials = trials;
  best.seed = seed;
  best.min_value = std::numeric_limits<double>::infinity();
  for (const auto& v : fixed) {
    const double value = cmp_inequality(u, v);
    if (value < best.min_value) {
      best.min_value = value;
      best.argmin = v;
    }
  }

  std::vector<double> values(static_cast<std::size_t>(trials));
  parallel_for(values.size(), [&](std::size_t t) {
    values[t] = cmp_inequality(u, draw_trial(u, inv, unit, seed, static_cast<long>(t)));
  });
  const auto it = std::min_element(values.begin(), values.end());
  if (*it < best.min_value) {
    best.min_value = *it;
    best.argmin = draw_trial(u, inv, unit, seed, static_cast<long>(it - values.begin()));
  }
  return best;
}

PotentialReport classify_potential(const Eigen::MatrixXd& u, double tol, long trials,
                                   std::uint64_t seed) {
  PotentialReport report = is_inverse_m_matrix(u, tol);
  const CmpSample sample = sample_cmp(u, trials, seed);
  report.cmp_inequality_min = sample.min_value;
  report.trials = trials;
  report.seed = seed;
  return report;
}

Eigen::MatrixXd hadamard_power(const Eigen::MatrixXd& u, double beta) {
  if (!(beta >= 1.0)) throw std::invalid_argument("hadamard_power requires beta >= 1");
  require_nonnegative(u);
  if (beta == 1.0) return u;
  return u.array().pow(beta).matrix();
}

Eigen::MatrixXd hadamard_exp(const Eigen::MatrixXd& u, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("hadamard_exp requires alpha > 0");
  return (alpha * u.array()).exp().matrix();
}

KilledGreenMatrix random_potential(int d, std::size_t min_size, std::size_t max_size,
                                   std::uint64_t seed) {
  if (d != 2 && d != 3) throw std::invalid_argument("random_potential supports d = 2 or 3");
  if (min_size < 1 || max_size < min_size) throw std::invalid_argument("random_potential: bad size range");
  if (max_size > 5000) throw std::invalid_argument("random_potential: size exceeds the dense solver range");
  RngStream rng(seed);
  const std::size_t target = min_size + rng.below(max_size - min_size + 1);
  std::vector<IntPoint> points{IntPoint(static_cast<std::size_t>(d), 0)};
  std::set<IntPoint> seen(points.begin(), points.end());
  while (points.size() < target) {
    IntPoint q = points[rng.below(points.size())];
    const auto dir = rng.below(2 * static_cast<std::uint64_t>(d));
    q[dir / 2] += (dir % 2 == 0) ? 1 : -1;
    if (seen.insert(q).second) points.push_back(q);
  }
  return killed_green_matrix(LatticeSet(d, std::move(points)));
}

}  // namespace greenpot
