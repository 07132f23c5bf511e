#include "greenpot/lattice_green.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/errors.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGaussOrder = 20;
constexpr std::size_t kDenseLimit = 5000;

struct Node {
  double x;
  double w;
};

// Composite Gauss-Legendre rule on [lo, hi] with equal panels.
std::vector<Node> composite_gauss(double lo, double hi, int panels) {
  using Rule = boost::math::quadrature::gauss<double, kGaussOrder>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  std::vector<Node> nodes;
  nodes.reserve(static_cast<std::size_t>(panels) * kGaussOrder);
  const double width = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    const double half = 0.5 * width;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      if (abscissa[i] == 0.0) {
        nodes.push_back({mid, half * weights[i]});
        continue;
      }
      nodes.push_back({mid - half * abscissa[i], half * weights[i]});
      nodes.push_back({mid + half * abscissa[i], half * weights[i]});
    }
  }
  return nodes;
}

IntPoint sorted_abs(std::span<const long> x) {
  IntPoint s(x.begin(), x.end());
  for (auto& v : s) v = std::labs(v);
  std::sort(s.begin(), s.end());
  return s;
}

double euclid(std::span<const long> x) {
  double s = 0.0;
  for (long v : x) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

// Recursive tensor product over the v-coordinates of one Duffy pyramid.
struct PyramidIntegrand {
  int m;                         // number of angular dimensions (d - 1)
  int apex;                      // coordinate carrying theta = u
  const std::vector<double>* freq;  // oscillation frequencies for the m coordinates
  long decay;                    // |x| of the analytically integrated coordinate
  const std::vector<Node>* v_nodes;

  // Sum over v-tensor for fixed u; theta_apex = u, theta_j = u v_j.
  double at_u(double u) const {
    std::vector<double> theta(static_cast<std::size_t>(m), 0.0);
    theta[static_cast<std::size_t>(apex)] = u;
    return recurse(0, u, theta);
  }

  double recurse(int j, double u, std::vector<double>& theta) const {
    if (j == m) return evaluate(theta);
    if (j == apex) return recurse(j + 1, u, theta);
    double sum = 0.0;
    for (const auto& node : *v_nodes) {
      theta[static_cast<std::size_t>(j)] = u * node.x;
      sum += node.w * recurse(j + 1, u, theta);
    }
    return sum;
  }

  double evaluate(const std::vector<double>& theta) const {
    double c = 0.0;
    double oscillation = 1.0;
    for (int j = 0; j < m; ++j) {
      const double half = std::sin(0.5 * theta[static_cast<std::size_t>(j)]);
      c += 2.0 * half * half;
      const double f = (*freq)[static_cast<std::size_t>(j)];
      if (f != 0.0) oscillation *= std::cos(theta[static_cast<std::size_t>(j)] * f);
    }
    const double s = std::sqrt(c * (2.0 + c));
    const double t = 1.0 / (1.0 + c + s);
    return oscillation * std::pow(t, static_cast<double>(decay)) / s;
  }
};

std::map<IntPoint, double>& potential_memo() {
  static std::map<IntPoint, double> memo;
  return memo;
}

std::mutex& potential_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double lattice_green_fourier(int d, std::span<const long> x) {
  if (d < 3) throw std::invalid_argument("lattice_green_fourier requires d >= 3");
  if (x.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("lattice point dimension mismatch");
  const IntPoint s = sorted_abs(x);
  const long decay = s.back();
  const int m = d - 1;
  std::vector<double> freq(s.begin(), s.end() - 1);
  const long largest = std::max(decay, static_cast<long>(freq.empty() ? 0.0 : freq.back()));
  const int panels = 3 + static_cast<int>(largest / 3);
  const auto u_nodes = composite_gauss(0.0, kPi, panels);
  const auto v_nodes = composite_gauss(0.0, 1.0, panels);

  double total = 0.0;
  for (int apex = 0; apex < m; ++apex) {
    PyramidIntegrand f{m, apex, &freq, decay, &v_nodes};
    double sum = 0.0;
    for (const auto& node : u_nodes) {
      sum += node.w * std::pow(node.x, m - 1) * f.at_u(node.x);
    }
    total += sum;
  }
  const double value = d * std::pow(kPi, 1 - d) * total;
  if (!std::isfinite(value)) throw QuadratureError("lattice_green_fourier: non-finite result");
  return value;
}

LatticeGreenTable::LatticeGreenTable(int d, long cutoff) : d_(d), cutoff_(cutoff) {
  if (d < 3) throw std::invalid_argument("LatticeGreenTable requires d >= 3");
  if (cutoff < 0) throw std::invalid_argument("LatticeGreenTable cutoff must be nonnegative");
}

double LatticeGreenTable::operator()(std::span<const long> x) const {
  if (x.size() != static_cast<std::size_t>(d_)) throw std::invalid_argument("lattice point dimension mismatch");
  IntPoint key = sorted_abs(x);
  if (key.back() > cutoff_) {
    return d_ * green_constant(d_) * std::pow(euclid(x), 2.0 - d_);
  }
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const double value = lattice_green_fourier(d_, key);
  std::lock_guard lock(mutex_);
  memo_.emplace(std::move(key), value);
  return value;
}

const LatticeGreenTable& lattice_green_table(int d) {
  static std::mutex registry_mutex;
  static std::map<int, std::unique_ptr<LatticeGreenTable>> registry;
  std::lock_guard lock(registry_mutex);
  auto& slot = registry[d];
  if (!slot) slot = std::make_unique<LatticeGreenTable>(d);
  return *slot;
}

double whole_space_green(int d, std::span<const long> x) { return lattice_green_table(d)(x); }

double lattice_decay_constant(int d) {
  // d = 3: frozen output of estimate_decay_constant(3, 16); the maximum sits
  // at x = e1, where g(0, e1) = g(0, 0) - 1.
  if (d == 3) return 0.516386059151978;
  // Higher dimensions are not exercised at scale; scan a small cube once.
  static std::mutex m;
  static std::map<int, double> frozen;
  std::lock_guard lock(m);
  auto it = frozen.find(d);
  if (it == frozen.end()) it = frozen.emplace(d, estimate_decay_constant(d, 3)).first;
  return it->second;
}

double estimate_decay_constant(int d, long cutoff) {
  // Enumerate sorted |x| tuples 0 <= s_0 <= ... <= s_{d-1} <= cutoff.
  double best = 0.0;
  IntPoint s(static_cast<std::size_t>(d), 0);
  const auto& table = lattice_green_table(d);
  while (true) {
    if (s.back() != 0) best = std::max(best, table(s) * std::pow(euclid(s), d - 2.0));
    int k = d - 1;
    while (k >= 0 && s[static_cast<std::size_t>(k)] == cutoff) --k;
    if (k < 0) break;
    const long next = s[static_cast<std::size_t>(k)] + 1;
    for (int j = k; j < d; ++j) s[static_cast<std::size_t>(j)] = next;
  }
  return best;
}

double potential_kernel_2d(std::span<const long> x) {
  if (x.size() != 2) throw std::invalid_argument("potential_kernel_2d requires a planar point");
  IntPoint key = sorted_abs(x);
  if (key[1] == 0) return 0.0;
  {
    std::lock_guard lock(potential_mutex());
    auto& memo = potential_memo();
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  const double freq = static_cast<double>(key[0]);
  const double decay = static_cast<double>(key[1]);
  const auto nodes = composite_gauss(0.0, kPi, 2 + static_cast<int>(key[1] / 2));
  double sum = 0.0;
  for (const auto& node : nodes) {
    const double half = std::sin(0.5 * node.x);
    const double c = 2.0 * half * half;
    const double s = std::sqrt(c * (2.0 + c));
    const double t = 1.0 / (1.0 + c + s);
    sum += node.w * (1.0 - std::cos(node.x * freq) * std::pow(t, decay)) / s;
  }
  const double value = 2.0 / kPi * sum;
  if (!std::isfinite(value)) throw QuadratureError("potential_kernel_2d: non-finite result");
  std::lock_guard lock(potential_mutex());
  potential_memo().emplace(std::move(key), value);
  return value;
}

double potential_kernel_asymptote(double norm) {
  return 2.0 / kPi * std::log(std::max(norm, 1.0)) + (2.0 * std::numbers::egamma + std::log(8.0)) / kPi;
}

Eigen::SparseMatrix<double> killed_generator(const LatticeSet& set) {
  const auto n = static_cast<Eigen::Index>(set.size());
  const int d = set.dim();
  const double step = 1.0 / (2.0 * d);
  const auto table = set.neighbour_table();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(set.size() * (2 * static_cast<std::size_t>(d) + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    triplets.emplace_back(i, i, 1.0);
    for (int k = 0; k < 2 * d; ++k) {
      const long j = table[static_cast<std::size_t>(i) * 2 * d + k];
      if (j >= 0) triplets.emplace_back(i, j, -step);
    }
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

KilledGreenSolver::KilledGreenSolver(const LatticeSet& set) : set_(set) {
  if (set_.empty()) throw std::invalid_argument("killed Green solver needs a nonempty set");
  factor_.compute(killed_generator(set_));
  if (factor_.info() != Eigen::Success) {
    throw SolverError("I - P_E factorization failed; it must be a nonsingular M-matrix");
  }
}

Eigen::VectorXd KilledGreenSolver::column(std::size_t j) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(set_.size()));
  rhs(static_cast<Eigen::Index>(j)) = 1.0;
  Eigen::VectorXd col = factor_.solve(rhs);
  if (factor_.info() != Eigen::Success) throw SolverError("killed Green column solve failed");
  return col;
}

KilledGreenMatrix killed_green_matrix(const LatticeSet& set) {
  if (set.empty()) throw std::invalid_argument("killed_green_matrix needs a nonempty set");
  const auto n = static_cast<Eigen::Index>(set.size());
  Eigen::MatrixXd u(n, n);
  if (set.size() <= kDenseLimit) {
    Eigen::MatrixXd generator = Eigen::MatrixXd(killed_generator(set));
    Eigen::LLT<Eigen::MatrixXd> llt(generator);
    if (llt.info() != Eigen::Success) {
      throw SolverError("I - P_E is not positive definite; internal error");
    }
    u = llt.solve(Eigen::MatrixXd::Identity(n, n));
  } else {
    KilledGreenSolver solver(set);
    parallel_for(set.size(), [&](std::size_t j) { u.col(static_cast<Eigen::Index>(j)) = solver.column(j); });
  }
  Eigen::MatrixXd sym = 0.5 * (u + u.transpose());
  sym = sym.cwiseMax(0.0);
  return {set, std::move(sym)};
}

ExitLaw exact_exit_law(const LatticeSet& set, std::span<const long> x) {
  auto xi = set.index_of(x);
  if (!xi) throw std::invalid_argument("exact_exit_law: start point not in the set");
  KilledGreenSolver solver(set);
  const Eigen::VectorXd row = solver.column(*xi);  // symmetric
  const int d = set.dim();
  std::map<IntPoint, double> law;
  for (std::size_t i = 0; i < set.size(); ++i) {
    IntPoint q = set[i];
    for (int k = 0; k < d; ++k) {
      for (long step : {1L, -1L}) {
        q[static_cast<std::size_t>(k)] = set[i][static_cast<std::size_t>(k)] + step;
        if (!set.contains(q)) law[q] += row(static_cast<Eigen::Index>(i)) / (2.0 * d);
      }
      q[static_cast<std::size_t>(k)] = set[i][static_cast<std::size_t>(k)];
    }
  }
  return {law.begin(), law.end()};
}

double killed_green_via_kernel(const LatticeSet& set, std::span<const long> x,
                               std::span<const long> y, const ExitLaw& exit_law) {
  const int d = set.dim();
  if (!set.contains(x) || !set.contains(y)) throw std::invalid_argument("killed_green_via_kernel: x, y must lie in E");
  double mass = 0.0;
  for (const auto& [point, p] : exit_law) {
    if (p < -1e-12) throw std::invalid_argument("exit law has a negative probability");
    mass += p;
  }
  if (mass > 1.0 + 1e-9) throw std::invalid_argument("exit law total mass exceeds 1");

  IntPoint diff(static_cast<std::size_t>(d));
  auto offset = [&](std::span<const long> a) -> std::span<const long> {
    for (int k = 0; k < d; ++k) diff[static_cast<std::size_t>(k)] = a[static_cast<std::size_t>(k)] - y[static_cast<std::size_t>(k)];
    return diff;
  };
  double boundary = 0.0;
  if (d == 2) {
    for (const auto& [point, p] : exit_law) boundary += potential_kernel_2d(offset(point)) * p;
    return boundary - potential_kernel_2d(offset(x));
  }
  for (const auto& [point, p] : exit_law) boundary += whole_space_green(d, offset(point)) * p;
  return whole_space_green(d, offset(x)) - boundary;
}

}  // namespace greenpot
