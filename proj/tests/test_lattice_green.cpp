#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_bessel.h>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/lattice.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/potential_matrix.hpp"

using namespace greenpot;
using std::numbers::pi;

namespace {

// g(0, x) = int_0^inf prod_j e^{-t/d} I_{x_j}(t/d) dt for the rate-one
// continuous-time walk, which has the same visit expectations. The integrand
// is integrated adaptively up to T and its large-t expansion
//   (2 pi t/d)^{-d/2} (1 - sum_j (4 x_j^2 - 1) d / (8 t))
// covers the tail.
double bessel_green(int d, const std::vector<long>& x) {
  struct Params {
    int d;
    const std::vector<long>* x;
  } params{d, &x};
  gsl_function f;
  f.function = [](double t, void* p) {
    const auto* q = static_cast<const Params*>(p);
    double v = 1.0;
    for (long xj : *q->x) v *= gsl_sf_bessel_In_scaled(static_cast<int>(std::abs(xj)), t / q->d);
    return v;
  };
  f.params = &params;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  double total = 0.0;
  const double cuts[] = {0.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6};
  for (int i = 0; i + 1 < 7; ++i) {
    double value = 0.0, err = 0.0;
    gsl_integration_qag(&f, cuts[i], cuts[i + 1], 1e-13, 1e-12, 2000, GSL_INTEG_GAUSS61, ws, &value, &err);
    total += value;
  }
  gsl_integration_workspace_free(ws);
  const double T = 1e6;
  const double c = std::pow(2 * pi / d, -d / 2.0);
  double k = 0.0;
  for (long xj : x) k += (4.0 * xj * xj - 1.0) * d / 8.0;
  // int_T^inf c t^{-d/2} (1 - k/t) dt
  const double a = d / 2.0;
  total += c * (std::pow(T, 1 - a) / (a - 1) - k * std::pow(T, -a) / a);
  return total;
}

LatticeSet box_set(int d, long half) {
  std::vector<IntPoint> pts;
  IntPoint p(d, -half);
  for (;;) {
    pts.push_back(p);
    int i = d - 1;
    while (i >= 0 && p[i] == half) p[i--] = -half;
    if (i < 0) break;
    ++p[i];
  }
  return LatticeSet(d, std::move(pts));
}

double norm(const IntPoint& x) {
  double s = 0.0;
  for (long v : x) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("whole-space Green function against the Bessel integral") {
  gsl_set_error_handler_off();
  const std::vector<IntPoint> pts = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}, {2, 0, 0},
                                     {3, 2, 1}, {5, 0, 0}, {4, 4, 2}, {7, 3, 0}, {10, 0, 0}};
  for (const auto& x : pts) {
    CAPTURE(x[0]);
    CAPTURE(x[1]);
    CAPTURE(x[2]);
    CHECK(whole_space_green(3, x) == doctest::Approx(bessel_green(3, x)).epsilon(1e-7));
  }
  CHECK(whole_space_green(3, IntPoint{0, 0, 0}) == doctest::Approx(1.516386059).epsilon(1e-9));
  CHECK(whole_space_green(4, IntPoint{1, 0, 0, 2}) == doctest::Approx(bessel_green(4, {1, 0, 0, 2})).epsilon(1e-7));
}

TEST_CASE("whole-space Green function is harmonic off the origin") {
  const LatticeGreenTable& g = lattice_green_table(3);
  const std::vector<IntPoint> pts = {{0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {5, 3, 1}, {9, 0, 4}, {15, 2, 2}};
  for (const auto& x : pts) {
    double mean = 0.0;
    for (int k = 0; k < 3; ++k) {
      for (int s : {-1, 1}) {
        IntPoint y = x;
        y[k] += s;
        mean += g(y) / 6.0;
      }
    }
    const bool origin = norm(x) == 0.0;
    CHECK(g(x) - mean == doctest::Approx(origin ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("whole-space Green function bounds and symmetries") {
  const double g0 = whole_space_green(3, IntPoint{0, 0, 0});
  const double c0 = lattice_decay_constant(3);
  CHECK(c0 == doctest::Approx(g0 - 1.0).epsilon(1e-12));
  for (long a = 0; a <= 18; a += 3) {
    for (long b = 0; b <= a; b += 2) {
      for (long c = 0; c <= b; ++c) {
        const IntPoint x{a, b, c};
        const double v = whole_space_green(3, x);
        CHECK(v <= g0);
        if (norm(x) > 0) CHECK(v <= c0 / norm(x) * (1 + 1e-12));
        CHECK(whole_space_green(3, IntPoint{-c, a, -b}) == v);
      }
    }
  }
  // asymptote d C(d) |x|^{2-d}
  for (const IntPoint& x : std::vector<IntPoint>{{10, 0, 0}, {6, 8, 0}, {12, 5, 0}, {16, 16, 16}, {30, 0, 0}}) {
    const double ratio = whole_space_green(3, x) / (3 * green_constant(3) / norm(x));
    CHECK(std::abs(ratio - 1.0) <= 0.05);
  }
}

TEST_CASE("frozen decay constant matches a rescan") {
  CHECK(estimate_decay_constant(3, 6) == doctest::Approx(lattice_decay_constant(3)).epsilon(1e-12));
}

TEST_CASE("whole-space Green function against a large box") {
  // g(0) = g_box(0, 0) + E_0 g(S_exit) exactly
  const LatticeSet box = box_set(3, 8);
  const IntPoint o{0, 0, 0};
  const KilledGreenSolver solver(box);
  const std::size_t i0 = *box.index_of(o);
  const double killed = solver.entry(i0, i0);
  double harmonic = 0.0;
  for (const auto& [z, p] : exact_exit_law(box, o)) harmonic += p * whole_space_green(3, z);
  CHECK(killed < whole_space_green(3, o));
  CHECK(killed + harmonic == doctest::Approx(whole_space_green(3, o)).epsilon(1e-8));
}

TEST_CASE("potential kernel values") {
  CHECK(potential_kernel_2d(IntPoint{0, 0}) == 0.0);
  CHECK(potential_kernel_2d(IntPoint{1, 0}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(potential_kernel_2d(IntPoint{0, -1}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(potential_kernel_2d(IntPoint{1, 1}) == doctest::Approx(4.0 / pi).epsilon(1e-12));
  CHECK(potential_kernel_2d(IntPoint{2, 0}) == doctest::Approx(4.0 - 8.0 / pi).epsilon(1e-12));
  CHECK(potential_kernel_2d(IntPoint{2, 2}) == doctest::Approx(16.0 / (3 * pi)).epsilon(1e-12));
}

TEST_CASE("potential kernel from a large-box solve") {
  // a(x) = lim g_B(0,0) - g_B(x,0) as the box B grows; the error is O(|x|/L)
  const LatticeSet box = box_set(2, 100);
  const KilledGreenSolver solver(box);
  const std::size_t i0 = *box.index_of(IntPoint{0, 0});
  const Eigen::VectorXd col = solver.column(i0);
  for (const IntPoint& x : std::vector<IntPoint>{{1, 0}, {1, 1}, {2, 0}, {3, 1}}) {
    const double box_value = col(i0) - col(*box.index_of(x));
    CHECK(potential_kernel_2d(x) == doctest::Approx(box_value).epsilon(5e-3));
  }
}

TEST_CASE("potential kernel is harmonic off the origin") {
  for (const IntPoint& x : std::vector<IntPoint>{{0, 0}, {1, 0}, {3, 2}, {7, 7}, {20, 3}, {40, 11}}) {
    double mean = 0.0;
    for (int k = 0; k < 2; ++k) {
      for (int s : {-1, 1}) {
        IntPoint y = x;
        y[k] += s;
        mean += potential_kernel_2d(y) / 4.0;
      }
    }
    const double expected = norm(x) == 0.0 ? 1.0 : potential_kernel_2d(x);
    CHECK(mean == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("potential kernel log asymptotics") {
  const double kappa = (2 * std::numbers::egamma + std::log(8.0)) / pi;
  CHECK(kappa == doctest::Approx(1.0294).epsilon(1e-4));
  double previous = 1.0;
  for (long r : {5L, 10L, 20L, 40L}) {
    const IntPoint x{r, 0};
    const double dev = std::abs(potential_kernel_2d(x) - potential_kernel_asymptote(norm(x)));
    CHECK(dev <= previous / 3.0);
    // next term of the classical expansion on the axis: 1/(6 pi |x|^2)
    if (r >= 20) CHECK(dev * static_cast<double>(r * r) == doctest::Approx(1.0 / (6 * pi)).epsilon(0.02));
    previous = dev;
  }
}

TEST_CASE("killed Green matrix examples") {
  for (int d = 2; d <= 4; ++d) {
    const KilledGreenMatrix u = killed_green_matrix(LatticeSet(d, {IntPoint(d, 3)}));
    CHECK(u.entries.rows() == 1);
    CHECK(u.entries(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  const KilledGreenMatrix two = killed_green_matrix(LatticeSet(2, {{0, 0}, {1, 0}}));
  CHECK(two.entries(0, 0) == doctest::Approx(16.0 / 15).epsilon(1e-14));
  CHECK(two.entries(0, 1) == doctest::Approx(4.0 / 15).epsilon(1e-14));
  CHECK(two.entries(1, 0) == doctest::Approx(4.0 / 15).epsilon(1e-14));
  CHECK(two.entries(1, 1) == doctest::Approx(16.0 / 15).epsilon(1e-14));
}

TEST_CASE("dense and sparse killed Green solves agree") {
  const LatticeSet box = box_set(3, 4);
  const KilledGreenMatrix dense = killed_green_matrix(box);
  const KilledGreenSolver sparse(box);
  for (std::size_t j : {std::size_t{0}, std::size_t{100}, box.size() / 2, box.size() - 1}) {
    const Eigen::VectorXd col = sparse.column(j);
    CHECK((col - dense.entries.col(static_cast<Eigen::Index>(j))).cwiseAbs().maxCoeff() < 1e-10);
  }
  const KilledGreenMatrix big = killed_green_matrix(box_set(2, 36));  // 5329 points, sparse path
  CHECK(big.entries.rows() == 5329);
  CHECK((big.entries - big.entries.transpose()).cwiseAbs().maxCoeff() < 1e-10 * big.entries.maxCoeff());
  CHECK(big.entries.diagonal().minCoeff() >= 1.0);
}

TEST_CASE("killed Green via the whole-space kernel and the exact exit law") {
  const auto single = exact_exit_law(LatticeSet(2, {{0, 0}}), IntPoint{0, 0});
  CHECK(single.size() == 4);
  for (const auto& [z, p] : single) CHECK(p == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(killed_green_via_kernel(LatticeSet(2, {{0, 0}}), IntPoint{0, 0}, IntPoint{0, 0}, single) ==
        doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 gen(3);
  for (int d : {2, 3}) {
    for (int trial = 0; trial < 4; ++trial) {
      const KilledGreenMatrix u = random_potential(d, 5, 30, gen());
      const LatticeSet& set = u.set;
      for (std::size_t i = 0; i < set.size(); i += 3) {
        const ExitLaw law = exact_exit_law(set, set[i]);
        double mass = 0.0;
        for (const auto& [z, p] : law) {
          mass += p;
          CHECK_FALSE(set.contains(z));
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t j = 0; j < set.size(); j += 2) {
          const double via = killed_green_via_kernel(set, set[i], set[j], law);
          CHECK(via == doctest::Approx(u.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                           .epsilon(1e-8));
        }
      }
    }
  }
  ExitLaw bad = single;
  bad[0].second = 0.9;
  CHECK_THROWS_AS(killed_green_via_kernel(LatticeSet(2, {{0, 0}}), IntPoint{0, 0}, IntPoint{0, 0}, bad),
                  std::invalid_argument);
}

TEST_CASE("planar killed Green domination") {
  // E_n is the grid of the disk of radius 2 at n = 162 (spacing 1/9). The
  // budget adds the largest deviation of a(x) from its asymptote and the
  // overshoot of the exit point beyond the circle.
  const long n = 162;
  const double h = std::sqrt(2.0 / n);
  const long reach = static_cast<long>(std::ceil(2.0 / h));
  std::vector<IntPoint> pts, inner;
  for (long i = -reach; i <= reach; ++i) {
    for (long j = -reach; j <= reach; ++j) {
      const double r = h * std::hypot(static_cast<double>(i), static_cast<double>(j));
      if (r < 2.0) pts.push_back({i, j});
      if (r < 1.0) inner.push_back({i, j});
    }
  }
  const LatticeSet set(2, pts);
  const KilledGreenMatrix u = killed_green_matrix(set);
  double psi = 0.0;
  for (long i = 0; i <= 60; ++i) {
    for (long j = 0; j <= i; ++j) {
      if (i == 0) continue;
      const IntPoint x{i, j};
      psi = std::max(psi, std::abs(potential_kernel_2d(x) - potential_kernel_asymptote(norm(x))));
    }
  }
  CHECK(psi < 0.05);
  const double c = std::log(3.0) / pi + psi + std::log((3.0 + 2 * h) / 3.0) / pi;
  for (std::size_t a = 0; a < inner.size(); a += 3) {
    for (std::size_t b = 0; b < inner.size(); b += 5) {
      if (a == b) continue;
      const double dist = h * std::hypot(static_cast<double>(inner[a][0] - inner[b][0]),
                                         static_cast<double>(inner[a][1] - inner[b][1]));
      const double value = 0.5 * u.entries(static_cast<Eigen::Index>(*set.index_of(inner[a])),
                                            static_cast<Eigen::Index>(*set.index_of(inner[b])));
      CHECK(value <= std::abs(std::log(dist)) / pi + c);
    }
  }
}
