#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/discrete_operator.hpp"
#include "greenpot/domain_grid.hpp"
#include "greenpot/errors.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/rng.hpp"

using namespace greenpot;

namespace {

using Point = std::vector<double>;

double sup_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("singleton operators carry weight 1/n") {
  for (int d : {2, 3, 4}) {
    for (long n : {2L, 18L, 162L}) {
      const GridSpec grid(d, n);
      const DomainSpec tiny = make_ball(Point(static_cast<std::size_t>(d), 0.0), 0.9 * grid.spacing());
      const auto op = DiscreteOperator::killed(tiny, grid, PowerTransform{1.0});
      REQUIRE(op.points().size() == 1);
      CHECK(op.matrix()(0, 0) == doctest::Approx(1.0 / static_cast<double>(n)).epsilon(1e-13));
    }
  }
  CHECK(operator_entry(3, 27, PowerTransform{1.0}, 1.0) == doctest::Approx(1.0 / 27).epsilon(1e-14));
  CHECK(operator_entry(2, 18, PowerTransform{1.0}, 4.0) == doctest::Approx(4.0 / 18).epsilon(1e-14));
  // exp: (2/n) exp(alpha g/2)
  CHECK(operator_entry(2, 18, ExpTransform{2.0}, 4.0) == doctest::Approx(2.0 / 18 * std::exp(4.0)).epsilon(1e-14));
}

TEST_CASE("transform validation") {
  CHECK_THROWS_AS(validate_operator_transform(3, PowerTransform{3.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_operator_transform(3, ExpTransform{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_operator_transform(2, ExpTransform{7.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_operator_transform(2, PowerTransform{0.5}), std::invalid_argument);
  CHECK_NOTHROW(validate_operator_transform(2, PowerTransform{12.0}));
  const DomainSpec ball = make_ball({0, 0, 0}, 1.0);
  CHECK_THROWS_AS(DiscreteOperator::free_space(make_ball({0, 0}, 1.0), GridSpec(2, 18), PowerTransform{1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteOperator::killed(make_ball({0, 0}, 1.0), GridSpec(2, 2 * 6561), PowerTransform{1.0}),
                  ResourceError);
  CHECK_THROWS_AS(DiscreteOperator::killed(make_ball({0.5, 0.5, 0.5}, 0.1), GridSpec(3, 3), PowerTransform{1.0}),
                  std::invalid_argument);
  CHECK_NOTHROW(DiscreteOperator::killed(ball, GridSpec(3, 3), PowerTransform{1.0}));
}

TEST_CASE("killed operators are symmetric, finite and below free space") {
  const GridSpec grid(3, 27);
  const DomainSpec ball = make_ball({0, 0, 0}, 1.0);
  for (double beta : {1.0, 1.5, 2.5}) {
    const auto killed = DiscreteOperator::killed(ball, grid, PowerTransform{beta});
    const auto free = DiscreteOperator::free_space(ball, grid, PowerTransform{beta});
    const Eigen::MatrixXd& k = killed.matrix();
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * k.maxCoeff());
    CHECK(k.minCoeff() >= 0.0);
    for (std::size_t i = 0; i < killed.points().size(); i += 7) {
      for (std::size_t j = 0; j < killed.points().size(); j += 5) {
        CHECK(killed.entry(killed.points()[i], killed.points()[j]) <=
              free.entry(killed.points()[i], killed.points()[j]) * (1 + 1e-12));
      }
    }
  }
  const auto ex = DiscreteOperator::killed(make_ball({0, 0}, 1.0), GridSpec(2, 162), ExpTransform{6.0});
  CHECK(ex.matrix().allFinite());
  CHECK(ex.matrix().minCoeff() > 0.0);
}

TEST_CASE("operators on interior grids lie below those on exterior grids") {
  const DomainSpec ball = make_ball({0.05, 0}, 1.0);
  for (long n : {18L, 162L}) {
    const GridSpec grid(2, n);
    const KilledGreenMatrix inner = killed_green_matrix(interior_grid(ball, grid));
    const KilledGreenMatrix outer = killed_green_matrix(exterior_grid(ball, grid));
    for (const Transform& t : {Transform{PowerTransform{1.0}}, Transform{PowerTransform{3.0}}, Transform{ExpTransform{4.0}}}) {
      const auto a = DiscreteOperator::from_killed(inner, grid, t);
      const auto b = DiscreteOperator::from_killed(outer, grid, t);
      for (const auto& p : a.points().points()) {
        for (const auto& q : a.points().points()) CHECK(a.entry(p, q) <= b.entry(p, q) * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("apply on grid points is the row action") {
  const GridSpec grid(3, 27);
  const DomainSpec ball = make_ball({0, 0, 0}, 1.0);
  const auto op = DiscreteOperator::killed(ball, grid, PowerTransform{1.5});
  const Function f = [](std::span<const double> x) { return std::sin(3 * x[0]) + x[1] * x[2]; };
  const Eigen::VectorXd all = apply_on_grid(op, f);
  for (std::size_t i = 0; i < op.points().size(); i += 11) {
    const Point x = grid.to_point(op.points()[i]);
    CHECK(apply(op, f, x) == doctest::Approx(all(static_cast<Eigen::Index>(i))).epsilon(1e-12));
  }
  // off the index set the killed operator vanishes
  CHECK(apply(op, f, Point{1.5, 0, 0}) == 0.0);
}

TEST_CASE("free-space operator reproduces the ball integral") {
  const Point o{0, 0, 0};
  const ConvergenceReport r = converge_free_ball(3, 1.0, o, o, 1.0, 3, 3);
  CHECK(r.reference == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.errors_decrease());
  CHECK(r.final_rel_err() < 0.03);
}

TEST_CASE("F = 1 stays below the volume bound") {
  const Function one = [](std::span<const double>) { return 1.0; };
  const DomainSpec ball = make_ball({0, 0, 0}, 1.0);
  const GridSpec grid(3, 243);
  const KilledGreenMatrix u = killed_green_matrix(grid_points(ball, grid));
  for (double beta : {1.0, 1.5, 2.0}) {
    const auto op = DiscreteOperator::from_killed(u, grid, PowerTransform{beta});
    const double bound = volume_bound(3, beta, diameter(ball));
    CHECK(sup_abs(apply_on_grid(op, one)) <= 1.1 * bound);
  }
}

TEST_CASE("cmp functional signs") {
  RngStream rng(12);
  const DomainSpec disk = make_ball({0, 0}, 1.0);
  const GridSpec grid(2, 162);
  const KilledGreenMatrix u = killed_green_matrix(grid_points(disk, grid));
  const Point lo{-1, -1}, hi{1, 1};
  for (const Transform& t : {Transform{PowerTransform{1.0}}, Transform{PowerTransform{4.0}}, Transform{ExpTransform{3.0}}}) {
    const auto op = DiscreteOperator::from_killed(u, grid, t);
    for (int k = 0; k < 5; ++k) {
      const RandomBumps f = random_bumps(lo, hi, 6, 50.0, rng);
      double sup = 0.0;
      for (const auto& p : op.points().points()) sup = std::max(sup, std::abs(f(grid.to_point(p))));
      CHECK(cmp_functional(op, f) >= -1e-8 * sup * sup * std::numbers::pi);
      const Function positive = [&](std::span<const double> x) { return std::abs(f(x)); };
      CHECK(cmp_functional(op, positive) >= 0.0);
    }
  }

  // non-potential entry pattern [[1,2],[2,1]] on two grid points
  const GridSpec g(2, 2);
  const LatticeSet two(2, {{0, 0}, {1, 0}});
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 2, 1;
  const auto probe = DiscreteOperator::from_matrix(g, two, m);
  const Function v = [](std::span<const double> x) { return x[0] < 0.5 ? -0.2 : 0.7; };
  CHECK(cmp_functional(probe, v) == doctest::Approx(-0.04).epsilon(1e-12));
  CHECK_THROWS_AS(DiscreteOperator::from_matrix(g, two, -m), std::invalid_argument);
}

TEST_CASE("uniform bound and equicontinuity of the free-space operator") {
  RngStream rng(77);
  const DomainSpec box = make_box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5});
  const Point lo{-0.5, -0.5, -0.5}, hi{0.5, 0.5, 0.5};
  for (int k = 0; k < 3; ++k) {
    const RandomBumps bumps = random_bumps(lo, hi, 4, 1.0, rng);
    // continuous and supported in the box
    const Function f = [&](std::span<const double> x) {
      double taper = 1.0;
      for (double v : x) taper *= std::max(0.0, 0.25 - v * v);
      return bumps(x) * taper * 64.0;
    };
    double sup = 0.0;
    for (double a = -0.5; a <= 0.5; a += 0.05) {
      for (double b = -0.5; b <= 0.5; b += 0.05) {
        for (double c = -0.5; c <= 0.5; c += 0.05) sup = std::max(sup, std::abs(f(Point{a, b, c})));
      }
    }
    sup *= 1.05;
    const double delta = 0.05;
    const double osc = sampled_oscillation(f, lo, hi, delta, delta / 4);
    for (double beta : {1.0, 1.5, 2.0}) {
      const double cap = gamma_cap(3, beta, lo, hi);
      for (long n : {27L, 243L}) {
        const GridSpec grid(3, n);
        const auto op = DiscreteOperator::free_space(box, grid, PowerTransform{beta});
        for (int t = 0; t < 8; ++t) {
          const Point x{-0.8 + 1.6 * rng.uniform(), -0.8 + 1.6 * rng.uniform(), -0.8 + 1.6 * rng.uniform()};
          const double fx = apply(op, f, x);
          CHECK(std::abs(fx) <= 3.0 * cap * sup);
          const Point y{x[0] + delta * rng.uniform(), x[1] - delta * rng.uniform(), x[2]};
          CHECK(std::abs(fx - apply(op, f, y)) <= osc * cap + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("killed operator with F supported outside vanishes") {
  const DomainSpec cube = cubic_open_set(3, {{0, 0, 0}});
  const Function outside = [](std::span<const double> x) { return x[0] > 0.6 ? 1.0 : 0.0; };
  const ConvergenceReport r = converge_killed(cube, PowerTransform{1.5}, outside, Point{0, 0, 0}, 3, 3, 0.0, "zero");
  for (const auto& level : r.levels) CHECK(level.value == 0.0);
}

TEST_CASE("convergence report bookkeeping") {
  const ConvergenceReport r = make_convergence_report("q", 1.0, "exact", {{2, 1.1}, {18, 1.01}, {162, 0.999}});
  CHECK(r.levels[0].abs_err == doctest::Approx(0.1));
  CHECK(std::isnan(r.levels[0].rate));
  CHECK(r.levels[1].rate == doctest::Approx(1.0 / std::log10(9.0)));
  CHECK(r.errors_decrease());
  CHECK(r.final_rel_err() == doctest::Approx(0.001));
  CHECK_FALSE(make_convergence_report("q", 1.0, "exact", {{2, 1.1}, {18, 1.2}}).errors_decrease());
  CHECK_THROWS_AS(make_convergence_report("q", 1.0, "exact", {{18, 1.1}, {2, 1.2}}), std::invalid_argument);
}

TEST_CASE("sampled oscillation") {
  const Point lo{0, 0}, hi{1, 1};
  const Function linear = [](std::span<const double> x) { return 2 * x[0] - x[1]; };
  CHECK(sampled_oscillation(linear, lo, hi, 0.1, 0.01) == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(sampled_oscillation(linear, lo, hi, 0.0, 0.01) == 0.0);
}
