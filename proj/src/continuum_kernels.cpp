#include "greenpot/continuum_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include "greenpot/errors.hpp"

namespace greenpot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

void require_same_dim(std::span<const double> x, std::span<const double> y, std::size_t d) {
  if (x.size() != d || y.size() != d) {
    throw std::invalid_argument("point dimension mismatch: expected " + std::to_string(d));
  }
}

double distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// Disk Green function without the domain check; points on or beyond the
// circle give 0. Uses |x| |y - x*| = sqrt(|x|^2 |y|^2 - 2 R^2 x.y + R^4),
// which is symmetric and exact at x = 0.
double disk_green_raw(double R, double x0, double x1, double y0, double y1) {
  const double dx = x0 - y0;
  const double dy = x1 - y1;
  const double dist = std::hypot(dx, dy);
  if (dist == 0.0) return kInf;
  const double R2 = R * R;
  if (x0 * x0 + x1 * x1 >= R2 || y0 * y0 + y1 * y1 >= R2) return 0.0;
  const double xx = x0 * x0 + x1 * x1;
  const double yy = y0 * y0 + y1 * y1;
  const double xy = x0 * y0 + x1 * y1;
  const double q = std::sqrt(std::max(0.0, xx * yy - 2.0 * R2 * xy + R2 * R2));
  return std::max(0.0, (std::log(q / R) - std::log(dist)) / kPi);
}

template <class F>
double integrate_checked(F f, double a, double b, double tol, const char* what) {
  if (b <= a) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, a, b, tol, &error, &l1);
  if (!std::isfinite(value) || error > 10.0 * tol * std::max(l1, 1e-300) + 1e-300) {
    throw QuadratureError(std::string(what) + ": quadrature did not converge (error estimate " +
                          std::to_string(error) + ")");
  }
  return value;
}

// Ray from x in direction with b = w.(x - c) and q = |x-c|^2 - r^2 meets the
// ball on [lo, hi] (empty when hi <= lo).
void ray_interval(double b, double q, double& lo, double& hi) {
  const double disc = b * b - q;
  if (disc <= 0.0) {
    lo = hi = 0.0;
    return;
  }
  const double s = std::sqrt(disc);
  hi = -b + s;
  lo = std::max(0.0, -b - s);
  if (hi <= 0.0) lo = hi = 0.0;
}

double free_ball_integral(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> center, double r, double tol) {
  const int d = spec.dim();
  const double beta = spec.beta();
  const double gamma = d - beta * (d - 2);
  const double cb = std::pow(green_constant(d), beta);
  auto primitive = [&](double rho) { return rho <= 0.0 ? 0.0 : cb * std::pow(rho, gamma) / gamma; };

  const double a = distance(x, center);
  if (a <= 1e-14 * r) return unit_sphere_area(d) * primitive(r);

  // Shells around x: the sphere S(x, rho) meets the ball in a cap of polar
  // half-angle theta with cos theta = (rho^2 + a^2 - r^2) / (2 rho a), whose
  // area is S(d-1) rho^{d-1} J(theta), J(theta) = int_0^theta sin^{d-2}.
  // Shells with rho < r - a lie inside the ball. Substituting u = rho^gamma
  // removes the power singularity at rho = 0.
  const double p = 0.5 * (d - 1);
  const double full = boost::math::beta(p, 0.5);
  auto cap = [&](double theta) {
    const double s2 = std::sin(theta) * std::sin(theta);
    const double half = 0.5 * full * boost::math::ibeta(p, 0.5, std::min(1.0, s2));
    return theta <= 0.5 * kPi ? half : full - half;
  };
  auto shell = [&](double u) {
    const double rho = std::pow(u, 1.0 / gamma);
    const double c = std::clamp((rho * rho + a * a - r * r) / (2.0 * rho * a), -1.0, 1.0);
    return cap(std::acos(c)) / gamma;
  };
  const double lo = std::abs(r - a);
  const double partial = unit_sphere_area(d - 1) * cb *
                         integrate_checked(shell, std::pow(lo, gamma), std::pow(r + a, gamma), tol,
                                           "ball_kernel_integral");
  return a < r ? partial + unit_sphere_area(d) * primitive(lo) : partial;
}

double disk_ball_integral(const KernelSpec& spec, std::span<const double> x,
                          std::span<const double> center, double r, double tol) {
  const double R = std::get<Disk>(spec.base()).radius;
  const Transform& t = spec.transform();
  const double inner_tol = tol * 0.1;

  if (norm2(x) == 0.0 && norm2(center) == 0.0) {
    auto radial = [&](double rho) {
      return rho * apply_transform(t, disk_green_raw(R, 0.0, 0.0, rho, 0.0));
    };
    return 2.0 * kPi * integrate_checked(radial, 0.0, r, tol, "ball_kernel_integral");
  }

  const double cx = center[0] - x[0];
  const double cy = center[1] - x[1];
  const double a = std::hypot(cx, cy);
  const double q = a * a - r * r;
  auto along_ray = [&](double phi) {
    const double wx = std::cos(phi);
    const double wy = std::sin(phi);
    const double b = -(wx * cx + wy * cy);
    double lo = 0.0, hi = 0.0;
    ray_interval(b, q, lo, hi);
    if (hi <= lo) return 0.0;
    auto radial = [&](double rho) {
      if (rho <= 0.0) return 0.0;
      const double g = disk_green_raw(R, x[0], x[1], x[0] + rho * wx, x[1] + rho * wy);
      return rho * apply_transform(t, g);
    };
    if (lo > 0.0 && hi - lo < 1e-3 * hi) {
      // short chord of a grazing ray: the integrand is nearly constant and
      // adaptive error estimates only see roundoff
      return boost::math::quadrature::gauss<double, 10>::integrate(radial, lo, hi);
    }
    if (lo > 0.0) {
      // smooth on rays that miss x
      double error = 0.0, l1 = 0.0;
      const double value =
          boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, lo, hi, 12, inner_tol, &error, &l1);
      if (!std::isfinite(value) || error > 10.0 * inner_tol * std::max(l1, 1e-300) + 1e-300) {
        throw QuadratureError("ball_kernel_integral: radial quadrature did not converge");
      }
      return value;
    }
    return integrate_checked(radial, lo, hi, inner_tol, "ball_kernel_integral");
  };

  if (a < r) {
    const double value = boost::math::quadrature::trapezoidal(along_ray, 0.0, 2.0 * kPi, tol);
    if (!std::isfinite(value)) throw QuadratureError("ball_kernel_integral: angular sum diverged");
    return value;
  }
  const double phi0 = std::atan2(cy, cx);
  const double half = std::asin(std::min(1.0, r / a));
  return integrate_checked(along_ray, phi0 - half, phi0 + half, tol, "ball_kernel_integral");
}

}  // namespace

double apply_transform(const Transform& transform, double value) {
  if (std::isinf(value)) return kInf;
  if (const auto* p = std::get_if<PowerTransform>(&transform)) {
    if (p->beta == 1.0) return value;
    return value <= 0.0 ? 0.0 : std::pow(value, p->beta);
  }
  return std::exp(std::get<ExpTransform>(transform).alpha * value);
}

KernelSpec::KernelSpec(int d, KernelBase base, Transform transform)
    : d_(d), base_(base), transform_(transform) {
  if (const auto* disk = std::get_if<Disk>(&base_)) {
    if (d_ != 2) throw std::invalid_argument("disk base requires d = 2");
    if (!(disk->radius > 0.0)) throw std::invalid_argument("disk radius must be positive");
    if (const auto* p = std::get_if<PowerTransform>(&transform_)) {
      if (!(p->beta >= 1.0)) throw std::invalid_argument("power transform requires beta >= 1");
    } else {
      const double alpha = std::get<ExpTransform>(transform_).alpha;
      if (!(alpha > 0.0 && alpha < 2.0 * kPi)) {
        throw std::invalid_argument("exponential transform requires 0 < alpha < 2*pi");
      }
    }
    return;
  }
  if (d_ < 3) throw std::invalid_argument("free-space kernel requires d >= 3");
  const auto* p = std::get_if<PowerTransform>(&transform_);
  if (p == nullptr) throw std::invalid_argument("exponential transform is only defined for d = 2");
  const double limit = static_cast<double>(d_) / (d_ - 2);
  if (!(p->beta >= 1.0 && p->beta < limit)) {
    throw std::invalid_argument("free-space power requires 1 <= beta < d/(d-2)");
  }
}

double KernelSpec::beta() const {
  if (const auto* p = std::get_if<PowerTransform>(&transform_)) return p->beta;
  return 1.0;
}

double green_constant(int d) {
  if (d < 3) throw std::invalid_argument("green_constant requires d >= 3");
  return std::tgamma(d / 2.0 - 1.0) / (2.0 * std::pow(kPi, d / 2.0));
}

double unit_sphere_area(int d) {
  if (d < 1) throw std::invalid_argument("unit_sphere_area requires d >= 1");
  return 2.0 * std::pow(kPi, d / 2.0) / std::tgamma(d / 2.0);
}

double free_green(int d, std::span<const double> x, std::span<const double> y) {
  if (d < 3) throw std::invalid_argument("free_green requires d >= 3");
  require_same_dim(x, y, static_cast<std::size_t>(d));
  const double dist = distance(x, y);
  if (dist == 0.0) return kInf;
  return green_constant(d) * std::pow(dist, 2.0 - d);
}

double disk_green_2d(double radius, std::span<const double> x, std::span<const double> y) {
  if (!(radius > 0.0)) throw std::invalid_argument("disk radius must be positive");
  require_same_dim(x, y, 2);
  const double R2 = radius * radius;
  if (norm2(x) >= R2 || norm2(y) >= R2) {
    throw std::invalid_argument("disk_green_2d: point outside the open disk");
  }
  return disk_green_raw(radius, x[0], x[1], y[0], y[1]);
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
  double base = 0.0;
  if (spec.is_free_space()) {
    base = free_green(spec.dim(), x, y);
  } else {
    base = disk_green_2d(std::get<Disk>(spec.base()).radius, x, y);
  }
  return apply_transform(spec.transform(), base);
}

double riesz_kernel_constant(int d, double alpha) {
  return std::tgamma((d - alpha) / 2.0) /
         (std::tgamma(alpha / 2.0) * std::pow(2.0, alpha / 2.0) * std::pow(kPi, d / 2.0));
}

RieszParams riesz_params(int d, double beta) {
  if (d < 3) throw std::invalid_argument("riesz_params requires d >= 3");
  const double limit = static_cast<double>(d) / (d - 2);
  if (!(beta >= 1.0 && beta < limit)) {
    throw std::invalid_argument("riesz_params requires 1 <= beta < d/(d-2)");
  }
  RieszParams p;
  p.d = d;
  p.beta = beta;
  p.alpha = d - beta * (d - 2);
  p.D = std::pow(green_constant(d), (d - p.alpha) / (d - 2)) / riesz_kernel_constant(d, p.alpha);
  return p;
}

double ball_kernel_integral(const KernelSpec& spec, std::span<const double> x,
                            std::span<const double> center, double r, double tol) {
  const auto d = static_cast<std::size_t>(spec.dim());
  require_same_dim(x, center, d);
  if (!(r >= 0.0)) throw std::invalid_argument("ball radius must be nonnegative");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (r == 0.0) return 0.0;
  if (spec.is_free_space()) return free_ball_integral(spec, x, center, r, tol);

  const double R = std::get<Disk>(spec.base()).radius;
  if (std::sqrt(norm2(center)) + r > R * (1.0 + 1e-12)) {
    throw std::invalid_argument("ball_kernel_integral: ball leaves the disk");
  }
  if (norm2(x) >= R * R) throw std::invalid_argument("ball_kernel_integral: x outside the disk");
  return disk_ball_integral(spec, x, center, r, tol);
}

double volume_bound(int d, double beta, double diameter) {
  if (d < 3) throw std::invalid_argument("volume_bound requires d >= 3");
  const double limit = static_cast<double>(d) / (d - 2);
  if (!(beta >= 1.0 && beta < limit)) {
    throw std::invalid_argument("volume_bound requires 1 <= beta < d/(d-2)");
  }
  if (!(diameter >= 0.0)) throw std::invalid_argument("diameter must be nonnegative");
  const double gamma = d - beta * (d - 2);
  return std::pow(green_constant(d), beta) * unit_sphere_area(d) * std::pow(diameter, gamma) / gamma;
}

}  // namespace greenpot
