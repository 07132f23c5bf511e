#pragma once

#include <span>
#include <variant>

namespace greenpot {

// Entrywise transform applied to a Green kernel value: v -> v^beta.
struct PowerTransform {
  double beta = 1.0;
};

// Entrywise transform v -> exp(alpha * v); planar kernels only.
struct ExpTransform {
  double alpha = 1.0;
};

using Transform = std::variant<PowerTransform, ExpTransform>;

// Applies the transform to a nonnegative kernel value (+inf maps to +inf).
double apply_transform(const Transform& transform, double value);

struct FreeSpace {};

struct Disk {
  double radius = 1.0;
};

using KernelBase = std::variant<FreeSpace, Disk>;

// A transformed Green kernel. The constructor enforces the admissible
// parameter ranges:
//   free space: d >= 3, power 1 <= beta < d/(d-2), no exponential transform
//   disk:       d == 2, radius > 0, power beta >= 1 or exp with 0 < alpha < 2*pi
class KernelSpec {
 public:
  KernelSpec(int d, KernelBase base, Transform transform);

  int dim() const { return d_; }
  const KernelBase& base() const { return base_; }
  const Transform& transform() const { return transform_; }
  bool is_free_space() const { return std::holds_alternative<FreeSpace>(base_); }

  // Power exponent, or 1 for the exponential transform.
  double beta() const;

 private:
  int d_;
  KernelBase base_;
  Transform transform_;
};

// C(d) = Gamma(d/2 - 1) / (2 pi^{d/2}), the Brownian Green constant for d >= 3.
double green_constant(int d);

// Surface area of the unit sphere in R^d.
double unit_sphere_area(int d);

// C(d) |x - y|^{2-d}; +inf on the diagonal.
double free_green(int d, std::span<const double> x, std::span<const double> y);

// Green function of planar Brownian motion killed on leaving the open disk
// B(0, R). Symmetric; +inf on the diagonal; the x = 0 case is exact.
double disk_green_2d(double radius, std::span<const double> x, std::span<const double> y);

// Base kernel passed through the transform of `spec`.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> y);

struct RieszParams {
  int d = 3;
  double beta = 1.0;
  double alpha = 2.0;  // d - beta (d - 2)
  double D = 1.0;      // occupation-time normalization of subordinated BM
};

// Riesz kernel constant Gamma((d-a)/2) / (Gamma(a/2) 2^{a/2} pi^{d/2}).
double riesz_kernel_constant(int d, double alpha);

RieszParams riesz_params(int d, double beta);

// Integral of the kernel y -> k(x, y) over the ball B(center, r). The ball
// must lie in the base domain. Polar coordinates around x absorb the
// diagonal singularity; the free-space radial integral is done in closed
// form. Throws QuadratureError when tol (relative) is not reached.
double ball_kernel_integral(const KernelSpec& spec, std::span<const double> x,
                            std::span<const double> center, double r, double tol = 1e-8);

// C(d)^beta S(d) R^{d - beta(d-2)} / (d - beta(d-2)): bound on the beta-power
// Green operator applied to |f| <= 1 over a domain of diameter R.
double volume_bound(int d, double beta, double diameter);

}  // namespace greenpot
