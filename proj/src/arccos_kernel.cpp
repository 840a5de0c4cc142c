#include "lazyflow/arccos_kernel.hpp"

#include <cmath>
#include <numbers>

#include "lazyflow/errors.hpp"

namespace lazyflow {

void ArcCosineKernelSpec::validate() const {
  if (!(outer_moment > 0.0) || !(inner_moment > 0.0))
    throw InvalidArgument("kernel moments E(b^2) and E(||a||^2) must be positive");
  if (dim < 1) throw InvalidArgument("kernel input dimension must be >= 1");
}

double angle_between(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionError("input_dim", x.size(), y.size());
  const double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw InvalidArgument("the kernel angle is undefined for a zero vector");
  const double c = std::clamp(x.dot(y) / (nx * ny), -1.0, 1.0);
  // Within 1e-12 of the poles the angle snaps to 0 or pi.
  if (c >= 1.0 - 1e-12 && (x / nx - y / ny).norm() <= 1e-12) return 0.0;
  if (c <= -1.0 + 1e-12 && (x / nx + y / ny).norm() <= 1e-12) return std::numbers::pi;
  return std::acos(c);
}

KernelPair kernel_limit(const ArcCosineKernelSpec& spec, const Vector& x, const Vector& y) {
  spec.validate();
  if (x.size() != spec.dim) throw DimensionError("input_dim", spec.dim, x.size());
  const double pi = std::numbers::pi;
  const double phi = angle_between(x, y);
  KernelPair k;
  k.a = x.dot(y) * spec.outer_moment * (pi - phi) / (2.0 * pi);
  k.b = x.norm() * y.norm() * spec.inner_moment * ((pi - phi) * std::cos(phi) + std::sin(phi)) /
        (2.0 * pi * double(spec.dim));
  return k;
}

KernelPair kernel_random(const Matrix& inner, const Vector& outer, const Vector& x, const Vector& y) {
  const Eigen::Index m = inner.rows();
  if (m < 1) throw InvalidArgument("random-feature kernel needs m >= 1");
  if (outer.size() != m) throw DimensionError("width", m, outer.size());
  if (x.size() != inner.cols()) throw DimensionError("input_dim", inner.cols(), x.size());
  if (y.size() != inner.cols()) throw DimensionError("input_dim", inner.cols(), y.size());
  const Vector zx = inner * x, zy = inner * y;
  const double xy = x.dot(y);
  KernelPair k;
  for (Eigen::Index j = 0; j < m; ++j) {
    if (zx(j) > 0.0 && zy(j) > 0.0) {
      k.a += xy * outer(j) * outer(j);
      k.b += zx(j) * zy(j);
    }
  }
  k.a /= double(m);
  k.b /= double(m);
  return k;
}

void draw_features(const ArcCosineKernelSpec& spec, Eigen::Index m, Engine& rng, Matrix& inner,
                   Vector& outer) {
  spec.validate();
  inner = normal_matrix(m, spec.dim, std::sqrt(spec.inner_moment / double(spec.dim)), rng);
  outer = normal_vector(m, std::sqrt(spec.outer_moment), rng);
}

MonteCarloEstimate kernel_monte_carlo(const ArcCosineKernelSpec& spec, const Vector& x,
                                      const Vector& y, Eigen::Index features, Engine& rng) {
  if (features < 2) throw InvalidArgument("Monte-Carlo estimate needs at least two features");
  const Eigen::Index chunk = 65536;
  double sa = 0.0, sa2 = 0.0, sb = 0.0, sb2 = 0.0;
  const double xy = x.dot(y);
  for (Eigen::Index done = 0; done < features; done += chunk) {
    const Eigen::Index m = std::min(chunk, features - done);
    Matrix A;
    Vector b;
    draw_features(spec, m, rng, A, b);
    const Vector zx = A * x, zy = A * y;
    for (Eigen::Index j = 0; j < m; ++j) {
      const bool on = zx(j) > 0.0 && zy(j) > 0.0;
      const double ta = on ? xy * b(j) * b(j) : 0.0;
      const double tb = on ? zx(j) * zy(j) : 0.0;
      sa += ta;
      sa2 += ta * ta;
      sb += tb;
      sb2 += tb * tb;
    }
  }
  const double n = double(features);
  MonteCarloEstimate e;
  e.mean.a = sa / n;
  e.mean.b = sb / n;
  e.stderr_.a = std::sqrt(std::max(sa2 / n - e.mean.a * e.mean.a, 0.0) / (n - 1.0));
  e.stderr_.b = std::sqrt(std::max(sb2 / n - e.mean.b * e.mean.b, 0.0) / (n - 1.0));
  return e;
}

std::pair<Vector, Vector> sphere_section_pair(Eigen::Index d, double phi) {
  if (d < 2) throw InvalidArgument("a sphere section needs d >= 2");
  Vector x = Vector::Zero(d), y = Vector::Zero(d);
  x(0) = 1.0;
  y(0) = std::cos(phi);
  y(1) = std::sin(phi);
  return {x, y};
}

std::vector<double> phi_grid(int n) {
  if (n < 2) throw InvalidArgument("phi grid needs at least two points");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = std::numbers::pi * double(i) / double(n - 1);
  return g;
}

KernelSection kernel_section(const ArcCosineKernelSpec& spec, const std::vector<double>& phi,
                             Eigen::Index width, int seeds, std::uint64_t master_seed) {
  spec.validate();
  if (width < 1) throw InvalidArgument("width must be >= 1");
  if (seeds < 0) throw InvalidArgument("seed count must be nonnegative");
  for (double p : phi)
    if (!(p >= 0.0 && p <= std::numbers::pi)) throw InvalidArgument("phi grid must lie in [0, pi]");
  KernelSection s;
  s.phi = phi;
  s.width = width;
  for (double p : phi) {
    const auto [x, y] = sphere_section_pair(spec.dim, p);
    s.limit.push_back(kernel_limit(spec, x, y));
  }
  s.realizations.assign(seeds, std::vector<double>(phi.size()));
#pragma omp parallel for schedule(static)
  for (int k = 0; k < seeds; ++k) {
    Engine rng = make_engine(master_seed, {stream::oracle, std::uint64_t(width), std::uint64_t(k)});
    Matrix A;
    Vector b;
    draw_features(spec, width, rng, A, b);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const auto [x, y] = sphere_section_pair(spec.dim, phi[i]);
      s.realizations[k][i] = kernel_random(A, b, x, y).total();
    }
  }
  return s;
}

}  // namespace lazyflow
