#pragma once

#include <cstdint>
#include <vector>

#include "lazyflow/rng.hpp"
#include "lazyflow/types.hpp"

namespace lazyflow {

/// Moments of the random features behind the infinite-width ReLU tangent kernel.
struct ArcCosineKernelSpec {
  double outer_moment = 1.0;  // E(b^2)
  double inner_moment = 1.0;  // E(||a||^2)
  Eigen::Index dim = 1;       // d

  /// a ~ N(0, I_d), b ~ N(0, 1): E(b^2) = 1 and E(||a||^2) = d.
  static ArcCosineKernelSpec standard_normal(Eigen::Index d) { return {1.0, double(d), d}; }
  void validate() const;
};

struct KernelPair {
  double a = 0.0;  // inner-layer part K^(a)
  double b = 0.0;  // outer-layer part K^(b)
  double total() const { return a + b; }
};

/// Angle between x and x', via the clamped arccos of the normalized inner product.
double angle_between(const Vector& x, const Vector& y);

/// Closed-form limits K^(a) = (x.x') E(b^2) (pi - phi) / (2 pi) and
/// K^(b) = ||x|| ||x'|| E(||a||^2) ((pi - phi) cos phi + sin phi) / (2 pi d).
KernelPair kernel_limit(const ArcCosineKernelSpec& spec, const Vector& x, const Vector& y);

/// Random-feature kernels with ReLU features:
/// K_m^(a) = (1/m) sum_j (x.x') b_j^2 relu'(a_j.x) relu'(a_j.x') and
/// K_m^(b) = (1/m) sum_j relu(a_j.x) relu(a_j.x'). `inner` is m x d.
KernelPair kernel_random(const Matrix& inner, const Vector& outer, const Vector& x, const Vector& y);

/// Draws m features with the moments of `spec`: a ~ N(0, E||a||^2/d I), b ~ N(0, E b^2).
void draw_features(const ArcCosineKernelSpec& spec, Eigen::Index m, Engine& rng, Matrix& inner,
                   Vector& outer);

struct MonteCarloEstimate {
  KernelPair mean;
  KernelPair stderr_;
};

/// Monte-Carlo estimate of the limit kernel with `features` draws, with standard errors.
MonteCarloEstimate kernel_monte_carlo(const ArcCosineKernelSpec& spec, const Vector& x,
                                      const Vector& y, Eigen::Index features, Engine& rng);

/// Unit x = e_1 and x'(phi) = cos(phi) e_1 + sin(phi) e_2 in R^d.
std::pair<Vector, Vector> sphere_section_pair(Eigen::Index d, double phi);

struct KernelSection {
  std::vector<double> phi;
  std::vector<KernelPair> limit;
  /// realizations[s][i]: K_m (a + b) for seed s at phi[i].
  std::vector<std::vector<double>> realizations;
  Eigen::Index width = 0;
};

KernelSection kernel_section(const ArcCosineKernelSpec& spec, const std::vector<double>& phi,
                             Eigen::Index width, int seeds, std::uint64_t master_seed);

/// n equally spaced angles on [0, pi].
std::vector<double> phi_grid(int n);

}  // namespace lazyflow
