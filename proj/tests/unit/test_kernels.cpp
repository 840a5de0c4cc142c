#include <doctest.h>

#include <numbers>

#include "lazyflow/arccos_kernel.hpp"
#include "lazyflow/compute.hpp"
#include "lazyflow/errors.hpp"
#include "lazyflow/linearize.hpp"
#include "lazyflow/two_layer.hpp"

using namespace lazyflow;

namespace {

constexpr double pi = std::numbers::pi;

// Quadrature oracle. For unit x, x' at angle phi only the projection of a onto their
// plane matters; it is isotropic Gaussian with variance s2 per coordinate, so with
// a = s r (cos t, sin t) and E r^2 = 2:
//   P(a.x > 0, a.x' > 0) = (1/2pi) |{t : cos t > 0, cos(t - phi) > 0}|
//   E relu(a.x) relu(a.x') = 2 s2 (1/2pi) int relu(cos t) relu(cos(t - phi)) dt
std::pair<double, double> quadrature(double phi, double s2, double eb2) {
  const int n = 200000;
  double both = 0.0, prod = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * pi * (i + 0.5) / n;
    const double c1 = std::cos(t), c2 = std::cos(t - phi);
    if (c1 > 0.0 && c2 > 0.0) {
      both += 1.0;
      prod += c1 * c2;
    }
  }
  both /= n;
  prod /= n;
  return {std::cos(phi) * eb2 * both, 2.0 * s2 * prod};
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("closed forms agree with quadrature across the section") {
    const ArcCosineKernelSpec spec{1.7, 4.2, 5};
    for (double phi : {0.0, 0.3, 1.0, pi / 2, 2.5, pi}) {
      const auto [x, y] = sphere_section_pair(5, phi);
      const KernelPair k = kernel_limit(spec, x, y);
      const auto [qa, qb] = quadrature(phi, 4.2 / 5.0, 1.7);
      CHECK(k.a == doctest::Approx(qa).epsilon(1e-5).scale(1.0));
      CHECK(k.b == doctest::Approx(qb).epsilon(1e-5).scale(1.0));
    }
  }

  TEST_CASE("standard-normal moments give K_a = K_b = 1/2 on the diagonal") {
    const ArcCosineKernelSpec spec = ArcCosineKernelSpec::standard_normal(10);
    const auto [x, y] = sphere_section_pair(10, 0.0);
    const KernelPair k = kernel_limit(spec, x, y);
    CHECK(k.a == doctest::Approx(0.5));
    CHECK(k.b == doctest::Approx(0.5));
    Engine rng(50);
    const MonteCarloEstimate mc = kernel_monte_carlo(spec, x, y, 200000, rng);
    CHECK(std::abs(mc.mean.a - 0.5) < 4.0 * mc.stderr_.a);
    CHECK(std::abs(mc.mean.b - 0.5) < 4.0 * mc.stderr_.b);
  }

  TEST_CASE("the angle is clamped at the poles") {
    Vector x(3), y(3);
    x << 1, 2, 3;
    y = 2.0 * x;
    CHECK(angle_between(x, y) == 0.0);
    CHECK(angle_between(x, -x) == pi);
    CHECK(angle_between(x, (1.0 + 1e-15) * x) == 0.0);
    CHECK_THROWS_AS(angle_between(x, Vector::Zero(3)), InvalidArgument);
    const KernelPair k = kernel_limit(ArcCosineKernelSpec::standard_normal(3), x, -x);
    CHECK(k.a == 0.0);
    CHECK(std::abs(k.b) < 1e-15);
  }

  TEST_CASE("random-feature kernel equals the tangent kernel of a 1/sqrt(m) network") {
    Engine rng(51);
    const ArcCosineKernelSpec spec = ArcCosineKernelSpec::standard_normal(4);
    Matrix A;
    Vector b;
    draw_features(spec, 64, rng, A, b);
    TwoLayerConfig c;
    c.width = 64;
    c.input_dim = 4;
    c.scale_rule = ScaleRule::inv_sqrt_width;
    const TwoLayerNet net(c);
    Matrix X(2, 4);
    X.row(0) = normal_vector(4, 1.0, rng).transpose();
    X.row(1) = normal_vector(4, 1.0, rng).transpose();
    const KernelMatrix K = tangent_kernel(net, net.pack(A, Matrix(b)), EvaluationSet(X, std::nullopt, Weighting::unit));
    const KernelPair kr = kernel_random(A, b, X.row(0).transpose(), X.row(1).transpose());
    CHECK(K.values(0, 1) == doctest::Approx(kr.total()).epsilon(1e-12));
  }

  TEST_CASE("Gram blocks: serial and OpenMP agree with kernel_random") {
    Engine rng(52);
    const Matrix X = normal_matrix(300, 3, 1.0, rng);
    const Matrix A = normal_matrix(40, 3, 1.0, rng);
    const Vector b = normal_vector(40, 1.0, rng);
    const compute::Activation relu{};
    Matrix Ka, Kb, Ka2, Kb2;
    compute::serial::random_feature_gram(X, X, A, b, relu, Ka, Kb);
    compute::omp::random_feature_gram(X, X, A, b, relu, Ka2, Kb2);
    CHECK((Ka - Ka2).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((Kb - Kb2).cwiseAbs().maxCoeff() < 1e-13);
    const KernelPair k = kernel_random(A, b, X.row(5).transpose(), X.row(280).transpose());
    CHECK(Ka(5, 280) == doctest::Approx(k.a).epsilon(1e-12));
    CHECK(Kb(5, 280) == doctest::Approx(k.b).epsilon(1e-12));
  }

  TEST_CASE("kernel sections are reproducible and centered on the limit") {
    const ArcCosineKernelSpec spec = ArcCosineKernelSpec::standard_normal(6);
    const std::vector<double> phi = phi_grid(9);
    CHECK(phi.front() == 0.0);
    CHECK(phi.back() == doctest::Approx(pi));
    const KernelSection s1 = kernel_section(spec, phi, 4096, 8, 77);
    const KernelSection s2 = kernel_section(spec, phi, 4096, 8, 77);
    CHECK(s1.realizations == s2.realizations);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      double mean = 0.0;
      for (const auto& r : s1.realizations) mean += r[i] / 8.0;
      CHECK(std::abs(mean - s1.limit[i].total()) < 0.05);
    }
    CHECK_THROWS_AS(kernel_section(spec, {4.0}, 10, 1, 0), InvalidArgument);
  }
}
