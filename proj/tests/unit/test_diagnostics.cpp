#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "lazyflow/diagnostics.hpp"
#include "lazyflow/errors.hpp"
#include "lazyflow/linear_model.hpp"
#include "lazyflow/wrappers.hpp"
#include "oracles.hpp"

using namespace lazyflow;

namespace {

Matrix symmetric(long p, Engine& rng) {
  const Matrix A = normal_matrix(p, p, 1.0, rng);
  return 0.5 * (A + A.transpose());
}

double op_norm(const Matrix& Q) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(Q).eigenvalues().cwiseAbs().maxCoeff();
}

std::shared_ptr<TwoLayerNet> net(long m, long d, compute::ActivationKind act) {
  TwoLayerConfig c;
  c.width = m;
  c.input_dim = d;
  c.activation.kind = act;
  c.scale_rule = ScaleRule::inv_sqrt_width;
  return std::make_shared<TwoLayerNet>(c);
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("norms of a quadratic form: ||Dh|| = 2||Q w0||, ||D^2 h|| = 2||Q||") {
    Engine rng(40);
    const Matrix Q = symmetric(6, rng);
    const QuadraticFormModel model(Q, 1);
    const EvaluationSet set(Matrix::Ones(4, 1), Matrix::Constant(4, 1, 3.0));
    const Vector w0 = normal_vector(6, 1.0, rng);
    NormOptions o;
    o.lipschitz = false;
    const NormEstimates ne = estimate_norms(model, w0, set, o);
    CHECK(ne.dh_norm == doctest::Approx(2.0 * (Q * w0).norm()).epsilon(1e-7));
    CHECK(ne.d2h_norm == doctest::Approx(2.0 * op_norm(Q)).epsilon(1e-4));
    CHECK(ne.h0_norm == doctest::Approx(std::abs(w0.dot(Q * w0))).epsilon(1e-12));
    const LossSpec loss = LossSpec::square(set);
    const double expected = std::abs(w0.dot(Q * w0) - 3.0) * 2.0 * op_norm(Q) / (4.0 * (Q * w0).squaredNorm());
    CHECK(kappa(ne, model, w0, loss, set) == doctest::Approx(expected).epsilon(1e-4));
  }

  TEST_CASE("linear models are never lazy-limited: kappa = 0") {
    Engine rng(41);
    const LinearModel model(normal_matrix(5, 2, 1.0, rng));
    const EvaluationSet set(normal_matrix(7, 2, 1.0, rng), normal_matrix(7, 1, 1.0, rng));
    CHECK(kappa(model, normal_vector(5, 1.0, rng), LossSpec::square(set), set) == doctest::Approx(0.0));
  }

  TEST_CASE("critical initialization is rejected") {
    const QuadraticFormModel model(Matrix::Identity(3, 3), 1);
    const EvaluationSet set(Matrix::Ones(2, 1), Matrix::Ones(2, 1));
    CHECK_THROWS_AS(kappa(model, Vector::Zero(3), LossSpec::square(set), set), NumericalError);
  }

  TEST_CASE("kappa of alpha h scales as 1/alpha when h(w0) = 0") {
    Engine rng(42);
    auto base = net(16, 3, compute::ActivationKind::softplus);
    const Vector w0 = base->init_xavier(rng);
    const Matrix X = normal_matrix(10, 3, 1.0, rng);
    const EvaluationSet set(X, normal_matrix(10, 1, 1.0, rng));
    const auto centered = std::make_shared<CenteredModel>(base, w0, X);
    const LossSpec loss = LossSpec::square(set);
    const double k1 = kappa(ScaledModel(centered, 1.0), w0, loss, set);
    for (double a : {10.0, 1000.0})
      CHECK(a * kappa(ScaledModel(centered, a), w0, loss, set) == doctest::Approx(k1).epsilon(1e-6));
  }

  TEST_CASE("Lipschitz estimates bound the anchor values") {
    Engine rng(43);
    auto base = net(8, 3, compute::ActivationKind::softplus);
    const Vector w0 = base->init_xavier(rng);
    const EvaluationSet set(normal_matrix(6, 3, 1.0, rng));
    NormOptions o;
    o.radius = 0.5;
    const NormEstimates ne = estimate_norms(*base, w0, set, o);
    CHECK(ne.lip_h >= ne.dh_norm);
    CHECK(ne.lip_dh >= ne.d2h_norm);
    CHECK(ne.samples == 16);
    CHECK(ne.rank == 6);  // 6 points, 40 params
    CHECK(ne.sigma_min > 0.0);
    o.samples = 4;
    CHECK_THROWS_AS(estimate_norms(*base, w0, set, o), InvalidArgument);
  }

  TEST_CASE("log-log fits") {
    std::vector<double> x = {1, 10, 100, 1000}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, -1.5));
    const SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log10(3.0)).epsilon(1e-12));
    CHECK(f.slope_stderr < 1e-12);
    CHECK_THROWS_AS(fit_loglog({1, 2, 5}, {1, 2, 3}), InvalidArgument);  // spans < 2 decades
    CHECK_THROWS_AS(fit_loglog({1, 10, 100}, {1, 0, 3}), InvalidArgument);
    CHECK(fit_loglog_any({1, 2}, {2, 8}).slope == doctest::Approx(2.0));
  }

  TEST_CASE("flow comparison and linearization bounds on a linear model") {
    // A linear model equals its tangent model, so every gap is zero.
    Engine rng(44);
    const auto model = std::make_shared<LinearModel>(normal_matrix(6, 3, 1.0, rng));
    const EvaluationSet set(normal_matrix(4, 3, 1.0, rng), normal_matrix(4, 1, 1.0, rng));
    const Vector w0 = normal_vector(6, 1.0, rng);
    const LossSpec loss = LossSpec::square(set);
    FlowConfig c;
    c.horizon = 5.0;
    const Trajectory tr = integrate_flow(*model, loss, set, w0, c);
    const Trajectory lin = integrate_linearized_flow(*build_tangent(model, w0, set), loss, set, w0, c);
    const DeviationReport dev = compare_flows(tr, lin, 1.0, set.weights());
    CHECK(dev.sup_param_gap < 1e-12);
    CHECK(dev.sup_output_gap < 1e-12);
    CHECK(dev.sup_dist_to_init > 0.0);
    const NormEstimates ne = estimate_norms(*model, w0, set);
    const Theorem2Check t2 = check_theorem2_bound(tr, lin, ne, loss, 1.0);
    CHECK(t2.measured_lhs < 1e-12);
    CHECK(t2.lip_h == doctest::Approx(2.0 * ne.lip_h));
    CHECK(t2.budget == doctest::Approx(5.0 * t2.lip_h * t2.lip_h));

    // Exponential envelope with lambda = sigma_min^2 of the (constant) kernel.
    std::vector<double> ts;
    std::vector<OutputPoint> ys;
    for (const Sample& s : tr.samples) ts.push_back(s.t), ys.push_back(s.y);
    CHECK(lemma1_ratio(ts, ys, loss, ne.sigma_min * ne.sigma_min) <= 1.0 + 1e-9);
    const Theorem3Check t3 = check_theorem3_rate(tr, ne, loss, 1.0);
    CHECK(t3.satisfied);
    CHECK(t3.c0 == std::numeric_limits<double>::infinity());

    FlowConfig c2 = c;
    c2.horizon = 2.0;
    const Trajectory shorter = integrate_flow(*model, loss, set, w0, c2);
    CHECK_THROWS_AS(compare_flows(tr, shorter, 1.0, set.weights()), InvalidArgument);
  }

  TEST_CASE("theorem 3 reports missing over-parameterization") {
    Engine rng(45);
    const auto model = std::make_shared<LinearModel>(normal_matrix(3, 2, 1.0, rng));
    const EvaluationSet set(normal_matrix(8, 2, 1.0, rng), normal_matrix(8, 1, 1.0, rng));
    const Vector w0 = Vector::Zero(3);
    const LossSpec loss = LossSpec::square(set);
    const Trajectory tr = integrate_flow(*model, loss, set, w0, FlowConfig{});
    CHECK(check_theorem3_rate(tr, estimate_norms(*model, w0, set), loss, 1.0).status == "not over-parameterized");
  }

  TEST_CASE("stability of activations") {
    Engine rng(46);
    auto relu = net(10, 3, compute::ActivationKind::relu);
    const Vector w = relu->init_normal(1.0, rng);
    const Matrix X = normal_matrix(50, 3, 1.0, rng);
    CHECK(stability_of_activations(*relu, w, w, X) == 1.0);
    // Flipping every inner weight flips every strict sign.
    Matrix A = relu->inner(w);
    const Vector flipped = relu->pack(-A, relu->outer(w));
    CHECK(stability_of_activations(*relu, w, flipped, X) == 0.0);
    Vector both(2 * w.size());
    both << w, w;
    Vector mixed(2 * w.size());
    mixed << w, flipped;
    CHECK(stability_of_activations(*relu, both, mixed, X) == doctest::Approx(0.5));
    CHECK_THROWS_AS(stability_of_activations(*net(3, 3, compute::ActivationKind::softplus), Vector::Zero(12),
                                             Vector::Zero(12), X),
                    InvalidArgument);
  }

  TEST_CASE("generalization gap: zero for a linear model, bounded for a smooth net") {
    Engine rng(47);
    const LinearModel lin(normal_matrix(4, 2, 1.0, rng));
    const Matrix X = normal_matrix(30, 2, 1.0, rng);
    const Vector w0 = normal_vector(4, 1.0, rng), wT = normal_vector(4, 1.0, rng);
    const GeneralizationGap g0 = generalization_gap(lin, w0, wT, wT, 5.0, X);
    CHECK(g0.gap < 1e-12);
    CHECK(g0.m2 < 1e-12);
    // m1 is the largest per-point gradient norm, here ||U x_i||.
    double m1 = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) m1 = std::max(m1, (lin.features() * X.row(i).transpose()).norm());
    CHECK(g0.m1 == doctest::Approx(m1));

    auto sp = net(6, 2, compute::ActivationKind::softplus);
    const Vector v0 = sp->init_xavier(rng);
    const Vector vT = v0 + normal_vector(v0.size(), 0.05, rng);
    const Vector vbar = v0 + normal_vector(v0.size(), 0.05, rng);
    const GeneralizationGap g = generalization_gap(*sp, v0, vT, vbar, 2.0, X);
    CHECK(g.gap > 0.0);
    CHECK(g.gap <= g.bound);
  }

  TEST_CASE("plateau report") {
    const PlateauReport r = check_under_param_plateau({0.2, 0.4}, {0.01, 0.03}, 0.25);
    CHECK(r.gap_ratio == doctest::Approx(15.0));
    CHECK(*r.relative_to_optimum == doctest::Approx(0.2));
  }
}
