#include "lazyflow/operator_norm.hpp"

#include <cmath>

#include "lazyflow/errors.hpp"

namespace lazyflow {

PowerResult power_iteration(const LinearMap& op, Vector start, double tol, int max_iter) {
  PowerResult r;
  double nv = start.norm();
  if (!(nv > 0.0)) throw InvalidArgument("power iteration needs a nonzero start vector");
  Vector v = start / nv;
  for (int it = 1; it <= max_iter; ++it) {
    Vector av = op(v);
    const double lambda = v.dot(av);
    const double resid = (av - lambda * v).norm();
    r.value = lambda;
    r.vector = v;
    r.iterations = it;
    const double an = av.norm();
    if (an == 0.0) {
      r.value = 0.0;
      r.converged = true;
      return r;
    }
    if (resid <= tol * std::abs(lambda)) {
      r.converged = true;
      return r;
    }
    v = av / an;
  }
  return r;
}

PowerResult jacobian_norm(const Jacobian& J, Engine& rng, double tol, int max_iter) {
  PowerResult r = power_iteration([&J](const Vector& v) { return J.adjoint(J.apply(v)); },
                                  random_unit(J.cols(), rng), tol, max_iter);
  r.value = std::sqrt(std::max(r.value, 0.0));
  return r;
}

LanczosResult lanczos_top(const LinearMap& op, Eigen::Index n, Eigen::Index count, Engine& rng,
                          double tol, Eigen::Index max_steps) {
  if (n < 1) throw InvalidArgument("lanczos needs a nonempty operator");
  count = std::min(count, n);
  if (max_steps <= 0) max_steps = std::min<Eigen::Index>(n, std::max<Eigen::Index>(3 * count, count + 40));
  max_steps = std::min(max_steps, n);

  Matrix Q(n, max_steps);
  Vector alpha(max_steps), beta(max_steps);
  Q.col(0) = random_unit(n, rng);
  Eigen::Index steps = 0;
  for (Eigen::Index j = 0; j < max_steps; ++j) {
    Vector w = op(Q.col(j));
    alpha(j) = Q.col(j).dot(w);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    beta(j) = w.norm();
    steps = j + 1;
    if (j + 1 == max_steps) break;
    if (beta(j) <= 1e-14 * std::max(1.0, std::abs(alpha(j)))) {
      // Invariant subspace found; restart in the orthogonal complement if needed.
      Vector r = random_unit(n, rng);
      for (int pass = 0; pass < 2; ++pass) r -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * r);
      const double rn = r.norm();
      if (rn < 1e-12) break;
      beta(j) = 0.0;
      Q.col(j + 1) = r / rn;
    } else {
      Q.col(j + 1) = w / beta(j);
    }
  }

  Matrix T = Matrix::Zero(steps, steps);
  for (Eigen::Index j = 0; j < steps; ++j) {
    T(j, j) = alpha(j);
    if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta(j);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(T);
  if (es.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");

  LanczosResult out;
  out.steps = static_cast<int>(steps);
  const Eigen::Index keep = std::min(count, steps);
  out.eigenvalues.resize(keep);
  const double scale = std::max(std::abs(es.eigenvalues()(steps - 1)), std::abs(es.eigenvalues()(0)));
  const double last_beta = beta(steps - 1);
  bool prefix = true;
  for (Eigen::Index i = 0; i < keep; ++i) {
    const Eigen::Index idx = steps - 1 - i;
    out.eigenvalues(i) = es.eigenvalues()(idx);
    const double resid = steps == n ? 0.0 : std::abs(last_beta * es.eigenvectors()(steps - 1, idx));
    if (prefix && resid <= tol * std::max(scale, 1e-300))
      ++out.converged;
    else
      prefix = false;
  }
  return out;
}

}  // namespace lazyflow
