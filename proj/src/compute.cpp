#include "lazyflow/compute.hpp"

#include <cmath>
#include <vector>

namespace lazyflow::compute {

double Activation::value(double z) const {
  if (kind == ActivationKind::relu) return z > 0.0 ? z : 0.0;
  const double t = beta * z;
  return (std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)))) / beta;
}

double Activation::derivative(double z) const {
  if (kind == ActivationKind::relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = beta * z;
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

namespace {

void activate(const Matrix& Z, const Activation& act, Matrix& H, Matrix& S) {
  H.resize(Z.rows(), Z.cols());
  S.resize(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
      H(i, j) = act.value(Z(i, j));
      S(i, j) = act.derivative(Z(i, j));
    }
}

Eigen::Index block_count(Eigen::Index n) { return (n + kBlockRows - 1) / kBlockRows; }

}  // namespace

namespace serial {

LayerCache cache(const Matrix& X, const Matrix& A, const Activation& act) {
  LayerCache c;
  c.Z.noalias() = X * A.transpose();
  activate(c.Z, act, c.H, c.S);
  return c;
}

Matrix readout(const Matrix& H, const Matrix& B, double scale) { return scale * (H * B); }

Matrix forward(const Matrix& X, const Matrix& A, const Matrix& B, const Activation& act,
               double scale) {
  const LayerCache c = cache(X, A, act);
  return readout(c.H, B, scale);
}

Matrix jvp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& VA,
           const Matrix& VB, double scale) {
  const Matrix dz = (X * VA.transpose()).cwiseProduct(c.S);
  return scale * (c.H * VB + dz * B);
}

void vjp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& G, double scale,
         Matrix& gA, Matrix& gB) {
  gB.noalias() = scale * (c.H.transpose() * G);
  const Matrix back = (scale * (G * B.transpose())).cwiseProduct(c.S);
  gA.noalias() = back.transpose() * X;
}

void random_feature_gram(const Matrix& X1, const Matrix& X2, const Matrix& A, const Vector& b,
                         const Activation& act, Matrix& Ka, Matrix& Kb) {
  const double m = static_cast<double>(A.rows());
  const LayerCache c1 = cache(X1, A, act);
  const LayerCache c2 = cache(X2, A, act);
  const Vector b2 = b.cwiseProduct(b);
  Ka = (X1 * X2.transpose()).cwiseProduct(c1.S * b2.asDiagonal() * c2.S.transpose()) / m;
  Kb = c1.H * c2.H.transpose() / m;
}

}  // namespace serial

namespace omp {

LayerCache cache(const Matrix& X, const Matrix& A, const Activation& act) {
  const Eigen::Index n = X.rows(), m = A.rows();
  LayerCache c;
  c.Z.resize(n, m);
  c.H.resize(n, m);
  c.S.resize(n, m);
  const Eigen::Index nb = block_count(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    c.Z.middleRows(r0, rows).noalias() = X.middleRows(r0, rows) * A.transpose();
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = r0; i < r0 + rows; ++i) {
        c.H(i, j) = act.value(c.Z(i, j));
        c.S(i, j) = act.derivative(c.Z(i, j));
      }
  }
  return c;
}

Matrix readout(const Matrix& H, const Matrix& B, double scale) {
  const Eigen::Index n = H.rows();
  Matrix Y(n, B.cols());
  const Eigen::Index nb = block_count(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    Y.middleRows(r0, rows).noalias() = scale * (H.middleRows(r0, rows) * B);
  }
  return Y;
}

Matrix forward(const Matrix& X, const Matrix& A, const Matrix& B, const Activation& act,
               double scale) {
  const Eigen::Index n = X.rows();
  Matrix Y(n, B.cols());
  const Eigen::Index nb = block_count(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    Matrix Z = X.middleRows(r0, rows) * A.transpose();
    const Matrix H = Z.unaryExpr([&act](double z) { return act.value(z); });
    Y.middleRows(r0, rows).noalias() = scale * (H * B);
  }
  return Y;
}

Matrix jvp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& VA,
           const Matrix& VB, double scale) {
  const Eigen::Index n = X.rows();
  Matrix Y(n, B.cols());
  const Eigen::Index nb = block_count(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    Matrix dz = (X.middleRows(r0, rows) * VA.transpose()).cwiseProduct(c.S.middleRows(r0, rows));
    Y.middleRows(r0, rows).noalias() = scale * (c.H.middleRows(r0, rows) * VB + dz * B);
  }
  return Y;
}

void vjp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& G, double scale,
         Matrix& gA, Matrix& gB) {
  const Eigen::Index n = X.rows(), m = B.rows();
  const Eigen::Index nb = block_count(n);
  std::vector<Matrix> partA(nb), partB(nb);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    partB[blk].noalias() = c.H.middleRows(r0, rows).transpose() * G.middleRows(r0, rows);
    const Matrix back =
        (G.middleRows(r0, rows) * B.transpose()).cwiseProduct(c.S.middleRows(r0, rows));
    partA[blk].noalias() = back.transpose() * X.middleRows(r0, rows);
  }
  gA = Matrix::Zero(m, X.cols());
  gB = Matrix::Zero(m, G.cols());
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    gA += partA[blk];
    gB += partB[blk];
  }
  gA *= scale;
  gB *= scale;
}

void random_feature_gram(const Matrix& X1, const Matrix& X2, const Matrix& A, const Vector& b,
                         const Activation& act, Matrix& Ka, Matrix& Kb) {
  const double m = static_cast<double>(A.rows());
  const LayerCache c2 = cache(X2, A, act);
  const Matrix S2w = c2.S * b.cwiseProduct(b).asDiagonal();
  const Eigen::Index n = X1.rows();
  Ka.resize(n, X2.rows());
  Kb.resize(n, X2.rows());
  const Eigen::Index nb = block_count(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index blk = 0; blk < nb; ++blk) {
    const Eigen::Index r0 = blk * kBlockRows, rows = std::min(kBlockRows, n - r0);
    Matrix Z = X1.middleRows(r0, rows) * A.transpose();
    Matrix H = Z.unaryExpr([&act](double z) { return act.value(z); });
    Matrix S = Z.unaryExpr([&act](double z) { return act.derivative(z); });
    Ka.middleRows(r0, rows) =
        (X1.middleRows(r0, rows) * X2.transpose()).cwiseProduct(S * S2w.transpose()) / m;
    Kb.middleRows(r0, rows) = H * c2.H.transpose() / m;
  }
}

}  // namespace omp

}  // namespace lazyflow::compute
