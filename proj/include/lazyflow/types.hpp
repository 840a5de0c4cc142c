#pragma once

#include <Eigen/Dense>

namespace lazyflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A point w in parameter space R^p.
using ParamVector = Vector;

/// Model outputs on an evaluation set: n points (rows) by k channels (columns).
using OutputPoint = Matrix;

/// Flattens an n x k output into a length n*k vector, point-major (index i*k + c).
inline Vector flatten(const OutputPoint& y) {
  Vector out(y.size());
  const Eigen::Index k = y.cols();
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index c = 0; c < k; ++c) out(i * k + c) = y(i, c);
  return out;
}

inline OutputPoint unflatten(const Vector& v, Eigen::Index n, Eigen::Index k) {
  OutputPoint y(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < k; ++c) y(i, c) = v(i * k + c);
  return y;
}

}  // namespace lazyflow
