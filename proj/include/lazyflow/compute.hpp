#pragma once

#include "lazyflow/types.hpp"

// Dense kernels for two-layer networks f(x) = scale * sum_j b_j sigma(a_j . x).
//
// Shapes: X is n x d (one input per row), A is m x d (inner weights), B is m x k
// (outer weights). Pre-activations Z = X A^T are n x m.
//
// Two implementations share one interface: `serial` is the reference, `omp` splits
// the point axis into fixed blocks of kBlockRows and reduces partial sums in block
// order, so its results do not depend on the number of threads.
namespace lazyflow::compute {

inline constexpr Eigen::Index kBlockRows = 256;

enum class ActivationKind { relu, softplus };

struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double beta = 20.0;  // softplus sharpness, log(1 + exp(beta z)) / beta

  double value(double z) const;
  /// relu'(0) is taken to be 0.
  double derivative(double z) const;
};

/// Pre-activations and their images under sigma and sigma'.
struct LayerCache {
  Matrix Z, H, S;
};

enum class Backend { serial, omp };

namespace serial {
LayerCache cache(const Matrix& X, const Matrix& A, const Activation& act);
/// scale * H B, with the same arithmetic as `forward`.
Matrix readout(const Matrix& H, const Matrix& B, double scale);
Matrix forward(const Matrix& X, const Matrix& A, const Matrix& B, const Activation& act,
               double scale);
Matrix jvp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& VA,
           const Matrix& VB, double scale);
void vjp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& G, double scale,
         Matrix& gA, Matrix& gB);
/// Random-feature Gram blocks for k = 1 with 1/m normalization:
/// Ka = (X1 X2^T) .* (S1 diag(b^2) S2^T) / m and Kb = H1 H2^T / m.
void random_feature_gram(const Matrix& X1, const Matrix& X2, const Matrix& A, const Vector& b,
                         const Activation& act, Matrix& Ka, Matrix& Kb);
}  // namespace serial

namespace omp {
LayerCache cache(const Matrix& X, const Matrix& A, const Activation& act);
/// scale * H B, with the same arithmetic as `forward`.
Matrix readout(const Matrix& H, const Matrix& B, double scale);
Matrix forward(const Matrix& X, const Matrix& A, const Matrix& B, const Activation& act,
               double scale);
Matrix jvp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& VA,
           const Matrix& VB, double scale);
void vjp(const Matrix& X, const LayerCache& c, const Matrix& B, const Matrix& G, double scale,
         Matrix& gA, Matrix& gB);
void random_feature_gram(const Matrix& X1, const Matrix& X2, const Matrix& A, const Vector& b,
                         const Activation& act, Matrix& Ka, Matrix& Kb);
}  // namespace omp

}  // namespace lazyflow::compute
