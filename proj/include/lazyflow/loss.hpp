#pragma once

#include "lazyflow/evaluation_set.hpp"
#include "lazyflow/model.hpp"

namespace lazyflow {

enum class LossKind { square, quadratic };

/// A strongly convex, smooth loss R on the weighted output space of an evaluation set:
/// R(y) = 1/2 sum_i weight_i sum_c D(i,c) (y(i,c) - y*(i,c))^2, with D = 1 for the
/// square loss. Then m = min D and M = max D.
class LossSpec {
 public:
  static LossSpec square(const EvaluationSet& set);
  static LossSpec square(Matrix target, Vector weights);
  static LossSpec quadratic(Matrix curvature, Matrix target, Vector weights);

  LossKind kind() const { return kind_; }
  const Matrix& target() const { return target_; }
  const Vector& weights() const { return weights_; }
  const Matrix& curvature() const { return curv_; }

  double value(const OutputPoint& y) const;
  /// Gradient with respect to the weighted inner product.
  OutputPoint gradient(const OutputPoint& y) const;

  double strong_convexity() const { return m_; }
  double smoothness() const { return M_; }
  double condition() const { return M_ / m_; }

  double inner(const OutputPoint& a, const OutputPoint& b) const;
  double norm(const OutputPoint& y) const;
  /// ||y - y*||.
  double distance_to_target(const OutputPoint& y) const;

  LossSpec with_target(Matrix target) const;

 private:
  LossSpec(LossKind kind, Matrix curv, Matrix target, Vector weights);
  void check(const OutputPoint& y) const;

  LossKind kind_;
  Matrix curv_;
  Matrix target_;
  Vector weights_;
  double m_ = 1.0, M_ = 1.0;
};

struct ObjectiveValue {
  double value = 0.0;        // F_alpha(w) = R(alpha h(w)) / alpha^2
  ParamVector gradient;      // (1/alpha) Dh(w)^T grad R(alpha h(w))
  OutputPoint y;             // alpha h(w)
  double loss = 0.0;         // R(alpha h(w))
};

/// Evaluates F_alpha and its gradient at w on the points of `inputs`.
ObjectiveValue scaled_objective(const Model& model, const LossSpec& loss, double alpha,
                                const ParamVector& w, const Matrix& inputs);

/// Same, reusing an existing linearization of the model at w.
ObjectiveValue scaled_objective(const JacobianOperator& op, const LossSpec& loss, double alpha);

}  // namespace lazyflow
