#include "lazyflow/loss.hpp"

#include <cmath>

#include "lazyflow/errors.hpp"

namespace lazyflow {

LossSpec::LossSpec(LossKind kind, Matrix curv, Matrix target, Vector weights)
    : kind_(kind), curv_(std::move(curv)), target_(std::move(target)), weights_(std::move(weights)) {
  if (target_.rows() != weights_.size()) throw DimensionError("points", weights_.size(), target_.rows());
  if (!target_.allFinite()) throw InvalidArgument("loss target has non-finite entries");
  if ((weights_.array() <= 0.0).any()) throw InvalidArgument("loss weights must be positive");
  if (kind_ == LossKind::quadratic) {
    if (curv_.rows() != target_.rows() || curv_.cols() != target_.cols())
      throw DimensionError("curvature", target_.size(), curv_.size());
    if (!(curv_.minCoeff() > 0.0) || !curv_.allFinite())
      throw InvalidArgument("quadratic loss curvature must be positive and finite");
    m_ = curv_.minCoeff();
    M_ = curv_.maxCoeff();
  }
}

LossSpec LossSpec::square(const EvaluationSet& set) { return square(set.targets(), set.weights()); }

LossSpec LossSpec::square(Matrix target, Vector weights) {
  return LossSpec(LossKind::square, Matrix(), std::move(target), std::move(weights));
}

LossSpec LossSpec::quadratic(Matrix curvature, Matrix target, Vector weights) {
  return LossSpec(LossKind::quadratic, std::move(curvature), std::move(target), std::move(weights));
}

LossSpec LossSpec::with_target(Matrix target) const {
  return LossSpec(kind_, curv_, std::move(target), weights_);
}

void LossSpec::check(const OutputPoint& y) const {
  if (y.rows() != target_.rows()) throw DimensionError("points", target_.rows(), y.rows());
  if (y.cols() != target_.cols()) throw DimensionError("channels", target_.cols(), y.cols());
}

double LossSpec::value(const OutputPoint& y) const {
  check(y);
  const Matrix r = y - target_;
  if (kind_ == LossKind::square) return 0.5 * (weights_.asDiagonal() * r.cwiseAbs2()).sum();
  return 0.5 * (weights_.asDiagonal() * curv_.cwiseProduct(r.cwiseAbs2())).sum();
}

OutputPoint LossSpec::gradient(const OutputPoint& y) const {
  check(y);
  if (kind_ == LossKind::square) return y - target_;
  return curv_.cwiseProduct(y - target_);
}

double LossSpec::inner(const OutputPoint& a, const OutputPoint& b) const {
  check(a);
  check(b);
  return (weights_.asDiagonal() * a.cwiseProduct(b)).sum();
}

double LossSpec::norm(const OutputPoint& y) const { return std::sqrt(inner(y, y)); }

double LossSpec::distance_to_target(const OutputPoint& y) const { return norm(y - target_); }

ObjectiveValue scaled_objective(const JacobianOperator& op, const LossSpec& loss, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  ObjectiveValue out;
  out.y = alpha * op.outputs();
  out.loss = loss.value(out.y);
  out.value = out.loss / (alpha * alpha);
  const OutputPoint g = loss.weights().asDiagonal() * loss.gradient(out.y);
  out.gradient = op.apply_transpose(g) / alpha;
  return out;
}

ObjectiveValue scaled_objective(const Model& model, const LossSpec& loss, double alpha,
                                const ParamVector& w, const Matrix& inputs) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  return scaled_objective(*model.linearize(w, inputs), loss, alpha);
}

}  // namespace lazyflow
