#include "lazyflow/evaluation_set.hpp"

#include "lazyflow/errors.hpp"

namespace lazyflow {

EvaluationSet::EvaluationSet(Matrix inputs, std::optional<Matrix> targets, Weighting weighting)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  const Eigen::Index n = inputs_.rows();
  weights_ = Vector::Constant(n, weighting == Weighting::empirical && n > 0 ? 1.0 / n : 1.0);
  validate();
}

EvaluationSet::EvaluationSet(Matrix inputs, Vector weights, std::optional<Matrix> targets)
    : inputs_(std::move(inputs)), weights_(std::move(weights)), targets_(std::move(targets)) {
  validate();
}

void EvaluationSet::validate() const {
  if (inputs_.rows() < 1) throw InvalidArgument("evaluation set needs at least one point");
  if (!inputs_.allFinite()) throw InvalidArgument("evaluation set inputs must be finite");
  if (weights_.size() != inputs_.rows()) throw DimensionError("points", inputs_.rows(), weights_.size());
  if ((weights_.array() <= 0.0).any()) throw InvalidArgument("inner-product weights must be positive");
  if (targets_ && targets_->rows() != inputs_.rows())
    throw DimensionError("points", inputs_.rows(), targets_->rows());
}

const Matrix& EvaluationSet::targets() const {
  if (!targets_) throw InvalidArgument("evaluation set has no targets");
  return *targets_;
}

EvaluationSet EvaluationSet::with_targets(Matrix targets) const {
  return EvaluationSet(inputs_, weights_, std::move(targets));
}

double EvaluationSet::inner(const OutputPoint& a, const OutputPoint& b) const {
  if (a.rows() != size()) throw DimensionError("points", size(), a.rows());
  if (b.rows() != size()) throw DimensionError("points", size(), b.rows());
  if (a.cols() != b.cols()) throw DimensionError("channels", a.cols(), b.cols());
  return (weights_.asDiagonal() * a).cwiseProduct(b).sum();
}

double EvaluationSet::squared_norm(const OutputPoint& y) const { return inner(y, y); }

double EvaluationSet::norm(const OutputPoint& y) const { return std::sqrt(squared_norm(y)); }

void EvaluationSet::check_output(const OutputPoint& y, Eigen::Index channels) const {
  if (y.rows() != size()) throw DimensionError("points", size(), y.rows());
  if (y.cols() != channels) throw DimensionError("channels", channels, y.cols());
}

}  // namespace lazyflow
