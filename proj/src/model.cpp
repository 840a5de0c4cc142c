#include "lazyflow/model.hpp"

#include "lazyflow/errors.hpp"

namespace lazyflow {

Matrix JacobianOperator::dense() const {
  const Eigen::Index n = points(), k = channels(), p = params();
  if (static_cast<double>(n * k) * static_cast<double>(p) > kMaxDenseEntries)
    throw InvalidArgument("Jacobian of size " + std::to_string(n * k) + "x" + std::to_string(p) +
                          " is too large for dense materialization; use operator mode");
  Matrix out(n * k, p);
  if (n * k <= p) {
    OutputPoint unit = OutputPoint::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < k; ++c) {
        unit(i, c) = 1.0;
        out.row(i * k + c) = apply_transpose(unit).transpose();
        unit(i, c) = 0.0;
      }
  } else {
    ParamVector unit = ParamVector::Zero(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      unit(j) = 1.0;
      out.col(j) = flatten(apply(unit));
      unit(j) = 0.0;
    }
  }
  return out;
}

OutputPoint Model::evaluate(const ParamVector& w, const Matrix& inputs) const {
  return linearize(w, inputs)->outputs();
}

void Model::check_params(const ParamVector& w) const {
  if (w.size() != param_count()) throw DimensionError("params", param_count(), w.size());
  if (!w.allFinite()) throw NumericalError("parameter vector has non-finite entries");
}

void Model::check_inputs(const Matrix& inputs) const {
  if (inputs.cols() != input_dim()) throw DimensionError("input_dim", input_dim(), inputs.cols());
}

Jacobian::Jacobian(std::shared_ptr<const JacobianOperator> op, Vector weights)
    : op_(std::move(op)), weights_(std::move(weights)) {
  if (weights_.size() != op_->points()) throw DimensionError("points", op_->points(), weights_.size());
}

ParamVector Jacobian::adjoint(const OutputPoint& g) const {
  if (g.rows() != op_->points()) throw DimensionError("points", op_->points(), g.rows());
  if (g.cols() != op_->channels()) throw DimensionError("channels", op_->channels(), g.cols());
  return op_->apply_transpose(weights_.asDiagonal() * g);
}

Matrix Jacobian::weighted_dense() const {
  Matrix j = dense();
  const Eigen::Index k = op_->channels();
  for (Eigen::Index i = 0; i < op_->points(); ++i)
    j.middleRows(i * k, k) *= std::sqrt(weights_(i));
  return j;
}

OutputPoint evaluate(const Model& model, const ParamVector& w, const EvaluationSet& set) {
  return model.evaluate(w, set.inputs());
}

Jacobian jacobian(const Model& model, const ParamVector& w, const EvaluationSet& set) {
  return Jacobian(std::shared_ptr<const JacobianOperator>(model.linearize(w, set.inputs())),
                  set.weights());
}

ParamVector rescale_init(const Model& model, const ParamVector& w0, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("rescale factor must be positive");
  if (!model.homogeneity_degree())
    throw InvalidArgument("rescale_init requires a positively homogeneous model, got " +
                          model.describe());
  model.check_params(w0);
  return lambda * w0;
}

bool same_inputs(const Matrix& a, const Matrix& b) {
  if (a.data() == b.data() && a.rows() == b.rows() && a.cols() == b.cols()) return true;
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

}  // namespace lazyflow
