#include "lazyflow/linear_model.hpp"

#include "lazyflow/errors.hpp"

namespace lazyflow {

DenseJacobian::DenseJacobian(Matrix J, OutputPoint outputs) : J_(std::move(J)), out_(std::move(outputs)) {
  if (J_.rows() != out_.size()) throw DimensionError("jacobian rows", out_.size(), J_.rows());
}

OutputPoint DenseJacobian::apply(const ParamVector& v) const {
  if (v.size() != params()) throw DimensionError("params", params(), v.size());
  return unflatten(J_ * v, points(), channels());
}

ParamVector DenseJacobian::apply_transpose(const OutputPoint& g) const {
  if (g.rows() != points()) throw DimensionError("points", points(), g.rows());
  if (g.cols() != channels()) throw DimensionError("channels", channels(), g.cols());
  return J_.transpose() * flatten(g);
}

LinearModel::LinearModel(Matrix U) : U_(std::move(U)) {
  if (U_.rows() < 1 || U_.cols() < 1) throw InvalidArgument("linear model needs a nonempty feature map");
}

std::string LinearModel::describe() const {
  return "linear(p=" + std::to_string(U_.rows()) + ", d=" + std::to_string(U_.cols()) + ")";
}

std::unique_ptr<JacobianOperator> LinearModel::linearize(const ParamVector& w,
                                                         const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  Matrix J = inputs * U_.transpose();
  OutputPoint out = J * w;
  return std::make_unique<DenseJacobian>(std::move(J), std::move(out));
}

QuadraticFormModel::QuadraticFormModel(Matrix Q, Eigen::Index input_dim) : Q_(std::move(Q)), d_(input_dim) {
  if (Q_.rows() != Q_.cols()) throw DimensionError("quadratic form", Q_.rows(), Q_.cols());
  if (!Q_.isApprox(Q_.transpose(), 1e-14)) throw InvalidArgument("quadratic form must be symmetric");
}

std::unique_ptr<JacobianOperator> QuadraticFormModel::linearize(const ParamVector& w,
                                                                const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  const Eigen::Index n = inputs.rows();
  const Vector grad = 2.0 * (Q_ * w);
  Matrix J = grad.transpose().replicate(n, 1);
  OutputPoint out = OutputPoint::Constant(n, 1, w.dot(Q_ * w));
  return std::make_unique<DenseJacobian>(std::move(J), std::move(out));
}

}  // namespace lazyflow
