#pragma once

#include "lazyflow/model.hpp"

namespace lazyflow {

/// f(w, x) = w . (U x) with U of shape p x d. On inputs X the Jacobian is X U^T for
/// every w. With d = 1 and inputs all equal to 1 this is the scalar model h(w) = (U^T) w.
class LinearModel : public Model {
 public:
  explicit LinearModel(Matrix U);

  Eigen::Index param_count() const override { return U_.rows(); }
  Eigen::Index input_dim() const override { return U_.cols(); }
  Eigen::Index output_dim() const override { return 1; }
  std::string describe() const override;
  std::optional<int> homogeneity_degree() const override { return 1; }

  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const Matrix& features() const { return U_; }

 private:
  Matrix U_;
};

/// f(w, x) = w^T Q w for every input x, with Q symmetric. D^2 h = 2Q.
class QuadraticFormModel : public Model {
 public:
  QuadraticFormModel(Matrix Q, Eigen::Index input_dim);

  Eigen::Index param_count() const override { return Q_.rows(); }
  Eigen::Index input_dim() const override { return d_; }
  Eigen::Index output_dim() const override { return 1; }
  std::string describe() const override { return "quadratic_form(p=" + std::to_string(Q_.rows()) + ")"; }
  std::optional<int> homogeneity_degree() const override { return 2; }

  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const Matrix& form() const { return Q_; }

 private:
  Matrix Q_;
  Eigen::Index d_;
};

/// A Jacobian given as an explicit (n*k) x p matrix plus outputs.
class DenseJacobian : public JacobianOperator {
 public:
  DenseJacobian(Matrix J, OutputPoint outputs);

  Eigen::Index points() const override { return out_.rows(); }
  Eigen::Index channels() const override { return out_.cols(); }
  Eigen::Index params() const override { return J_.cols(); }
  const OutputPoint& outputs() const override { return out_; }
  OutputPoint apply(const ParamVector& v) const override;
  ParamVector apply_transpose(const OutputPoint& g) const override;
  Matrix dense() const override { return J_; }

 private:
  Matrix J_;
  OutputPoint out_;
};

}  // namespace lazyflow
