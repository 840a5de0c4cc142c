#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include "lazyflow/evaluation_set.hpp"
#include "lazyflow/types.hpp"

namespace lazyflow {

/// Dense Jacobians are only materialized below this many entries (rows * params).
inline constexpr double kMaxDenseEntries = 1e7;

/// The differential Dh(w) of a model at a fixed w on a fixed set of inputs, together
/// with the outputs h(w) computed along the way.
///
/// `apply` and `apply_transpose` work in raw coordinates: apply(v)(i, c) is the
/// directional derivative of f_c(w, x_i) along v, and apply_transpose(g) equals
/// sum_{i,c} g(i, c) * grad_w f_c(w, x_i). The weighted inner product of the output
/// space is layered on top by `Jacobian`.
class JacobianOperator {
 public:
  virtual ~JacobianOperator() = default;

  virtual Eigen::Index points() const = 0;
  virtual Eigen::Index channels() const = 0;
  virtual Eigen::Index params() const = 0;

  virtual const OutputPoint& outputs() const = 0;
  virtual OutputPoint apply(const ParamVector& v) const = 0;
  virtual ParamVector apply_transpose(const OutputPoint& g) const = 0;

  /// (n*k) x p matrix, row index i*k + c. Throws if larger than kMaxDenseEntries.
  virtual Matrix dense() const;
};

/// A differentiable parametric model h : R^p -> F, where F is the space of
/// functions R^d -> R^k seen through a finite evaluation set.
///
/// Models are immutable; every method is safe to call concurrently.
class Model {
 public:
  virtual ~Model() = default;

  virtual Eigen::Index param_count() const = 0;
  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;
  virtual std::string describe() const = 0;

  /// q if h(lambda w) = lambda^q h(w) for all lambda > 0.
  virtual std::optional<int> homogeneity_degree() const { return std::nullopt; }

  virtual OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const;
  virtual std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                                      const Matrix& inputs) const = 0;

  void check_params(const ParamVector& w) const;
  void check_inputs(const Matrix& inputs) const;
};

using ModelPtr = std::shared_ptr<const Model>;

/// Dh(w) as a linear map from R^p into the weighted output space of an evaluation set.
class Jacobian {
 public:
  Jacobian(std::shared_ptr<const JacobianOperator> op, Vector weights);

  Eigen::Index rows() const { return op_->points() * op_->channels(); }
  Eigen::Index cols() const { return op_->params(); }

  const OutputPoint& outputs() const { return op_->outputs(); }
  OutputPoint apply(const ParamVector& v) const { return op_->apply(v); }
  /// Adjoint with respect to the weighted inner product: J^T (weights .* g).
  ParamVector adjoint(const OutputPoint& g) const;

  Matrix dense() const { return op_->dense(); }
  /// Rows scaled by sqrt(weight_i): the matrix of Dh in an orthonormal basis of F.
  Matrix weighted_dense() const;

  const JacobianOperator& op() const { return *op_; }
  std::shared_ptr<const JacobianOperator> shared_op() const { return op_; }
  const Vector& weights() const { return weights_; }

 private:
  std::shared_ptr<const JacobianOperator> op_;
  Vector weights_;
};

OutputPoint evaluate(const Model& model, const ParamVector& w, const EvaluationSet& set);
Jacobian jacobian(const Model& model, const ParamVector& w, const EvaluationSet& set);

/// Returns lambda * w0. For a q-homogeneous model h(lambda w0) = lambda^q h(w0).
ParamVector rescale_init(const Model& model, const ParamVector& w0, double lambda);

/// True when both matrices have the same shape and identical entries.
bool same_inputs(const Matrix& a, const Matrix& b);

}  // namespace lazyflow
