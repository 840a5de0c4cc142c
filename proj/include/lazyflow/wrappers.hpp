#pragma once

#include "lazyflow/model.hpp"

namespace lazyflow {

/// h'(w) = alpha h(w).
class ScaledModel : public Model {
 public:
  ScaledModel(ModelPtr base, double alpha);

  Eigen::Index param_count() const override { return base_->param_count(); }
  Eigen::Index input_dim() const override { return base_->input_dim(); }
  Eigen::Index output_dim() const override { return base_->output_dim(); }
  std::string describe() const override;
  std::optional<int> homogeneity_degree() const override { return base_->homogeneity_degree(); }

  OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const override;
  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  double alpha() const { return alpha_; }
  const ModelPtr& base() const { return base_; }

 private:
  ModelPtr base_;
  double alpha_;
};

/// h'(w) = h(w) - h(w0). The reference output is cached for `reference_inputs`;
/// other input sets recompute h(w0) on demand.
class CenteredModel : public Model {
 public:
  CenteredModel(ModelPtr base, ParamVector anchor, const Matrix& reference_inputs);

  Eigen::Index param_count() const override { return base_->param_count(); }
  Eigen::Index input_dim() const override { return base_->input_dim(); }
  Eigen::Index output_dim() const override { return base_->output_dim(); }
  std::string describe() const override;

  OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const override;
  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const ParamVector& anchor() const { return anchor_; }
  const ModelPtr& base() const { return base_; }
  /// h(w0) on the given inputs.
  OutputPoint reference(const Matrix& inputs) const;

 private:
  ModelPtr base_;
  ParamVector anchor_;
  Matrix ref_inputs_;
  OutputPoint ref_out_;
};

/// Parameters [w_a; w_b] with h'(w) = h(w_a) - h(w_b). Initializing w_a = w_b gives an
/// exactly zero output. For a two-layer base with q-homogeneity the wrapper keeps it.
class SymmetrizedModel : public Model {
 public:
  explicit SymmetrizedModel(ModelPtr base);

  Eigen::Index param_count() const override { return 2 * base_->param_count(); }
  Eigen::Index input_dim() const override { return base_->input_dim(); }
  Eigen::Index output_dim() const override { return base_->output_dim(); }
  std::string describe() const override;
  std::optional<int> homogeneity_degree() const override { return base_->homogeneity_degree(); }

  OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const override;
  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const ModelPtr& base() const { return base_; }
  /// [w_half; w_half].
  ParamVector duplicate(const ParamVector& w_half) const;
  ParamVector first(const ParamVector& w) const { return w.head(base_->param_count()); }
  ParamVector second(const ParamVector& w) const { return w.tail(base_->param_count()); }

 private:
  ModelPtr base_;
};

}  // namespace lazyflow
