#pragma once

#include <memory>

#include "lazyflow/evaluation_set.hpp"
#include "lazyflow/model.hpp"

namespace lazyflow {

/// h_bar(w) = h(w0) + Dh(w0)(w - w0). Dh(w0) is computed once on the anchor inputs and
/// shared by every linearization; other input sets are linearized at w0 on demand.
class TangentModel : public Model {
 public:
  TangentModel(ModelPtr base, ParamVector anchor, const Matrix& anchor_inputs);

  Eigen::Index param_count() const override { return base_->param_count(); }
  Eigen::Index input_dim() const override { return base_->input_dim(); }
  Eigen::Index output_dim() const override { return base_->output_dim(); }
  std::string describe() const override { return "tangent(" + base_->describe() + ")"; }

  OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const override;
  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const ModelPtr& base() const { return base_; }
  const ParamVector& anchor() const { return anchor_; }
  const OutputPoint& anchor_output() const { return op0_->outputs(); }
  const JacobianOperator& anchor_jacobian() const { return *op0_; }

 private:
  std::shared_ptr<const JacobianOperator> jacobian_for(const Matrix& inputs) const;

  ModelPtr base_;
  ParamVector anchor_;
  Matrix anchor_inputs_;
  std::shared_ptr<const JacobianOperator> op0_;
};

std::shared_ptr<TangentModel> build_tangent(ModelPtr model, const ParamVector& w0,
                                            const EvaluationSet& set);

/// Sigma(w) = Dh(w) Dh(w)^* in an orthonormal basis of the weighted output space:
/// entry ((i,c),(j,c')) = sqrt(weight_i weight_j) <grad_w f_c(w,x_i), grad_w f_c'(w,x_j)>.
/// Row and column index i*k + c.
struct KernelMatrix {
  Matrix values;
  Eigen::Index points = 0;
  Eigen::Index channels = 0;
  Eigen::Index params = 0;
};

KernelMatrix tangent_kernel(const Model& model, const ParamVector& w, const EvaluationSet& set);
KernelMatrix tangent_kernel(const Jacobian& J);

struct Spectrum {
  Vector eigenvalues;  // descending
  Vector normalized;   // eigenvalues / eigenvalues(0)
  /// Square root of the smallest eigenvalue; zero when nk > p. NaN when only the
  /// leading part of the spectrum was computed.
  double sigma_min = 0.0;
  /// Square root of the smallest eigenvalue above the rank tolerance.
  double sigma_min_nonzero = 0.0;
  Eigen::Index rank = 0;
  bool complete = true;
};

/// Dense symmetric eigensolver up to kDenseSpectrumLimit rows, Lanczos on the leading
/// `lanczos_count` eigenvalues above. Eigenvalues below 1e-10 * lambda_max count as zero.
inline constexpr Eigen::Index kDenseSpectrumLimit = 2000;
Spectrum kernel_spectrum(const KernelMatrix& K, Eigen::Index lanczos_count = 200);

}  // namespace lazyflow
