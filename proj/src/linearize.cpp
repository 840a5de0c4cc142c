#include "lazyflow/linearize.hpp"

#include <cmath>
#include <limits>

#include "lazyflow/errors.hpp"
#include "lazyflow/operator_norm.hpp"

namespace lazyflow {

namespace {

class TangentJacobian : public JacobianOperator {
 public:
  TangentJacobian(std::shared_ptr<const JacobianOperator> op0, const ParamVector& displacement)
      : op0_(std::move(op0)), out_(op0_->outputs() + op0_->apply(displacement)) {}

  Eigen::Index points() const override { return op0_->points(); }
  Eigen::Index channels() const override { return op0_->channels(); }
  Eigen::Index params() const override { return op0_->params(); }
  const OutputPoint& outputs() const override { return out_; }
  OutputPoint apply(const ParamVector& v) const override { return op0_->apply(v); }
  ParamVector apply_transpose(const OutputPoint& g) const override {
    return op0_->apply_transpose(g);
  }
  Matrix dense() const override { return op0_->dense(); }

 private:
  std::shared_ptr<const JacobianOperator> op0_;
  OutputPoint out_;
};

}  // namespace

TangentModel::TangentModel(ModelPtr base, ParamVector anchor, const Matrix& anchor_inputs)
    : base_(std::move(base)), anchor_(std::move(anchor)), anchor_inputs_(anchor_inputs) {
  if (!base_) throw InvalidArgument("tangent model needs a base model");
  base_->check_params(anchor_);
  op0_ = base_->linearize(anchor_, anchor_inputs_);
}

std::shared_ptr<const JacobianOperator> TangentModel::jacobian_for(const Matrix& inputs) const {
  if (same_inputs(inputs, anchor_inputs_)) return op0_;
  return base_->linearize(anchor_, inputs);
}

OutputPoint TangentModel::evaluate(const ParamVector& w, const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  const auto op = jacobian_for(inputs);
  return op->outputs() + op->apply(w - anchor_);
}

std::unique_ptr<JacobianOperator> TangentModel::linearize(const ParamVector& w,
                                                          const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  return std::make_unique<TangentJacobian>(jacobian_for(inputs), w - anchor_);
}

std::shared_ptr<TangentModel> build_tangent(ModelPtr model, const ParamVector& w0,
                                            const EvaluationSet& set) {
  return std::make_shared<TangentModel>(std::move(model), w0, set.inputs());
}

KernelMatrix tangent_kernel(const Jacobian& J) {
  const Eigen::Index n = J.op().points(), k = J.op().channels(), p = J.cols();
  KernelMatrix K;
  K.points = n;
  K.channels = k;
  K.params = p;
  if (static_cast<double>(n * k) * static_cast<double>(p) <= kMaxDenseEntries) {
    const Matrix Jw = J.weighted_dense();
    K.values.noalias() = Jw * Jw.transpose();
  } else {
    // Column (j,c) is W^{1/2} J J^T W^{1/2} e_(j,c).
    K.values.resize(n * k, n * k);
    const Vector sw = J.weights().cwiseSqrt();
    OutputPoint unit = OutputPoint::Zero(n, k);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index c = 0; c < k; ++c) {
        unit(j, c) = sw(j);
        const OutputPoint col = sw.asDiagonal() * J.apply(J.op().apply_transpose(unit));
        K.values.col(j * k + c) = flatten(col);
        unit(j, c) = 0.0;
      }
    K.values = 0.5 * (K.values + K.values.transpose()).eval();
  }
  return K;
}

KernelMatrix tangent_kernel(const Model& model, const ParamVector& w, const EvaluationSet& set) {
  return tangent_kernel(jacobian(model, w, set));
}

Spectrum kernel_spectrum(const KernelMatrix& K, Eigen::Index lanczos_count) {
  const Eigen::Index N = K.values.rows();
  if (N == 0 || K.values.cols() != N) throw InvalidArgument("kernel matrix must be square and nonempty");
  if (!K.values.allFinite()) throw NumericalError("kernel matrix has non-finite entries");
  Spectrum s;
  if (N <= kDenseSpectrumLimit) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(K.values, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("symmetric eigensolver did not converge");
    s.eigenvalues = es.eigenvalues().reverse();
  } else {
    Engine rng(0x5eed);
    const Matrix& A = K.values;
    LanczosResult lr = lanczos_top([&A](const Vector& v) { return Vector(A * v); }, N,
                                   lanczos_count, rng);
    if (lr.converged < 1) throw NumericalError("Lanczos iteration did not converge");
    s.eigenvalues = lr.eigenvalues.head(lr.converged);
    s.complete = s.eigenvalues.size() == N;
  }
  const double top = s.eigenvalues(0);
  if (top > 0.0)
    s.normalized = s.eigenvalues / top;
  else
    s.normalized = Vector::Zero(s.eigenvalues.size());
  const double tol = 1e-10 * std::max(top, 0.0);
  s.rank = (s.eigenvalues.array() > tol).count();
  s.sigma_min_nonzero = s.rank > 0 ? std::sqrt(s.eigenvalues(s.rank - 1)) : 0.0;
  if (!s.complete)
    s.sigma_min = std::numeric_limits<double>::quiet_NaN();
  else if (K.params > 0 && N > K.params)
    s.sigma_min = 0.0;
  else
    s.sigma_min = std::sqrt(std::max(s.eigenvalues(N - 1), 0.0));
  return s;
}

}  // namespace lazyflow
