#include "lazyflow/wrappers.hpp"

#include <sstream>

#include "lazyflow/errors.hpp"

namespace lazyflow {

namespace {

class ScaledJacobian : public JacobianOperator {
 public:
  ScaledJacobian(std::unique_ptr<JacobianOperator> base, double alpha)
      : base_(std::move(base)), alpha_(alpha), out_(alpha * base_->outputs()) {}

  Eigen::Index points() const override { return base_->points(); }
  Eigen::Index channels() const override { return base_->channels(); }
  Eigen::Index params() const override { return base_->params(); }
  const OutputPoint& outputs() const override { return out_; }
  OutputPoint apply(const ParamVector& v) const override { return alpha_ * base_->apply(v); }
  ParamVector apply_transpose(const OutputPoint& g) const override {
    return alpha_ * base_->apply_transpose(g);
  }

 private:
  std::unique_ptr<JacobianOperator> base_;
  double alpha_;
  OutputPoint out_;
};

class CenteredJacobian : public JacobianOperator {
 public:
  CenteredJacobian(std::unique_ptr<JacobianOperator> base, const OutputPoint& ref)
      : base_(std::move(base)), out_(base_->outputs() - ref) {}

  Eigen::Index points() const override { return base_->points(); }
  Eigen::Index channels() const override { return base_->channels(); }
  Eigen::Index params() const override { return base_->params(); }
  const OutputPoint& outputs() const override { return out_; }
  OutputPoint apply(const ParamVector& v) const override { return base_->apply(v); }
  ParamVector apply_transpose(const OutputPoint& g) const override {
    return base_->apply_transpose(g);
  }

 private:
  std::unique_ptr<JacobianOperator> base_;
  OutputPoint out_;
};

class SymmetrizedJacobian : public JacobianOperator {
 public:
  // `b` may be null when both halves coincide; `a` then serves both.
  SymmetrizedJacobian(std::unique_ptr<JacobianOperator> a, std::unique_ptr<JacobianOperator> b)
      : a_(std::move(a)), b_(std::move(b)) {
    out_ = b_ ? OutputPoint(a_->outputs() - b_->outputs())
              : OutputPoint(a_->outputs() - a_->outputs());
  }

  Eigen::Index points() const override { return a_->points(); }
  Eigen::Index channels() const override { return a_->channels(); }
  Eigen::Index params() const override { return 2 * a_->params(); }
  const OutputPoint& outputs() const override { return out_; }

  OutputPoint apply(const ParamVector& v) const override {
    if (v.size() != params()) throw DimensionError("params", params(), v.size());
    const Eigen::Index p = a_->params();
    const JacobianOperator& b = b_ ? *b_ : *a_;
    return a_->apply(v.head(p)) - b.apply(v.tail(p));
  }

  ParamVector apply_transpose(const OutputPoint& g) const override {
    const Eigen::Index p = a_->params();
    ParamVector out(2 * p);
    out.head(p) = a_->apply_transpose(g);
    if (b_)
      out.tail(p) = -b_->apply_transpose(g);
    else
      out.tail(p) = -out.head(p);
    return out;
  }

 private:
  std::unique_ptr<JacobianOperator> a_, b_;
  OutputPoint out_;
};

}  // namespace

ScaledModel::ScaledModel(ModelPtr base, double alpha) : base_(std::move(base)), alpha_(alpha) {
  if (!base_) throw InvalidArgument("scaled model needs a base model");
  if (!(alpha_ > 0.0)) throw InvalidArgument("scale factor alpha must be positive");
}

std::string ScaledModel::describe() const {
  std::ostringstream os;
  os << "scaled(" << alpha_ << ", " << base_->describe() << ")";
  return os.str();
}

OutputPoint ScaledModel::evaluate(const ParamVector& w, const Matrix& inputs) const {
  return alpha_ * base_->evaluate(w, inputs);
}

std::unique_ptr<JacobianOperator> ScaledModel::linearize(const ParamVector& w,
                                                         const Matrix& inputs) const {
  return std::make_unique<ScaledJacobian>(base_->linearize(w, inputs), alpha_);
}

CenteredModel::CenteredModel(ModelPtr base, ParamVector anchor, const Matrix& reference_inputs)
    : base_(std::move(base)), anchor_(std::move(anchor)), ref_inputs_(reference_inputs) {
  if (!base_) throw InvalidArgument("centered model needs a base model");
  base_->check_params(anchor_);
  ref_out_ = base_->evaluate(anchor_, ref_inputs_);
}

std::string CenteredModel::describe() const { return "centered(" + base_->describe() + ")"; }

OutputPoint CenteredModel::reference(const Matrix& inputs) const {
  if (same_inputs(inputs, ref_inputs_)) return ref_out_;
  return base_->evaluate(anchor_, inputs);
}

OutputPoint CenteredModel::evaluate(const ParamVector& w, const Matrix& inputs) const {
  return base_->evaluate(w, inputs) - reference(inputs);
}

std::unique_ptr<JacobianOperator> CenteredModel::linearize(const ParamVector& w,
                                                           const Matrix& inputs) const {
  return std::make_unique<CenteredJacobian>(base_->linearize(w, inputs), reference(inputs));
}

SymmetrizedModel::SymmetrizedModel(ModelPtr base) : base_(std::move(base)) {
  if (!base_) throw InvalidArgument("symmetrized model needs a base model");
}

std::string SymmetrizedModel::describe() const { return "symmetrized(" + base_->describe() + ")"; }

OutputPoint SymmetrizedModel::evaluate(const ParamVector& w, const Matrix& inputs) const {
  check_params(w);
  const Eigen::Index p = base_->param_count();
  if (w.head(p) == w.tail(p)) {
    const OutputPoint y = base_->evaluate(w.head(p), inputs);
    return y - y;
  }
  return base_->evaluate(w.head(p), inputs) - base_->evaluate(w.tail(p), inputs);
}

std::unique_ptr<JacobianOperator> SymmetrizedModel::linearize(const ParamVector& w,
                                                              const Matrix& inputs) const {
  check_params(w);
  const Eigen::Index p = base_->param_count();
  auto a = base_->linearize(w.head(p), inputs);
  std::unique_ptr<JacobianOperator> b;
  if (w.head(p) != w.tail(p)) b = base_->linearize(w.tail(p), inputs);
  return std::make_unique<SymmetrizedJacobian>(std::move(a), std::move(b));
}

ParamVector SymmetrizedModel::duplicate(const ParamVector& w_half) const {
  base_->check_params(w_half);
  ParamVector w(2 * w_half.size());
  w << w_half, w_half;
  return w;
}

}  // namespace lazyflow
