#include "lazyflow/two_layer.hpp"

#include <cmath>
#include <sstream>

#include "lazyflow/errors.hpp"

namespace lazyflow {

namespace {

class TwoLayerJacobian : public JacobianOperator {
 public:
  TwoLayerJacobian(const TwoLayerNet& net, const ParamVector& w, const Matrix& X)
      : X_(X),
        A_(net.inner(w)),
        B_(net.outer(w)),
        scale_(net.scale()),
        backend_(net.config().backend),
        net_(net) {
    const auto& act = net.config().activation;
    if (backend_ == compute::Backend::omp) {
      cache_ = compute::omp::cache(X_, A_, act);
      out_ = compute::omp::readout(cache_.H, B_, scale_);
    } else {
      cache_ = compute::serial::cache(X_, A_, act);
      out_ = compute::serial::readout(cache_.H, B_, scale_);
    }
  }

  Eigen::Index points() const override { return X_.rows(); }
  Eigen::Index channels() const override { return B_.cols(); }
  Eigen::Index params() const override { return net_.param_count(); }
  const OutputPoint& outputs() const override { return out_; }

  OutputPoint apply(const ParamVector& v) const override {
    if (v.size() != params()) throw DimensionError("params", params(), v.size());
    const Matrix VA = net_.inner(v), VB = net_.outer(v);
    return backend_ == compute::Backend::omp ? compute::omp::jvp(X_, cache_, B_, VA, VB, scale_)
                                             : compute::serial::jvp(X_, cache_, B_, VA, VB, scale_);
  }

  ParamVector apply_transpose(const OutputPoint& g) const override {
    if (g.rows() != points()) throw DimensionError("points", points(), g.rows());
    if (g.cols() != channels()) throw DimensionError("channels", channels(), g.cols());
    Matrix gA, gB;
    if (backend_ == compute::Backend::omp)
      compute::omp::vjp(X_, cache_, B_, g, scale_, gA, gB);
    else
      compute::serial::vjp(X_, cache_, B_, g, scale_, gA, gB);
    return net_.pack(gA, gB);
  }

 private:
  Matrix X_, A_, B_;
  double scale_;
  compute::Backend backend_;
  TwoLayerNet net_;
  compute::LayerCache cache_;
  OutputPoint out_;
};

}  // namespace

TwoLayerNet::TwoLayerNet(TwoLayerConfig config) : cfg_(config) {
  if (cfg_.width < 1) throw InvalidArgument("two-layer width must be >= 1");
  if (cfg_.input_dim < 1) throw InvalidArgument("input_dim must be >= 1");
  if (cfg_.output_dim < 1) throw InvalidArgument("output_dim must be >= 1");
  if (cfg_.activation.kind == compute::ActivationKind::softplus && !(cfg_.activation.beta > 0.0))
    throw InvalidArgument("softplus beta must be positive");
  if (cfg_.nominal_width && *cfg_.nominal_width < 1)
    throw InvalidArgument("nominal width must be >= 1");
}

std::string TwoLayerNet::describe() const {
  std::ostringstream os;
  os << "two_layer(m=" << cfg_.width << ", d=" << cfg_.input_dim << ", k=" << cfg_.output_dim
     << ", activation="
     << (cfg_.activation.kind == compute::ActivationKind::relu
             ? std::string("relu")
             : "softplus(" + std::to_string(cfg_.activation.beta) + ")")
     << ", scale=" << scale() << ")";
  return os.str();
}

std::optional<int> TwoLayerNet::homogeneity_degree() const {
  if (cfg_.activation.kind == compute::ActivationKind::relu) return 2;
  return std::nullopt;
}

double TwoLayerNet::scale() const {
  const double m = static_cast<double>(cfg_.nominal_width.value_or(cfg_.width));
  switch (cfg_.scale_rule) {
    case ScaleRule::inv_sqrt_width: return cfg_.scale_constant / std::sqrt(m);
    case ScaleRule::inv_width: return cfg_.scale_constant / m;
    case ScaleRule::constant: break;
  }
  return cfg_.scale_constant;
}

Matrix TwoLayerNet::inner(const ParamVector& w) const {
  const Eigen::Index d = cfg_.input_dim, k = cfg_.output_dim;
  Eigen::Map<const RowMatrix> rows(w.data(), cfg_.width, d + k);
  return rows.leftCols(d);
}

Matrix TwoLayerNet::outer(const ParamVector& w) const {
  const Eigen::Index d = cfg_.input_dim, k = cfg_.output_dim;
  Eigen::Map<const RowMatrix> rows(w.data(), cfg_.width, d + k);
  return rows.rightCols(k);
}

ParamVector TwoLayerNet::pack(const Matrix& inner, const Matrix& outer) const {
  const Eigen::Index d = cfg_.input_dim, k = cfg_.output_dim;
  if (inner.rows() != cfg_.width || inner.cols() != d)
    throw DimensionError("inner weights", cfg_.width * d, inner.size());
  if (outer.rows() != cfg_.width || outer.cols() != k)
    throw DimensionError("outer weights", cfg_.width * k, outer.size());
  ParamVector w(param_count());
  Eigen::Map<RowMatrix> rows(w.data(), cfg_.width, d + k);
  rows.leftCols(d) = inner;
  rows.rightCols(k) = outer;
  return w;
}

OutputPoint TwoLayerNet::evaluate(const ParamVector& w, const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  return cfg_.backend == compute::Backend::omp
             ? compute::omp::forward(inputs, inner(w), outer(w), cfg_.activation, scale())
             : compute::serial::forward(inputs, inner(w), outer(w), cfg_.activation, scale());
}

std::unique_ptr<JacobianOperator> TwoLayerNet::linearize(const ParamVector& w,
                                                         const Matrix& inputs) const {
  check_params(w);
  check_inputs(inputs);
  return std::make_unique<TwoLayerJacobian>(*this, w, inputs);
}

ParamVector TwoLayerNet::init_normal(double stddev, Engine& rng) const {
  if (!(stddev >= 0.0)) throw InvalidArgument("init std must be nonnegative");
  return normal_vector(param_count(), stddev, rng);
}

ParamVector TwoLayerNet::init_xavier(Engine& rng) const {
  const Matrix A = normal_matrix(cfg_.width, cfg_.input_dim, 1.0 / std::sqrt(double(cfg_.input_dim)), rng);
  const Matrix B = normal_matrix(cfg_.width, cfg_.output_dim, 1.0, rng);
  return pack(A, B);
}

}  // namespace lazyflow
