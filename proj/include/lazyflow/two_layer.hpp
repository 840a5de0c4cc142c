#pragma once

#include <optional>

#include "lazyflow/compute.hpp"
#include "lazyflow/model.hpp"
#include "lazyflow/rng.hpp"

namespace lazyflow {

enum class ScaleRule { constant, inv_sqrt_width, inv_width };

struct TwoLayerConfig {
  Eigen::Index width = 1;
  Eigen::Index input_dim = 1;
  Eigen::Index output_dim = 1;
  compute::Activation activation{};
  ScaleRule scale_rule = ScaleRule::constant;
  double scale_constant = 1.0;
  /// Width used by the scale rule when it differs from `width`, e.g. one half of a
  /// symmetrized network of total width 2 * width.
  std::optional<Eigen::Index> nominal_width;
  compute::Backend backend = compute::Backend::omp;
};

/// f(w, x) = alpha(m) * sum_j b_j sigma(a_j . x), with a_j in R^d (inner) and b_j in R^k
/// (outer). The parameter vector stores neuron j contiguously as [a_j, b_j], so
/// p = m (d + k).
class TwoLayerNet : public Model {
 public:
  explicit TwoLayerNet(TwoLayerConfig config);

  Eigen::Index param_count() const override { return cfg_.width * (cfg_.input_dim + cfg_.output_dim); }
  Eigen::Index input_dim() const override { return cfg_.input_dim; }
  Eigen::Index output_dim() const override { return cfg_.output_dim; }
  std::string describe() const override;
  std::optional<int> homogeneity_degree() const override;

  OutputPoint evaluate(const ParamVector& w, const Matrix& inputs) const override;
  std::unique_ptr<JacobianOperator> linearize(const ParamVector& w,
                                              const Matrix& inputs) const override;

  const TwoLayerConfig& config() const { return cfg_; }
  Eigen::Index width() const { return cfg_.width; }
  double scale() const;

  Matrix inner(const ParamVector& w) const;  // m x d
  Matrix outer(const ParamVector& w) const;  // m x k
  ParamVector pack(const Matrix& inner, const Matrix& outer) const;

  /// All entries i.i.d. N(0, stddev^2).
  ParamVector init_normal(double stddev, Engine& rng) const;
  /// Inner weights N(0, 1/d), outer weights N(0, 1).
  ParamVector init_xavier(Engine& rng) const;

 private:
  TwoLayerConfig cfg_;
};

}  // namespace lazyflow
