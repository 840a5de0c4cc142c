#pragma once

#include <optional>
#include <string_view>

#include "lazyflow/types.hpp"

namespace lazyflow {

enum class Weighting { empirical, unit };

/// A finite set of inputs with optional targets and the per-point weights of the
/// empirical L2 inner product on the output space.
class EvaluationSet {
 public:
  explicit EvaluationSet(Matrix inputs, std::optional<Matrix> targets = std::nullopt,
                         Weighting weighting = Weighting::empirical);
  EvaluationSet(Matrix inputs, Vector weights, std::optional<Matrix> targets);

  Eigen::Index size() const { return inputs_.rows(); }
  Eigen::Index input_dim() const { return inputs_.cols(); }
  const Matrix& inputs() const { return inputs_; }
  const Vector& weights() const { return weights_; }
  bool has_targets() const { return targets_.has_value(); }
  const Matrix& targets() const;

  EvaluationSet with_targets(Matrix targets) const;

  double inner(const OutputPoint& a, const OutputPoint& b) const;
  double norm(const OutputPoint& y) const;
  double squared_norm(const OutputPoint& y) const;

  /// Throws DimensionError unless y has n rows and `channels` columns.
  void check_output(const OutputPoint& y, Eigen::Index channels) const;

 private:
  void validate() const;

  Matrix inputs_;
  Vector weights_;
  std::optional<Matrix> targets_;
};

}  // namespace lazyflow
