#pragma once

#include <functional>

#include "lazyflow/model.hpp"
#include "lazyflow/rng.hpp"

namespace lazyflow {

using LinearMap = std::function<Vector(const Vector&)>;

struct PowerResult {
  double value = 0.0;  // dominant eigenvalue (largest in magnitude)
  Vector vector;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration for a symmetric operator. Stops once ||A v - lambda v|| <= tol |lambda|.
PowerResult power_iteration(const LinearMap& op, Vector start, double tol = 1e-8,
                            int max_iter = 5000);

/// Largest singular value of Dh(w) with respect to the weighted output norm, by power
/// iteration on Dh^* Dh.
PowerResult jacobian_norm(const Jacobian& J, Engine& rng, double tol = 1e-8, int max_iter = 5000);

struct LanczosResult {
  Vector eigenvalues;  // descending Ritz values
  int steps = 0;
  int converged = 0;   // leading Ritz values whose residual bound is below tolerance
};

/// Lanczos with full reorthogonalization for the `count` largest eigenvalues of a
/// symmetric n x n operator.
LanczosResult lanczos_top(const LinearMap& op, Eigen::Index n, Eigen::Index count, Engine& rng,
                          double tol = 1e-10, Eigen::Index max_steps = 0);

}  // namespace lazyflow
