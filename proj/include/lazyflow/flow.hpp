#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lazyflow/evaluation_set.hpp"
#include "lazyflow/linearize.hpp"
#include "lazyflow/loss.hpp"
#include "lazyflow/model.hpp"
#include "lazyflow/rng.hpp"

namespace lazyflow {

enum class StepRule {
  fixed,      // eta given
  lipschitz,  // eta = c / Lip(h)^2 from ||Dh(w0)||
  curvature,  // eta = c / L with L a running max of |lambda_max(Hess F_alpha)|
};
enum class Integrator { euler, rk4 };
enum class RecordMode { dense, stride, logarithmic };
enum class StopReason { horizon, max_steps, loss, gradient };

std::string to_string(StepRule r);
std::string to_string(Integrator i);
std::string to_string(StopReason r);

struct RecordPolicy {
  RecordMode mode = RecordMode::logarithmic;
  long stride = 1;
  int per_decade = 20;
  bool store_states = true;
};

struct StopRule {
  std::optional<double> loss_below;
  std::optional<double> grad_below;           // absolute ||grad F_alpha||
  std::optional<double> grad_relative_below;  // relative to ||grad F_alpha(w0)||
};

struct Sample {
  double t = 0.0;
  long step = 0;
  ParamVector w;  // empty unless states are stored
  OutputPoint y;  // alpha h(w)
  double loss = 0.0;
  double grad_norm = 0.0;
  double dist_to_init = 0.0;
};

struct FlowConfig {
  double alpha = 1.0;
  /// Flow time T.
  std::optional<double> horizon;
  /// Dimensionless budget K with T = K / Lip(h)^2 (the gradient-descent iteration count
  /// at unit step factor). Checked against `horizon` when both are given.
  std::optional<double> budget;
  /// Hard cap on integrator steps.
  long max_steps = 1'000'000;

  StepRule step_rule = StepRule::lipschitz;
  double step = 0.0;         // used by StepRule::fixed
  double step_factor = 0.5;  // c in eta = c / L
  /// Lip(h) used by the lipschitz rule and by `budget`; estimated as ||Dh(w0)|| if unset.
  std::optional<double> lipschitz_h;
  int curvature_refresh = 10;

  Integrator integrator = Integrator::rk4;
  RecordPolicy record;
  StopRule stop;
  double divergence_factor = 10.0;
  std::uint64_t seed = 0;

  std::function<void(const Sample&)> observer;
};

struct FlowMetadata {
  std::string model;
  double alpha = 1.0;
  StepRule step_rule = StepRule::lipschitz;
  Integrator integrator = Integrator::rk4;
  double step = 0.0;  // initial step; the curvature rule may shrink it
  double lipschitz_h = 0.0;
  std::optional<double> horizon;
  long steps = 0;
  StopReason reason = StopReason::max_steps;
  std::uint64_t seed = 0;
};

struct Trajectory {
  std::vector<Sample> samples;
  FlowMetadata meta;
  ParamVector final_w;
  OutputPoint final_y;

  const Sample& front() const { return samples.front(); }
  const Sample& back() const { return samples.back(); }
};

/// Gradient flow w' = -(1/alpha) Dh(w)^T grad R(alpha h(w)) on the points of `set`.
/// Throws NumericalError if the loss grows by `divergence_factor` or the state stops
/// being finite.
Trajectory integrate_flow(const Model& model, const LossSpec& loss, const EvaluationSet& set,
                          const ParamVector& w0, const FlowConfig& config);

/// The same flow for the tangent model, whose Jacobian is frozen at its anchor.
Trajectory integrate_linearized_flow(const TangentModel& tangent, const LossSpec& loss,
                                     const EvaluationSet& set, const ParamVector& w0,
                                     const FlowConfig& config);

/// Draws a labelled mini-batch of the given size.
using BatchSampler = std::function<EvaluationSet(Eigen::Index, Engine&)>;

struct SgdConfig {
  FlowConfig flow;  // alpha, step rule, max_steps (the iteration count), record policy
  Eigen::Index batch_size = 200;
};

/// Mini-batch SGD with step c / (2L). Sample losses are population losses estimated on
/// `holdout`; grad_norm is that of the held-out objective.
Trajectory run_sgd(const Model& model, const ParamVector& w0, const BatchSampler& sampler,
                   const EvaluationSet& holdout, const SgdConfig& config);

/// y'(t) = -Sigma(t) grad R(y(t)) in the weighted output space, integrated with RK4 on a
/// uniform grid. `sigma(t, g)` applies Sigma(t) to g.
using KernelAction = std::function<OutputPoint(double, const OutputPoint&)>;

struct KernelPath {
  std::vector<double> t;
  std::vector<OutputPoint> y;
};

KernelPath integrate_kernel_flow(const KernelAction& sigma, const LossSpec& loss,
                                 const OutputPoint& y0, double horizon, long steps);

/// Applies Dh Dh^* for a fixed Jacobian.
KernelAction constant_kernel(const Jacobian& J);

/// Returns Lip(h) as ||Dh(w0)|| in the weighted norm (a lower bound).
double jacobian_lipschitz(const Model& model, const ParamVector& w0, const EvaluationSet& set,
                          std::uint64_t seed);

/// Linear interpolation of recorded states at time t (requires stored states).
ParamVector state_at(const Trajectory& traj, double t);

}  // namespace lazyflow
