#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lazyflow/evaluation_set.hpp"
#include "lazyflow/flow.hpp"
#include "lazyflow/loss.hpp"
#include "lazyflow/model.hpp"
#include "lazyflow/two_layer.hpp"

namespace lazyflow {

struct NormOptions {
  double radius = 0.1;
  int samples = 16;          // points drawn in the ball for the Lipschitz estimates
  double d2_epsilon = 1e-4;  // finite-difference step for D^2 h
  int d2_directions = 64;
  int d2_refine = 20;        // tensor power steps started from the best direction
  double power_tol = 1e-8;
  bool lipschitz = true;     // skip the ball sampling when false
  bool singular_values = true;  // dense SVD of Dh(w0) for sigma_min and rank
  std::uint64_t seed = 0;
};

/// Sampled estimates of the constants that enter the lazy-training bounds. All of them
/// are maxima over finitely many probes, hence lower bounds of the true suprema.
struct NormEstimates {
  double h0_norm = 0.0;        // ||h(w0)||
  double dh_norm = 0.0;        // ||Dh(w0)||, power iteration
  bool dh_converged = false;
  double d2h_norm = 0.0;       // max_u ||Dh(w0 + eps u) - Dh(w0)|| / eps, ||u|| = 1
  double lip_h = 0.0;          // on the ball of radius `radius`
  double lip_dh = 0.0;
  double sigma_min = 0.0;      // smallest singular value of Dh(w0)^T (0 when nk > p)
  double sigma_min_nonzero = 0.0;
  Eigen::Index rank = 0;
  double radius = 0.0;
  int samples = 0;
  int d2_directions = 0;
};

NormEstimates estimate_norms(const Model& model, const ParamVector& w0, const EvaluationSet& set,
                             const NormOptions& options = {});

/// Operator norm of Dh(a) - Dh(b) in the weighted output norm.
double jacobian_difference_norm(const Jacobian& a, const Jacobian& b, Engine& rng,
                                double tol = 1e-8);

/// ||h(w0) - y*|| ||D^2 h(w0)|| / ||Dh(w0)||^2. Square loss only. Throws NumericalError
/// ("critical initialization") when ||Dh(w0)|| = 0.
double kappa(const NormEstimates& norms, const Model& model, const ParamVector& w0,
             const LossSpec& loss, const EvaluationSet& set);
double kappa(const Model& model, const ParamVector& w0, const LossSpec& loss,
             const EvaluationSet& set, const NormOptions& options = {});

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double residual = 0.0;  // root mean square residual in log10 units
  std::size_t points = 0;

  double lower() const { return slope - 2.0 * slope_stderr; }
  double upper() const { return slope + 2.0 * slope_stderr; }
};

/// OLS fit of log10(y) against log10(x). Needs >= 3 points spanning >= 2 decades in x
/// and strictly positive values.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
/// As fit_loglog without the span requirement (for width and kernel sweeps).
SlopeFit fit_loglog_any(const std::vector<double>& x, const std::vector<double>& y);

struct DeviationReport {
  double alpha = 1.0;
  std::vector<double> t;
  std::vector<double> param_gap;   // ||w(t) - w_bar(t)||
  std::vector<double> output_gap;  // ||alpha h(w(t)) - alpha h_bar(w_bar(t))||
  std::vector<double> dist_to_init;  // ||w(t) - w0||
  double sup_param_gap = 0.0;
  double sup_output_gap = 0.0;
  double sup_dist_to_init = 0.0;
};

/// Compares a trajectory with its linearized counterpart on the samples of `traj`.
/// The linearized trajectory is linearly interpolated when the time grids differ.
DeviationReport compare_flows(const Trajectory& traj, const Trajectory& traj_lin, double alpha,
                              const Vector& weights);

struct AlphaSweepFit {
  SlopeFit param_gap, output_gap, dist_to_init;
};
AlphaSweepFit fit_alpha_sweep(const std::vector<DeviationReport>& reports);

enum class BoundStatus { satisfied, violated, not_applicable };
std::string to_string(BoundStatus s);

struct Theorem2Check {
  BoundStatus status = BoundStatus::not_applicable;
  double horizon = 0.0;       // T, the flow time compared
  double budget = 0.0;        // K = T Lip(h)^2 with the inflated Lip(h)
  double lip_h = 0.0;         // inflated
  double lip_dh = 0.0;        // inflated
  double residual0 = 0.0;     // ||alpha h(w0) - y*||
  double measured_lhs = 0.0;  // output gap at T relative to residual0
  double bound_rhs = 0.0;     // (K^2/alpha) Lip(Dh)/Lip(h)^2 residual0
  double param_lhs = 0.0;     // alpha Lip(h) ||w(T) - w_bar(T)|| / residual0
  double param_rhs = 0.0;     // bound_rhs (2 + 4K/3)
  bool param_satisfied = false;
  double alpha_threshold = 0.0;  // validity: alpha >= K residual0 / (r Lip(h))
  double safety = 2.0;
};

Theorem2Check check_theorem2_bound(const Trajectory& traj, const Trajectory& traj_lin,
                                   const NormEstimates& norms, const LossSpec& loss, double alpha,
                                   double safety = 2.0);

struct Theorem3Check {
  std::string status;  // "satisfied", "violated", "precondition unmet", "not over-parameterized"
  bool satisfied = false;
  double c0 = 0.0;
  double alpha_threshold = 0.0;  // ||y*|| / C0
  double rate_fit = 0.0;         // fitted slope of log ||y - y*|| against t
  double bound_rate = 0.0;       // m sigma_min^2 / 4
  double worst_ratio = 0.0;      // max over samples of measured / bound
  double safety = 2.0;
};

Theorem3Check check_theorem3_rate(const Trajectory& traj, const NormEstimates& norms,
                                  const LossSpec& loss, double alpha, double safety = 2.0);

/// max over samples of ||y(t) - y*|| / (sqrt(M/m) ||y(0) - y*|| e^{-m lambda t}).
double lemma1_ratio(const std::vector<double>& t, const std::vector<OutputPoint>& y,
                    const LossSpec& loss, double lambda);

/// max over t of ||y(t) - y_bar(t)|| and the bound K ||Sigma(0)||^{1/2} / (lambda^{3/2} m).
struct Lemma2Check {
  double max_gap = 0.0;
  double bound = 0.0;
  bool satisfied = false;
};
Lemma2Check lemma2_check(const KernelPath& perturbed, const KernelPath& frozen, double K,
                         double sigma0_norm, double lambda, const LossSpec& loss);

struct PlateauReport {
  double lazy_final_loss = 0.0;
  double nonlazy_final_loss = 0.0;
  double gap_ratio = 0.0;  // lazy / nonlazy
  std::optional<double> linearized_optimum;
  std::optional<double> relative_to_optimum;  // |lazy - opt| / opt
};

PlateauReport check_under_param_plateau(const std::vector<double>& lazy_losses,
                                        const std::vector<double>& nonlazy_losses,
                                        std::optional<double> linearized_optimum = std::nullopt);

/// Fraction of (input, neuron) pairs whose ReLU pre-activation keeps its class (active
/// iff z > 0). Accepts parameters of `net` or of a symmetrized wrapper around it (twice
/// the length), in which case both halves are pooled.
double stability_of_activations(const TwoLayerNet& net, const ParamVector& w_init,
                                const ParamVector& w_final, const Matrix& test_inputs);

struct GeneralizationGap {
  double gap = 0.0;       // max_x |alpha f(w_T, x) - alpha f_bar(w_bar_T, x)|
  double m1 = 0.0;        // max_x ||grad_w f(w0, x)||
  double m2 = 0.0;        // sampled Lipschitz constant of grad_w f(., x) on [w0, w_T]
  double bound = 0.0;     // alpha m1 ||w_T - w_bar_T|| + alpha m2 ||w_T - w0||^2 / 2
};

/// `model` is the unscaled model h; the tangent model is taken at `w0`.
GeneralizationGap generalization_gap(const Model& model, const ParamVector& w0,
                                     const ParamVector& w_T, const ParamVector& w_bar_T,
                                     double alpha, const Matrix& test_inputs);

}  // namespace lazyflow
