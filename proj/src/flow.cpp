#include "lazyflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lazyflow/errors.hpp"
#include "lazyflow/operator_norm.hpp"

namespace lazyflow {

std::string to_string(StepRule r) {
  switch (r) {
    case StepRule::fixed: return "fixed";
    case StepRule::lipschitz: return "lipschitz";
    case StepRule::curvature: return "curvature";
  }
  return "?";
}

std::string to_string(Integrator i) { return i == Integrator::euler ? "euler" : "rk4"; }

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::horizon: return "horizon";
    case StopReason::max_steps: return "max_steps";
    case StopReason::loss: return "loss";
    case StopReason::gradient: return "gradient";
  }
  return "?";
}

double jacobian_lipschitz(const Model& model, const ParamVector& w0, const EvaluationSet& set,
                          std::uint64_t seed) {
  Engine rng = make_engine(seed, {stream::diagnostics, 1});
  const double s = jacobian_norm(jacobian(model, w0, set), rng).value;
  if (!(s > 0.0)) throw NumericalError("Dh(w0) = 0: critical initialization, no step size can be derived");
  return s;
}

namespace {

/// Decides which steps get recorded.
class Recorder {
 public:
  explicit Recorder(const RecordPolicy& p) : p_(p) {}

  bool wants(long step) {
    switch (p_.mode) {
      case RecordMode::dense: return true;
      case RecordMode::stride: return step % std::max(1L, p_.stride) == 0;
      case RecordMode::logarithmic: {
        if (step == 0) return true;
        if (step < next_) return false;
        while (threshold(j_) <= step) ++j_;
        next_ = threshold(j_);
        return true;
      }
    }
    return true;
  }

 private:
  long threshold(long j) const {
    return static_cast<long>(std::ceil(std::pow(10.0, double(j) / std::max(1, p_.per_decade)) - 1e-9));
  }
  RecordPolicy p_;
  long j_ = 0;
  long next_ = 1;
};

/// Running estimate of the largest |eigenvalue| of the Hessian of F_alpha via finite
/// differences of the gradient.
class CurvatureTracker {
 public:
  template <class GradFn>
  double update(const GradFn& grad, const ParamVector& w, const ParamVector& g, int iterations) {
    for (int it = 0; it < iterations; ++it) {
      const double eps = 1e-6 * std::max(1.0, w.norm());
      const ParamVector hv = (grad(ParamVector(w + eps * v_)) - g) / eps;
      const double lam = hv.norm();
      if (!(lam > 0.0) || !std::isfinite(lam)) break;
      L_ = std::max(L_, lam);
      v_ = hv / lam;
    }
    return L_;
  }
  void start(Eigen::Index p, Engine& rng) { v_ = random_unit(p, rng); }
  double value() const { return L_; }

 private:
  ParamVector v_;
  double L_ = 0.0;
};

void validate(const FlowConfig& c) {
  if (!(c.alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (c.horizon && !(*c.horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (c.budget && !(*c.budget > 0.0)) throw InvalidArgument("budget must be positive");
  if (c.max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (c.step_rule == StepRule::fixed && !(c.step > 0.0)) throw InvalidArgument("fixed step must be positive");
  if (c.step_rule != StepRule::fixed && !(c.step_factor > 0.0 && c.step_factor <= 1.0))
    throw InvalidArgument("step factor c must lie in (0, 1]");
  if (c.lipschitz_h && !(*c.lipschitz_h > 0.0)) throw InvalidArgument("Lip(h) must be positive");
  if (c.curvature_refresh < 1) throw InvalidArgument("curvature refresh must be >= 1");
  if (!(c.divergence_factor > 1.0)) throw InvalidArgument("divergence factor must exceed 1");
}

Sample make_sample(double t, long step, const ParamVector& w, const ParamVector& w0,
                   const ObjectiveValue& ev, bool store) {
  Sample s;
  s.t = t;
  s.step = step;
  if (store) s.w = w;
  s.y = ev.y;
  s.loss = ev.loss;
  s.grad_norm = ev.gradient.norm();
  s.dist_to_init = (w - w0).norm();
  return s;
}

void check_state(const ObjectiveValue& ev, const ParamVector& w, double loss0, double factor, long step) {
  if (!w.allFinite() || !std::isfinite(ev.loss)) {
    std::ostringstream os;
    os << "non-finite state at step " << step;
    throw NumericalError(os.str());
  }
  if (loss0 > 0.0 && ev.loss > factor * loss0) {
    std::ostringstream os;
    os << "divergence at step " << step << ": loss " << ev.loss << " exceeds " << factor
       << "x the initial loss " << loss0 << "; reduce the step factor";
    throw NumericalError(os.str());
  }
}

}  // namespace

Trajectory integrate_flow(const Model& model, const LossSpec& loss, const EvaluationSet& set,
                          const ParamVector& w0, const FlowConfig& cfg) {
  validate(cfg);
  model.check_params(w0);
  const Matrix& X = set.inputs();
  const double alpha = cfg.alpha;
  auto objective = [&](const ParamVector& w) { return scaled_objective(model, loss, alpha, w, X); };
  auto grad = [&](const ParamVector& w) { return objective(w).gradient; };

  Trajectory traj;
  FlowMetadata& meta = traj.meta;
  meta.model = model.describe();
  meta.alpha = alpha;
  meta.step_rule = cfg.step_rule;
  meta.integrator = cfg.integrator;
  meta.seed = cfg.seed;

  double lip = 0.0;
  if (cfg.step_rule == StepRule::lipschitz || cfg.budget)
    lip = cfg.lipschitz_h ? *cfg.lipschitz_h : jacobian_lipschitz(model, w0, set, cfg.seed);
  meta.lipschitz_h = lip;

  std::optional<double> T = cfg.horizon;
  if (cfg.budget) {
    const double from_budget = *cfg.budget / (lip * lip);
    if (T && std::abs(*T - from_budget) > 1e-6 * *T) {
      std::ostringstream os;
      os << "horizon T = " << *T << " is inconsistent with budget K = " << *cfg.budget
         << " (K / Lip(h)^2 = " << from_budget << ")";
      throw InvalidArgument(os.str());
    }
    T = from_budget;
  }
  meta.horizon = T;

  ParamVector w = w0;
  ObjectiveValue ev = objective(w);
  const double loss0 = ev.loss;
  const double grad0 = ev.gradient.norm();

  Engine rng = make_engine(cfg.seed, {stream::diagnostics, 2});
  CurvatureTracker curv;
  double eta = 0.0;
  switch (cfg.step_rule) {
    case StepRule::fixed: eta = cfg.step; break;
    case StepRule::lipschitz: eta = cfg.step_factor / (lip * lip); break;
    case StepRule::curvature: {
      curv.start(w.size(), rng);
      const double L = curv.update(grad, w, ev.gradient, 20);
      if (!(L > 0.0)) throw NumericalError("curvature estimate vanished; use a fixed step");
      eta = cfg.step_factor / L;
      break;
    }
  }
  long planned = cfg.max_steps;
  const bool uniform = cfg.step_rule != StepRule::curvature;
  if (T && uniform) {
    const long n = std::max(1L, static_cast<long>(std::ceil(*T / eta - 1e-9)));
    eta = *T / double(n);
    planned = std::min(planned, n);
  }
  meta.step = eta;

  Recorder rec(cfg.record);
  const bool store = cfg.record.store_states;
  auto record = [&](double t, long step) {
    traj.samples.push_back(make_sample(t, step, w, w0, ev, store));
    if (cfg.observer) cfg.observer(traj.samples.back());
  };

  long step = 0;
  double t = 0.0;
  rec.wants(0);
  record(0.0, 0);
  for (;;) {
    if (T && (uniform ? step >= planned : t >= *T * (1.0 - 1e-12))) {
      meta.reason = StopReason::horizon;
      break;
    }
    if (step >= cfg.max_steps) {
      meta.reason = StopReason::max_steps;
      break;
    }
    if (cfg.stop.loss_below && ev.loss < *cfg.stop.loss_below) {
      meta.reason = StopReason::loss;
      break;
    }
    const double gn = ev.gradient.norm();
    if ((cfg.stop.grad_below && gn < *cfg.stop.grad_below) ||
        (cfg.stop.grad_relative_below && gn < *cfg.stop.grad_relative_below * grad0)) {
      meta.reason = StopReason::gradient;
      break;
    }

    double h = eta;
    if (cfg.step_rule == StepRule::curvature) {
      if (step > 0 && step % cfg.curvature_refresh == 0) {
        curv.update(grad, w, ev.gradient, 1);
        h = eta = cfg.step_factor / curv.value();
      }
      if (T) h = std::min(h, *T - t);
    }

    auto advance = [&](double dt) -> ParamVector {
      if (cfg.integrator == Integrator::euler) return w - dt * ev.gradient;
      const ParamVector k1 = -ev.gradient;
      const ParamVector k2 = -grad(w + 0.5 * dt * k1);
      const ParamVector k3 = -grad(w + 0.5 * dt * k2);
      const ParamVector k4 = -grad(w + dt * k3);
      return w + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    ParamVector next = advance(h);
    ObjectiveValue next_ev = objective(next);
    if (cfg.step_rule == StepRule::curvature) {
      // The curvature can grow between refreshes (it scales with |w|^2 for homogeneous
      // models); a step that raises the loss is redone with a fresh, smaller step.
      for (int retry = 0; !(next_ev.loss <= ev.loss); ++retry) {
        if (retry == 60) throw NumericalError("curvature step kept increasing the loss");
        curv.update(grad, w, ev.gradient, 5);
        eta = std::min(cfg.step_factor / curv.value(), 0.5 * eta);
        h = T ? std::min(eta, *T - t) : eta;
        next = advance(h);
        next_ev = objective(next);
      }
    }
    w = std::move(next);
    ev = std::move(next_ev);
    ++step;
    t = uniform ? double(step) * eta : t + h;
    check_state(ev, w, loss0, cfg.divergence_factor, step);
    if (rec.wants(step)) record(t, step);
  }
  if (traj.samples.back().step != step) record(t, step);
  meta.steps = step;
  traj.final_w = w;
  traj.final_y = ev.y;
  return traj;
}

Trajectory integrate_linearized_flow(const TangentModel& tangent, const LossSpec& loss,
                                     const EvaluationSet& set, const ParamVector& w0,
                                     const FlowConfig& config) {
  return integrate_flow(tangent, loss, set, w0, config);
}

Trajectory run_sgd(const Model& model, const ParamVector& w0, const BatchSampler& sampler,
                   const EvaluationSet& holdout, const SgdConfig& sc) {
  const FlowConfig& cfg = sc.flow;
  validate(cfg);
  model.check_params(w0);
  if (sc.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  const double alpha = cfg.alpha;
  const LossSpec pop = LossSpec::square(holdout);
  auto pop_objective = [&](const ParamVector& w) {
    return scaled_objective(model, pop, alpha, w, holdout.inputs());
  };
  auto pop_grad = [&](const ParamVector& w) { return pop_objective(w).gradient; };

  Trajectory traj;
  FlowMetadata& meta = traj.meta;
  meta.model = model.describe();
  meta.alpha = alpha;
  meta.step_rule = cfg.step_rule;
  meta.integrator = Integrator::euler;
  meta.seed = cfg.seed;

  ParamVector w = w0;
  ObjectiveValue ev = pop_objective(w);
  const double loss0 = ev.loss;
  Engine rng = make_engine(cfg.seed, {stream::sgd});
  Engine diag_rng = make_engine(cfg.seed, {stream::diagnostics, 3});
  CurvatureTracker curv;
  double eta = 0.0;
  switch (cfg.step_rule) {
    case StepRule::fixed: eta = cfg.step; break;
    case StepRule::lipschitz: {
      const double lip = cfg.lipschitz_h ? *cfg.lipschitz_h : jacobian_lipschitz(model, w0, holdout, cfg.seed);
      meta.lipschitz_h = lip;
      eta = cfg.step_factor / (2.0 * lip * lip);
      break;
    }
    case StepRule::curvature:
      curv.start(w.size(), diag_rng);
      curv.update(pop_grad, w, ev.gradient, 20);
      if (!(curv.value() > 0.0)) throw NumericalError("curvature estimate vanished; use a fixed step");
      eta = cfg.step_factor / (2.0 * curv.value());
      break;
  }
  meta.step = eta;

  Recorder rec(cfg.record);
  const bool store = cfg.record.store_states;
  double t = 0.0;
  long step = 0;
  auto record = [&]() {
    traj.samples.push_back(make_sample(t, step, w, w0, ev, store));
    if (cfg.observer) cfg.observer(traj.samples.back());
  };
  rec.wants(0);
  record();
  bool fresh = true;  // ev is current for w
  const long total = cfg.max_steps;
  for (step = 1; step <= total; ++step) {
    if (cfg.step_rule == StepRule::curvature && step > 1 && (step - 1) % cfg.curvature_refresh == 0) {
      if (!fresh) ev = pop_objective(w);
      curv.update(pop_grad, w, ev.gradient, 1);
      eta = cfg.step_factor / (2.0 * curv.value());
    }
    const EvaluationSet batch = sampler(sc.batch_size, rng);
    const LossSpec bl = LossSpec::square(batch);
    const ObjectiveValue bv = scaled_objective(model, bl, alpha, w, batch.inputs());
    w -= eta * bv.gradient;
    t += eta;
    fresh = false;
    if (!w.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at SGD step " << step;
      throw NumericalError(os.str());
    }
    if (rec.wants(step) || step == total) {
      ev = pop_objective(w);
      fresh = true;
      check_state(ev, w, loss0, cfg.divergence_factor, step);
      record();
    }
    if (cfg.stop.loss_below && fresh && ev.loss < *cfg.stop.loss_below) {
      meta.reason = StopReason::loss;
      break;
    }
  }
  if (step > total) {
    step = total;
    meta.reason = StopReason::max_steps;
  }
  if (!fresh) {
    ev = pop_objective(w);
    record();
  }
  meta.steps = step;
  traj.final_w = w;
  traj.final_y = ev.y;
  return traj;
}

KernelAction constant_kernel(const Jacobian& J) {
  return [J](double, const OutputPoint& g) { return J.apply(J.adjoint(g)); };
}

KernelPath integrate_kernel_flow(const KernelAction& sigma, const LossSpec& loss,
                                 const OutputPoint& y0, double horizon, long steps) {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  if (steps < 1) throw InvalidArgument("steps must be >= 1");
  const double h = horizon / double(steps);
  auto rhs = [&](double t, const OutputPoint& y) -> OutputPoint { return -sigma(t, loss.gradient(y)); };
  KernelPath path;
  path.t.reserve(steps + 1);
  path.y.reserve(steps + 1);
  OutputPoint y = y0;
  path.t.push_back(0.0);
  path.y.push_back(y);
  for (long s = 0; s < steps; ++s) {
    const double t = double(s) * h;
    const OutputPoint k1 = rhs(t, y);
    const OutputPoint k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
    const OutputPoint k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
    const OutputPoint k4 = rhs(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite()) throw NumericalError("kernel flow produced non-finite values");
    path.t.push_back(double(s + 1) * h);
    path.y.push_back(y);
  }
  return path;
}

ParamVector state_at(const Trajectory& traj, double t) {
  const auto& s = traj.samples;
  if (s.empty() || s.front().w.size() == 0)
    throw InvalidArgument("trajectory does not store parameter states");
  if (t <= s.front().t) return s.front().w;
  if (t >= s.back().t) return s.back().w;
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const Sample& a, double v) { return a.t < v; });
  const Sample& hi = *it;
  const Sample& lo = *(it - 1);
  if (hi.t == t) return hi.w;
  const double u = (t - lo.t) / (hi.t - lo.t);
  return (1.0 - u) * lo.w + u * hi.w;
}

}  // namespace lazyflow
