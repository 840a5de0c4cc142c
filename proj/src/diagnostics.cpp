#include "lazyflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lazyflow/errors.hpp"
#include "lazyflow/operator_norm.hpp"

namespace lazyflow {

namespace {

/// Power iteration on (Ja - Jb)^* (Ja - Jb) / scale^2. `vector` is the right singular vector.
PowerResult difference_power(const Jacobian& a, const Jacobian& b, double scale, Engine& rng,
                             double tol) {
  auto op = [&](const Vector& v) {
    const OutputPoint d = (a.apply(v) - b.apply(v)) / scale;
    return Vector((a.adjoint(d) - b.adjoint(d)) / scale);
  };
  PowerResult r = power_iteration(op, random_unit(a.cols(), rng), tol, 2000);
  r.value = std::sqrt(std::max(r.value, 0.0));
  return r;
}

double weighted_norm(const OutputPoint& y, const Vector& weights) {
  return std::sqrt((weights.asDiagonal() * y.cwiseAbs2()).sum());
}

}  // namespace

double jacobian_difference_norm(const Jacobian& a, const Jacobian& b, Engine& rng, double tol) {
  return difference_power(a, b, 1.0, rng, tol).value;
}

NormEstimates estimate_norms(const Model& model, const ParamVector& w0, const EvaluationSet& set,
                             const NormOptions& opt) {
  if (!(opt.radius > 0.0)) throw InvalidArgument("estimation radius must be positive");
  if (opt.lipschitz && opt.samples < 16) throw InvalidArgument("at least 16 samples are required");
  if (opt.d2_directions < 1) throw InvalidArgument("at least one direction is required for D^2 h");
  model.check_params(w0);

  Engine rng = make_engine(opt.seed, {stream::diagnostics, 10});
  NormEstimates ne;
  ne.radius = opt.radius;
  ne.samples = opt.lipschitz ? opt.samples : 0;
  ne.d2_directions = opt.d2_directions;

  const Jacobian J0 = jacobian(model, w0, set);
  const Eigen::Index p = J0.cols(), N = J0.rows();
  ne.h0_norm = set.norm(J0.outputs());

  const PowerResult top = jacobian_norm(J0, rng, opt.power_tol);
  ne.dh_norm = top.value;
  ne.dh_converged = top.converged;

  if (!opt.singular_values) {
    ne.sigma_min = ne.sigma_min_nonzero = std::numeric_limits<double>::quiet_NaN();
    ne.rank = -1;
  } else if (static_cast<double>(N) * static_cast<double>(p) <= kMaxDenseEntries) {
    Eigen::BDCSVD<Matrix> svd(J0.weighted_dense());
    const Vector& s = svd.singularValues();
    const double smax = s.size() ? s(0) : 0.0;
    ne.rank = (s.array() > 1e-10 * smax).count();
    ne.sigma_min_nonzero = ne.rank > 0 ? s(ne.rank - 1) : 0.0;
    ne.sigma_min = N <= p ? s(N - 1) : 0.0;
  } else {
    ne.sigma_min = ne.sigma_min_nonzero = std::numeric_limits<double>::quiet_NaN();
    ne.rank = -1;
  }

  // D^2 h(w0): random directions, then alternating tensor power steps from the best one.
  const double eps = opt.d2_epsilon;
  double best = 0.0;
  ParamVector best_u, best_v;
  for (int i = 0; i < opt.d2_directions; ++i) {
    const ParamVector u = random_unit(p, rng);
    const Jacobian Ju = jacobian(model, w0 + eps * u, set);
    const PowerResult r = difference_power(Ju, J0, eps, rng, 1e-6);
    if (r.value > best) {
      best = r.value;
      best_u = u;
      best_v = r.vector;
    }
  }
  for (int it = 0; it < opt.d2_refine && best > 0.0; ++it) {
    const Jacobian Ju = jacobian(model, w0 + eps * best_u, set);
    OutputPoint g = (Ju.apply(best_v) - J0.apply(best_v)) / eps;
    const double gn = set.norm(g);
    if (!(gn > 0.0)) break;
    g /= gn;
    const Jacobian Jv = jacobian(model, w0 + eps * best_v, set);
    ParamVector u = (Jv.adjoint(g) - J0.adjoint(g)) / eps;
    const double un = u.norm();
    if (!(un > 0.0)) break;
    u /= un;
    const Jacobian Jn = jacobian(model, w0 + eps * u, set);
    const PowerResult r = difference_power(Jn, J0, eps, rng, 1e-6);
    if (r.value <= best * (1.0 + 1e-6)) {
      best = std::max(best, r.value);
      break;
    }
    best = r.value;
    best_u = u;
    best_v = r.vector;
  }
  ne.d2h_norm = best;

  ne.lip_h = ne.dh_norm;
  ne.lip_dh = ne.d2h_norm;
  if (opt.lipschitz) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<ParamVector> pts;
    std::vector<OutputPoint> outs;
    for (int s = 0; s < opt.samples; ++s) {
      const double rho = opt.radius * std::pow(unif(rng), 1.0 / double(p));
      const ParamVector w = w0 + rho * random_unit(p, rng);
      const Jacobian Jw = jacobian(model, w, set);
      ne.lip_h = std::max(ne.lip_h, jacobian_norm(Jw, rng, 1e-6).value);
      const double dw = (w - w0).norm();
      if (dw > 0.0) ne.lip_dh = std::max(ne.lip_dh, difference_power(Jw, J0, dw, rng, 1e-6).value);
      // Short pair at w along a random direction.
      const ParamVector u = random_unit(p, rng);
      const Jacobian Jwu = jacobian(model, w + eps * u, set);
      ne.lip_dh = std::max(ne.lip_dh, difference_power(Jwu, Jw, eps, rng, 1e-6).value);
      pts.push_back(w);
      outs.push_back(Jw.outputs());
    }
    for (std::size_t a = 0; a < pts.size(); ++a)
      for (std::size_t b = a + 1; b < pts.size(); ++b) {
        const double dw = (pts[a] - pts[b]).norm();
        if (dw > 0.0) ne.lip_h = std::max(ne.lip_h, set.norm(outs[a] - outs[b]) / dw);
      }
  }
  return ne;
}

double kappa(const NormEstimates& norms, const Model& model, const ParamVector& w0,
             const LossSpec& loss, const EvaluationSet& set) {
  if (loss.kind() != LossKind::square) throw InvalidArgument("the laziness criterion is defined for the square loss");
  if (!(norms.dh_norm > 0.0))
    throw NumericalError("critical initialization: ||Dh(w0)|| = 0, the criterion is undefined");
  const OutputPoint h0 = evaluate(model, w0, set);
  return loss.distance_to_target(h0) * norms.d2h_norm / (norms.dh_norm * norms.dh_norm);
}

double kappa(const Model& model, const ParamVector& w0, const LossSpec& loss,
             const EvaluationSet& set, const NormOptions& options) {
  NormOptions o = options;
  o.lipschitz = false;
  o.singular_values = false;
  return kappa(estimate_norms(model, w0, set, o), model, w0, loss, set);
}

SlopeFit fit_loglog_any(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("fit points", long(x.size()), long(y.size()));
  if (x.size() < 2) throw InvalidArgument("a slope fit needs at least two points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log fit needs positive values");
    lx[i] = std::log10(x[i]);
    ly[i] = std::log10(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / double(n);
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / double(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("log-log fit needs distinct x values");
  SlopeFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (f.intercept + f.slope * lx[i]);
    ssr += r * r;
  }
  f.residual = std::sqrt(ssr / double(n));
  f.slope_stderr = n > 2 ? std::sqrt(ssr / double(n - 2) / sxx) : 0.0;
  return f;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) throw InvalidArgument("slope fits need at least 3 points");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*lo > 0.0) || std::log10(*hi / *lo) < 2.0 - 1e-12)
    throw InvalidArgument("slope fits need x values spanning at least two decades");
  return fit_loglog_any(x, y);
}

DeviationReport compare_flows(const Trajectory& traj, const Trajectory& lin, double alpha,
                              const Vector& weights) {
  if (traj.samples.empty() || lin.samples.empty()) throw InvalidArgument("empty trajectory");
  if (traj.front().w.size() == 0 || lin.front().w.size() == 0)
    throw InvalidArgument("compare_flows needs trajectories with stored states");
  const double T1 = traj.back().t, T2 = lin.back().t;
  if (std::abs(T1 - T2) > 1e-9 * std::max({1e-300, std::abs(T1), std::abs(T2)}))
    throw InvalidArgument("horizon mismatch: " + std::to_string(T1) + " vs " + std::to_string(T2));

  const bool same_grid =
      traj.samples.size() == lin.samples.size() &&
      std::equal(traj.samples.begin(), traj.samples.end(), lin.samples.begin(),
                 [](const Sample& a, const Sample& b) { return a.t == b.t; });
  DeviationReport rep;
  rep.alpha = alpha;
  const ParamVector& w0 = traj.front().w;
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const Sample& s = traj.samples[i];
    ParamVector wl;
    OutputPoint yl;
    if (same_grid) {
      wl = lin.samples[i].w;
      yl = lin.samples[i].y;
    } else {
      auto it = std::lower_bound(lin.samples.begin(), lin.samples.end(), s.t,
                                 [](const Sample& a, double v) { return a.t < v; });
      if (it == lin.samples.end()) it = lin.samples.end() - 1;
      if (it == lin.samples.begin() || it->t == s.t) {
        wl = it->w;
        yl = it->y;
      } else {
        const Sample& hi = *it;
        const Sample& lo = *(it - 1);
        const double u = (s.t - lo.t) / (hi.t - lo.t);
        wl = (1.0 - u) * lo.w + u * hi.w;
        yl = (1.0 - u) * lo.y + u * hi.y;
      }
    }
    rep.t.push_back(s.t);
    rep.param_gap.push_back((s.w - wl).norm());
    rep.output_gap.push_back(weighted_norm(s.y - yl, weights));
    rep.dist_to_init.push_back((s.w - w0).norm());
  }
  rep.sup_param_gap = *std::max_element(rep.param_gap.begin(), rep.param_gap.end());
  rep.sup_output_gap = *std::max_element(rep.output_gap.begin(), rep.output_gap.end());
  rep.sup_dist_to_init = *std::max_element(rep.dist_to_init.begin(), rep.dist_to_init.end());
  return rep;
}

AlphaSweepFit fit_alpha_sweep(const std::vector<DeviationReport>& reports) {
  std::vector<double> a, pg, og, di;
  for (const auto& r : reports) {
    a.push_back(r.alpha);
    pg.push_back(r.sup_param_gap);
    og.push_back(r.sup_output_gap);
    di.push_back(r.sup_dist_to_init);
  }
  return {fit_loglog(a, pg), fit_loglog(a, og), fit_loglog(a, di)};
}

std::string to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::satisfied: return "satisfied";
    case BoundStatus::violated: return "violated";
    case BoundStatus::not_applicable: return "bound not applicable";
  }
  return "?";
}

Theorem2Check check_theorem2_bound(const Trajectory& traj, const Trajectory& lin,
                                   const NormEstimates& norms, const LossSpec& loss, double alpha,
                                   double safety) {
  if (loss.kind() != LossKind::square) throw InvalidArgument("the finite-horizon bound needs the square loss");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(safety >= 1.0)) throw InvalidArgument("safety factor must be >= 1");
  if (traj.final_w.size() == 0 || lin.final_w.size() == 0) throw InvalidArgument("trajectories lack final states");
  const double T = traj.back().t;
  if (std::abs(T - lin.back().t) > 1e-9 * std::max(T, 1e-300))
    throw InvalidArgument("horizon mismatch between the two flows");

  Theorem2Check c;
  c.safety = safety;
  c.horizon = T;
  c.lip_h = safety * norms.lip_h;
  c.lip_dh = safety * norms.lip_dh;
  c.budget = T * c.lip_h * c.lip_h;
  c.residual0 = loss.distance_to_target(traj.front().y);
  c.alpha_threshold = c.budget * c.residual0 / (norms.radius * c.lip_h);

  const double out_gap = loss.norm(traj.final_y - lin.final_y);
  const double par_gap = (traj.final_w - lin.final_w).norm();
  if (c.residual0 == 0.0) {
    c.status = out_gap == 0.0 ? BoundStatus::satisfied : BoundStatus::violated;
    c.param_satisfied = par_gap == 0.0;
    return c;
  }
  const double K = c.budget;
  c.measured_lhs = out_gap / c.residual0;
  c.bound_rhs = (K * K / alpha) * (c.lip_dh / (c.lip_h * c.lip_h)) * c.residual0;
  c.param_lhs = alpha * c.lip_h * par_gap / c.residual0;
  c.param_rhs = c.bound_rhs * (2.0 + 4.0 * K / 3.0);
  c.param_satisfied = c.param_lhs <= c.param_rhs;
  if (alpha < c.alpha_threshold)
    c.status = BoundStatus::not_applicable;
  else
    c.status = c.measured_lhs <= c.bound_rhs ? BoundStatus::satisfied : BoundStatus::violated;
  return c;
}

Theorem3Check check_theorem3_rate(const Trajectory& traj, const NormEstimates& norms,
                                  const LossSpec& loss, double alpha, double safety) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  Theorem3Check c;
  c.safety = safety;
  const double m = loss.strong_convexity();
  const double kc = loss.condition();
  const double sigma = norms.sigma_min;
  if (!(sigma > 0.0) || std::isnan(sigma)) {
    c.status = "not over-parameterized";
    return c;
  }
  const double lip_dh = safety * norms.lip_dh;
  c.c0 = lip_dh > 0.0 ? std::pow(sigma, 3) / (32.0 * std::pow(kc, 1.5) * norms.dh_norm * lip_dh)
                      : std::numeric_limits<double>::infinity();
  c.alpha_threshold = loss.norm(loss.target()) / c.c0;
  c.bound_rate = m * sigma * sigma / 4.0;

  const double r0 = loss.distance_to_target(traj.front().y);
  std::vector<double> ts, logs;
  bool ok = true;
  for (const Sample& s : traj.samples) {
    const double r = loss.distance_to_target(s.y);
    const double bound = std::sqrt(kc) * r0 * std::exp(-c.bound_rate * s.t);
    if (bound > 0.0) c.worst_ratio = std::max(c.worst_ratio, r / bound);
    if (r > bound * (1.0 + 1e-12) + 1e-300) ok = false;
    if (r > 0.0) {
      ts.push_back(s.t);
      logs.push_back(std::log(r));
    }
  }
  if (ts.size() >= 2) {
    const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / double(ts.size());
    const double ml = std::accumulate(logs.begin(), logs.end(), 0.0) / double(ts.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxx += (ts[i] - mt) * (ts[i] - mt);
      sxy += (ts[i] - mt) * (logs[i] - ml);
    }
    c.rate_fit = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  c.satisfied = ok;
  const bool pre = norms.h0_norm <= c.c0 && alpha > c.alpha_threshold;
  if (!pre)
    c.status = "precondition unmet";
  else
    c.status = ok ? "satisfied" : "violated";
  return c;
}

double lemma1_ratio(const std::vector<double>& t, const std::vector<OutputPoint>& y,
                    const LossSpec& loss, double lambda) {
  if (t.size() != y.size() || t.empty()) throw InvalidArgument("lemma check needs matching samples");
  const double m = loss.strong_convexity();
  const double r0 = loss.distance_to_target(y.front());
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double bound = std::sqrt(loss.condition()) * r0 * std::exp(-m * lambda * t[i]);
    const double r = loss.distance_to_target(y[i]);
    if (bound > 0.0) worst = std::max(worst, r / bound);
    else if (r > 0.0) worst = std::numeric_limits<double>::infinity();
  }
  return worst;
}

Lemma2Check lemma2_check(const KernelPath& perturbed, const KernelPath& frozen, double K,
                         double sigma0_norm, double lambda, const LossSpec& loss) {
  if (perturbed.t.size() != frozen.t.size()) throw InvalidArgument("kernel paths must share a grid");
  Lemma2Check c;
  for (std::size_t i = 0; i < perturbed.t.size(); ++i)
    c.max_gap = std::max(c.max_gap, loss.norm(perturbed.y[i] - frozen.y[i]));
  c.bound = K * std::sqrt(sigma0_norm) / (std::pow(lambda, 1.5) * loss.strong_convexity());
  c.satisfied = c.max_gap <= c.bound;
  return c;
}

PlateauReport check_under_param_plateau(const std::vector<double>& lazy,
                                        const std::vector<double>& nonlazy,
                                        std::optional<double> opt) {
  if (lazy.empty() || nonlazy.empty()) throw InvalidArgument("plateau check needs runs on both sides");
  PlateauReport r;
  r.lazy_final_loss = std::accumulate(lazy.begin(), lazy.end(), 0.0) / double(lazy.size());
  r.nonlazy_final_loss = std::accumulate(nonlazy.begin(), nonlazy.end(), 0.0) / double(nonlazy.size());
  r.gap_ratio = r.nonlazy_final_loss > 0.0 ? r.lazy_final_loss / r.nonlazy_final_loss
                                           : std::numeric_limits<double>::infinity();
  if (opt) {
    r.linearized_optimum = opt;
    r.relative_to_optimum = std::abs(r.lazy_final_loss - *opt) / *opt;
  }
  return r;
}

double stability_of_activations(const TwoLayerNet& net, const ParamVector& w_init,
                                const ParamVector& w_final, const Matrix& X) {
  if (net.config().activation.kind != compute::ActivationKind::relu)
    throw InvalidArgument("stability of activations is defined for ReLU networks");
  if (w_init.size() != w_final.size()) throw DimensionError("params", w_init.size(), w_final.size());
  net.check_inputs(X);
  const Eigen::Index p = net.param_count();
  if (w_init.size() != p && w_init.size() != 2 * p) throw DimensionError("params", p, w_init.size());
  if (X.rows() == 0) throw InvalidArgument("stability needs at least one input");
  long same = 0, total = 0;
  for (Eigen::Index off = 0; off < w_init.size(); off += p) {
    const Matrix Z0 = X * net.inner(w_init.segment(off, p)).transpose();
    const Matrix Z1 = X * net.inner(w_final.segment(off, p)).transpose();
    same += ((Z0.array() > 0.0) == (Z1.array() > 0.0)).count();
    total += Z0.size();
  }
  return double(same) / double(total);
}

GeneralizationGap generalization_gap(const Model& model, const ParamVector& w0,
                                     const ParamVector& w_T, const ParamVector& w_bar_T,
                                     double alpha, const Matrix& X) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  GeneralizationGap g;
  const auto op0 = model.linearize(w0, X);
  const OutputPoint f_bar = op0->outputs() + op0->apply(w_bar_T - w0);
  const OutputPoint f = model.evaluate(w_T, X);
  g.gap = alpha * (f - f_bar).rowwise().norm().maxCoeff();

  const Eigen::Index k = op0->channels();
  const Matrix J0 = op0->dense();
  for (Eigen::Index i = 0; i < op0->points(); ++i)
    g.m1 = std::max(g.m1, J0.middleRows(i * k, k).norm());
  const ParamVector d = w_T - w0;
  const double dn = d.norm();
  if (dn > 0.0) {
    for (double s : {0.25, 0.5, 0.75, 1.0}) {
      const Matrix Js = model.linearize(w0 + s * d, X)->dense();
      for (Eigen::Index i = 0; i < op0->points(); ++i)
        g.m2 = std::max(g.m2, (Js.middleRows(i * k, k) - J0.middleRows(i * k, k)).norm() / (s * dn));
    }
  }
  g.bound = alpha * g.m1 * (w_T - w_bar_T).norm() + 0.5 * alpha * g.m2 * dn * dn;
  return g;
}

}  // namespace lazyflow
