#include "lazyflow/experiments.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "lazyflow/arccos_kernel.hpp"
#include "lazyflow/diagnostics.hpp"
#include "lazyflow/errors.hpp"
#include "lazyflow/linearize.hpp"
#include "lazyflow/wrappers.hpp"

namespace lazyflow {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// JSON has no NaN; emit null instead.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json seeds_json(const SeedChain& s) {
  return {{"master", s.master}, {"repeat", s.repeat}, {"teacher", s.teacher}, {"train", s.train},
          {"test", s.test},     {"init", s.init},     {"flow", s.flow}};
}

double test_loss(const Model& model, double alpha, const ParamVector& w, const EvaluationSet& test,
                 const LossSpec& test_loss_spec) {
  return test_loss_spec.value(alpha * model.evaluate(w, test.inputs()));
}

void write_common(const std::filesystem::path& dir, const ExperimentConfig& config,
                  const CsvTable& results, const json& diagnostics, const std::string& summary) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config-echo.json", to_json(config).dump(2) + "\n");
  results.write(dir / "results.csv");
  write_text(dir / "diagnostics.json", diagnostics.dump(2) + "\n");
  write_text(dir / "summary.txt", summary);
}

std::string describe_value(const JobResult& r) {
  if (!r.job.variable) return "";
  if (*r.job.variable == SweepVariable::width) return std::to_string(long(r.job.value));
  return format_double(r.job.value);
}

}  // namespace

Teacher make_teacher(const TeacherSpec& spec, Eigen::Index input_dim, Engine& rng) {
  if (spec.neurons < 1) throw InvalidArgument("a teacher needs at least one neuron");
  TwoLayerConfig tc;
  tc.width = spec.neurons;
  tc.input_dim = input_dim;
  tc.output_dim = 1;
  tc.activation.kind = compute::ActivationKind::relu;
  auto net = std::make_shared<TwoLayerNet>(tc);
  Matrix A(spec.neurons, input_dim), B(spec.neurons, 1);
  for (Eigen::Index j = 0; j < spec.neurons; ++j) {
    Vector a = normal_vector(input_dim, 1.0, rng);
    double b = normal_vector(1, 1.0, rng)(0);
    const double c = 1.0 / std::sqrt(a.norm() * std::abs(b));
    A.row(j) = (c * a).transpose();
    B(j, 0) = c * b;
  }
  return {net, net->pack(A, B)};
}

SeedChain seed_chain(std::uint64_t master, int repeat) {
  SeedChain s;
  s.master = master;
  s.repeat = repeat;
  const auto r = static_cast<std::uint64_t>(repeat);
  s.teacher = derive_seed(master, {stream::teacher, r});
  s.train = derive_seed(master, {stream::train, r});
  s.test = derive_seed(master, {stream::test, r});
  s.init = derive_seed(master, {stream::init, r});
  s.flow = derive_seed(master, {stream::sgd, r});
  return s;
}

Dataset make_dataset(const ExperimentConfig& config, const Teacher& teacher, const SeedChain& seeds) {
  const Eigen::Index d = config.data.input_dim;
  Engine train_rng(seeds.train), test_rng(seeds.test);
  Matrix X = sample_sphere(config.data.n_train, d, train_rng);
  Matrix Xt = sample_sphere(config.data.n_test, d, test_rng);
  Matrix y = config.target_source == TargetSource::teacher ? teacher.labels(X) : *config.explicit_targets;
  Matrix yt = teacher.labels(Xt);
  return {EvaluationSet(std::move(X), std::move(y)), EvaluationSet(std::move(Xt), std::move(yt))};
}

Student make_student(const ExperimentConfig& config, const Matrix& train_inputs, const SeedChain& seeds) {
  const StudentSpec& s = config.student;
  if (s.symmetrized && s.width % 2 != 0) throw InvalidArgument("a symmetrized student needs an even width");
  TwoLayerConfig tc;
  tc.width = s.symmetrized ? s.width / 2 : s.width;
  tc.input_dim = config.data.input_dim;
  tc.output_dim = 1;
  tc.activation = s.activation;
  tc.scale_rule = s.scale_rule;
  tc.scale_constant = s.scale_constant;
  if (s.symmetrized) tc.nominal_width = s.width;
  tc.backend = s.backend;
  auto net = std::make_shared<TwoLayerNet>(tc);

  Engine rng(seeds.init);
  // Unit-variance draws scaled afterwards, so a tau sweep reuses the same directions.
  ParamVector w = s.init == InitDist::xavier ? net->init_xavier(rng) : ParamVector(s.init_std * net->init_normal(1.0, rng));

  Student st;
  st.net = net;
  st.model = net;
  st.w0 = w;
  if (s.symmetrized) {
    auto sym = std::make_shared<SymmetrizedModel>(net);
    st.w0 = sym->duplicate(w);
    st.model = sym;
  }
  if (s.centered) st.model = std::make_shared<CenteredModel>(st.model, st.w0, train_inputs);
  if (s.scaled) {
    st.model = std::make_shared<ScaledModel>(st.model, *s.scaled);
    st.output_scale = *s.scaled;
  }
  return st;
}

ExperimentConfig job_config(const ExperimentConfig& base, const JobSpec& job) {
  ExperimentConfig c = base;
  if (job.scale_rule) c.student.scale_rule = *job.scale_rule;
  if (!job.variable) return c;
  switch (*job.variable) {
    case SweepVariable::tau:
      c.student.init = InitDist::normal;
      c.student.init_std = job.value;
      break;
    case SweepVariable::alpha:
      c.flow.alpha = job.value;
      break;
    case SweepVariable::width:
      c.student.width = static_cast<Eigen::Index>(std::llround(job.value));
      break;
  }
  return c;
}

JobOutput run_job(const ExperimentConfig& base, const JobSpec& job, bool keep_trajectories) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = job_config(base, job);
  const SeedChain seeds = seed_chain(cfg.seed, job.repeat);

  Engine teacher_rng(seeds.teacher);
  const Teacher teacher = make_teacher(cfg.teacher, cfg.data.input_dim, teacher_rng);
  const Dataset data = make_dataset(cfg, teacher, seeds);
  Student st = make_student(cfg, data.train.inputs(), seeds);

  const double alpha = cfg.flow.alpha;
  const LossSpec loss = LossSpec::square(data.train);
  const LossSpec test_spec = LossSpec::square(data.test);

  FlowConfig fc = cfg.flow;
  fc.seed = seeds.flow;
  fc.record.store_states = true;

  JobOutput out;
  JobResult& r = out.result;
  r.job = job;
  r.seeds = seeds;
  r.width = cfg.student.width;
  r.alpha = alpha;
  r.tau = cfg.student.init == InitDist::normal ? cfg.student.init_std : kNaN;
  r.kappa0 = r.stability = r.lin_train_loss = r.lin_test_loss = kNaN;

  if (cfg.kappa) {
    try {
      NormOptions no = cfg.norms;
      no.seed = seeds.flow;
      const ScaledModel scaled(st.model, alpha);
      r.kappa0 = kappa(scaled, st.w0, loss, data.train, no);
    } catch (const NumericalError&) {
      r.kappa0 = kNaN;  // critical initialization
    }
  }

  const BatchSampler sampler = [&teacher, d = cfg.data.input_dim](Eigen::Index b, Engine& rng) {
    Matrix X = sample_sphere(b, d, rng);
    Matrix y = teacher.labels(X);
    return EvaluationSet(std::move(X), std::move(y));
  };

  auto train = [&](const Model& model) -> Trajectory {
    if (cfg.mode == TrainingMode::sgd) {
      SgdConfig sc;
      sc.flow = fc;
      sc.batch_size = cfg.batch_size;
      return run_sgd(model, st.w0, sampler, data.test, sc);
    }
    return integrate_flow(model, loss, data.train, st.w0, fc);
  };

  try {
    Trajectory traj = train(*st.model);
    const ParamVector& wT = traj.final_w;
    r.steps = traj.meta.steps;
    r.reason = to_string(traj.meta.reason);
    r.converged = traj.meta.reason == StopReason::gradient || traj.meta.reason == StopReason::loss;
    r.train_loss = loss.value(alpha * st.model->evaluate(wT, data.train.inputs()));
    r.test_loss = test_loss(*st.model, alpha, wT, data.test, test_spec);
    r.best_test_loss = r.test_loss;
    for (const Sample& s : traj.samples) {
      const double l = cfg.mode == TrainingMode::sgd ? s.loss : test_loss(*st.model, alpha, s.w, data.test, test_spec);
      r.best_test_loss = std::min(r.best_test_loss, l);
    }
    const double w0n = st.w0.norm();
    r.rel_displacement = w0n > 0.0 ? (wT - st.w0).norm() / w0n : kNaN;
    if (st.net->config().activation.kind == compute::ActivationKind::relu)
      r.stability = stability_of_activations(*st.net, st.w0, wT, data.test.inputs());
    if (keep_trajectories) out.trajectory = std::move(traj);
  } catch (const NumericalError&) {
    r.status = "diverged";
    r.reason = "numerical_failure";
    r.train_loss = r.test_loss = r.best_test_loss = r.rel_displacement = kNaN;
  }

  if (cfg.linearized) {
    try {
      const auto tangent = build_tangent(st.model, st.w0, data.train);
      Trajectory lin = train(*tangent);
      r.lin_train_loss = loss.value(alpha * tangent->evaluate(lin.final_w, data.train.inputs()));
      r.lin_test_loss = test_loss(*tangent, alpha, lin.final_w, data.test, test_spec);
      if (keep_trajectories) out.linearized = std::move(lin);
    } catch (const NumericalError&) {
      r.lin_train_loss = r.lin_test_loss = kNaN;
    }
  }
  out.student = std::move(st);
  r.seconds = seconds_since(t0);
  return out;
}

std::vector<JobResult> run_jobs(const ExperimentConfig& base, const std::vector<JobSpec>& jobs) {
  std::vector<JobResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      results[i] = run_job(base, jobs[i]).result;
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<JobSpec> sweep_jobs(const ExperimentConfig& config) {
  if (!config.sweep) throw ConfigError("/sweep", "no sweep section in the configuration");
  const SweepSpec& sw = *config.sweep;
  std::vector<std::optional<ScaleRule>> rules;
  if (sw.scale_rules.empty()) rules.push_back(std::nullopt);
  for (ScaleRule r : sw.scale_rules) rules.push_back(r);
  std::vector<JobSpec> jobs;
  for (double v : sw.grid)
    for (const auto& rule : rules)
      for (int rep = 0; rep < sw.repeats; ++rep) jobs.push_back({sw.variable, v, rule, rep});
  return jobs;
}

CsvTable results_table(const std::vector<JobResult>& results) {
  CsvTable t({"variable", "value", "scale_rule", "repeat", "width", "alpha", "tau", "status", "steps",
              "reason", "converged", "train_loss", "test_loss", "best_test_loss", "rel_displacement",
              "stability", "kappa0", "lin_train_loss", "lin_test_loss"});
  for (const JobResult& r : results) {
    const std::string rule = r.job.scale_rule ? to_string(*r.job.scale_rule) : "";
    t.add_row({r.job.variable ? to_string(*r.job.variable) : "none", describe_value(r), rule,
               CsvTable::cell(r.job.repeat), CsvTable::cell(long(r.width)), CsvTable::cell(r.alpha),
               CsvTable::cell(r.tau), r.status, CsvTable::cell(r.steps), r.reason,
               r.converged ? "converged" : "unconverged", CsvTable::cell(r.train_loss),
               CsvTable::cell(r.test_loss), CsvTable::cell(r.best_test_loss),
               CsvTable::cell(r.rel_displacement), CsvTable::cell(r.stability), CsvTable::cell(r.kappa0),
               CsvTable::cell(r.lin_train_loss), CsvTable::cell(r.lin_test_loss)});
  }
  return t;
}

CsvTable aggregate_table(const std::vector<JobResult>& results) {
  CsvTable t({"variable", "value", "scale_rule", "runs", "ok_runs", "converged_runs", "mean_test_loss",
              "std_test_loss", "mean_train_loss", "mean_best_test_loss", "mean_lin_test_loss",
              "mean_rel_displacement", "mean_stability", "mean_kappa0"});
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<const JobResult*>> groups;
  for (const JobResult& r : results) {
    const auto key = std::make_pair(describe_value(r), r.job.scale_rule ? to_string(*r.job.scale_rule) : "");
    if (!groups.count(key)) keys.push_back(key);
    groups[key].push_back(&r);
  }
  auto mean_of = [](const std::vector<const JobResult*>& g, double JobResult::*f) {
    double s = 0.0;
    int n = 0;
    for (const JobResult* r : g)
      if (std::isfinite(r->*f)) s += r->*f, ++n;
    return n ? s / n : kNaN;
  };
  for (const auto& key : keys) {
    const auto& g = groups[key];
    int ok = 0, conv = 0;
    for (const JobResult* r : g) ok += r->status == "ok", conv += r->converged;
    const double mean = mean_of(g, &JobResult::test_loss);
    double ss = 0.0;
    int n = 0;
    for (const JobResult* r : g)
      if (std::isfinite(r->test_loss)) ss += (r->test_loss - mean) * (r->test_loss - mean), ++n;
    const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : (n == 1 ? 0.0 : kNaN);
    t.add_row({g.front()->job.variable ? to_string(*g.front()->job.variable) : "none", key.first, key.second,
               CsvTable::cell(long(g.size())), CsvTable::cell(ok), CsvTable::cell(conv), CsvTable::cell(mean),
               CsvTable::cell(sd), CsvTable::cell(mean_of(g, &JobResult::train_loss)),
               CsvTable::cell(mean_of(g, &JobResult::best_test_loss)),
               CsvTable::cell(mean_of(g, &JobResult::lin_test_loss)),
               CsvTable::cell(mean_of(g, &JobResult::rel_displacement)),
               CsvTable::cell(mean_of(g, &JobResult::stability)), CsvTable::cell(mean_of(g, &JobResult::kappa0))});
  }
  return t;
}

CsvTable export_neuron_cloud(const Trajectory& traj, const TwoLayerNet& net) {
  if (net.input_dim() != 2) throw InvalidArgument("neuron clouds need input dimension 2");
  if (net.output_dim() != 1) throw InvalidArgument("neuron clouds need a scalar output");
  const Eigen::Index p = net.param_count();
  CsvTable t({"t", "neuron", "x", "y", "sign"});
  for (const Sample& s : traj.samples) {
    if (s.w.size() == 0) throw InvalidArgument("neuron clouds need stored states");
    if (s.w.size() != p && s.w.size() != 2 * p) throw DimensionError("params", p, s.w.size());
    long j = 0;
    for (Eigen::Index off = 0; off < s.w.size(); off += p) {
      const double flip = off == 0 ? 1.0 : -1.0;  // second half of a symmetrized net enters negated
      const Matrix A = net.inner(s.w.segment(off, p));
      const Matrix B = net.outer(s.w.segment(off, p));
      for (Eigen::Index i = 0; i < A.rows(); ++i, ++j) {
        const double b = B(i, 0);
        const double sign = b > 0.0 ? flip : (b < 0.0 ? -flip : 0.0);
        t.add_row({CsvTable::cell(s.t), CsvTable::cell(j), CsvTable::cell(std::abs(b) * A(i, 0)),
                   CsvTable::cell(std::abs(b) * A(i, 1)), CsvTable::cell(sign)});
      }
    }
  }
  return t;
}

TangentOptimum tangent_least_squares(const Model& model, const ParamVector& w0, const Teacher& teacher,
                                     const EvaluationSet& holdout, Eigen::Index samples, Engine& rng) {
  if (model.output_dim() != 1) throw InvalidArgument("tangent least squares needs a scalar output");
  if (samples < 1) throw InvalidArgument("tangent least squares needs samples");
  const Eigen::Index p = model.param_count(), d = model.input_dim();
  constexpr Eigen::Index kChunk = 2048;
  Matrix G = Matrix::Zero(p, p);
  Vector rhs = Vector::Zero(p);
  for (Eigen::Index done = 0; done < samples; done += kChunk) {
    const Eigen::Index b = std::min(kChunk, samples - done);
    const Matrix X = sample_sphere(b, d, rng);
    const auto op = model.linearize(w0, X);
    const Matrix J = op->dense();
    const Vector resid = teacher.labels(X).col(0) - op->outputs().col(0);
    G.selfadjointView<Eigen::Lower>().rankUpdate(J.transpose());
    rhs.noalias() += J.transpose() * resid;
  }
  const double ridge = 1e-10 * G.diagonal().sum() / double(p) + 1e-300;
  G.diagonal().array() += ridge;
  const Vector v = Eigen::LDLT<Matrix, Eigen::Lower>(G).solve(rhs);
  const auto op = model.linearize(w0, holdout.inputs());
  const OutputPoint pred = op->outputs() + op->apply(v);
  TangentOptimum t;
  t.loss = LossSpec::square(holdout).value(pred);
  t.features = p;
  t.samples = samples;
  return t;
}

std::filesystem::path run_teacher_student(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  JobOutput out = run_job(config, JobSpec{}, true);
  const JobResult& r = out.result;
  const std::filesystem::path dir = config.outputs.directory;
  std::filesystem::create_directories(dir);

  json diag;
  diag["seeds"] = seeds_json(r.seeds);
  diag["model"] = out.student.model->describe();
  diag["params"] = out.student.model->param_count();
  diag["kappa0"] = number(r.kappa0);
  if (out.trajectory) {
    const FlowMetadata& m = out.trajectory->meta;
    diag["flow"] = {{"step_rule", to_string(m.step_rule)}, {"integrator", to_string(m.integrator)},
                    {"step", m.step},
                    {"lipschitz_h", number(m.lipschitz_h)},
                    {"horizon", m.horizon ? number(*m.horizon) : json(nullptr)},
                    {"steps", m.steps},
                    {"reason", to_string(m.reason)}};
    if (config.outputs.trajectories) trajectory_table(*out.trajectory).write(dir / "trajectory.csv");
    if (config.outputs.snapshots) write_npy(dir / "states.npy", trajectory_states(*out.trajectory));
    if (config.outputs.neuron_cloud) export_neuron_cloud(*out.trajectory, *out.student.net).write(dir / "neuron_cloud.csv");
  }
  if (out.linearized) {
    if (config.outputs.trajectories) trajectory_table(*out.linearized).write(dir / "trajectory_linearized.csv");
    if (config.outputs.snapshots) write_npy(dir / "states_linearized.npy", trajectory_states(*out.linearized));
    if (out.trajectory && config.mode == TrainingMode::gd) {
      const Vector weights = Vector::Constant(config.data.n_train, 1.0 / double(config.data.n_train));
      try {
        const DeviationReport dev = compare_flows(*out.trajectory, *out.linearized, config.flow.alpha, weights);
        diag["deviation"] = {{"sup_param_gap", dev.sup_param_gap},
                             {"sup_output_gap", dev.sup_output_gap},
                             {"sup_dist_to_init", dev.sup_dist_to_init}};
      } catch (const Error& e) {
        diag["deviation"] = {{"error", e.what()}};
      }
    }
  }

  std::ostringstream s;
  s << "experiment " << config.name << " (seed " << config.seed << ")\n"
    << "model            " << out.student.model->describe() << "\n"
    << "parameters       " << out.student.model->param_count() << "\n"
    << "alpha            " << format_double(r.alpha) << "\n"
    << "status           " << r.status << ", " << r.reason << " after " << r.steps << " steps\n"
    << "train loss       " << format_double(r.train_loss) << "\n"
    << "test loss        " << format_double(r.test_loss) << "\n"
    << "best test loss   " << format_double(r.best_test_loss) << "\n"
    << "rel displacement " << format_double(r.rel_displacement) << "\n"
    << "stability        " << format_double(r.stability) << "\n"
    << "kappa at init    " << format_double(r.kappa0) << "\n";
  if (config.linearized)
    s << "linearized train " << format_double(r.lin_train_loss) << "\n"
      << "linearized test  " << format_double(r.lin_test_loss) << "\n";
  s << "wall time        " << seconds_since(t0) << " s\n";
  write_common(dir, config, results_table({r}), diag, s.str());
  if (r.status != "ok") throw NumericalError("training diverged; partial results in " + dir.string());
  return dir;
}

std::filesystem::path run_sweep(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<JobSpec> jobs = sweep_jobs(config);
  const std::vector<JobResult> results = run_jobs(config, jobs);
  const std::filesystem::path dir = config.outputs.directory;
  std::filesystem::create_directories(dir);
  const CsvTable agg = aggregate_table(results);
  agg.write(dir / "aggregate.csv");

  json diag;
  diag["jobs"] = json::array();
  for (const JobResult& r : results)
    diag["jobs"].push_back({{"value", describe_value(r)},
                            {"scale_rule", r.job.scale_rule ? to_string(*r.job.scale_rule) : ""},
                            {"seeds", seeds_json(r.seeds)},
                            {"status", r.status},
                            {"steps", r.steps},
                            {"reason", r.reason}});

  std::ostringstream s;
  s << "sweep " << config.name << " over " << to_string(config.sweep->variable) << ", " << jobs.size()
    << " jobs (seed " << config.seed << ")\n\n"
    << agg.str() << "\n";
  double job_seconds = 0.0;
  for (const JobResult& r : results) job_seconds += r.seconds;
  s << "wall time " << seconds_since(t0) << " s, summed job time " << job_seconds << " s, "
    << omp_get_max_threads() << " threads\n";
  write_common(dir, config, results_table(results), diag, s.str());
  return dir;
}

std::filesystem::path sweep_width(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  if (!c.sweep) throw ConfigError("/sweep", "a width sweep needs a sweep section with a grid of widths");
  if (c.sweep->variable != SweepVariable::width)
    throw ConfigError("/sweep/variable", "a width sweep needs variable m");
  if (c.sweep->scale_rules.empty()) c.sweep->scale_rules = {ScaleRule::inv_width, ScaleRule::inv_sqrt_width};
  return run_sweep(c);
}

std::filesystem::path diagnose(const ExperimentConfig& config, bool print_csv) {
  const auto t0 = std::chrono::steady_clock::now();
  const SeedChain seeds = seed_chain(config.seed, 0);
  Engine teacher_rng(seeds.teacher);
  const Teacher teacher = make_teacher(config.teacher, config.data.input_dim, teacher_rng);
  const Dataset data = make_dataset(config, teacher, seeds);
  const Student st = make_student(config, data.train.inputs(), seeds);
  const double alpha = config.flow.alpha;
  const ScaledModel scaled(st.model, alpha);
  const LossSpec loss = LossSpec::square(data.train);

  NormOptions no = config.norms;
  no.seed = seeds.flow;
  const NormEstimates ne = estimate_norms(scaled, st.w0, data.train, no);
  double k = kNaN;
  std::string kappa_note = "ok";
  try {
    k = kappa(ne, scaled, st.w0, loss, data.train);
  } catch (const NumericalError& e) {
    kappa_note = e.what();
  }

  CsvTable table({"quantity", "value"});
  auto add = [&](const std::string& q, double v) { table.add_row({q, CsvTable::cell(v)}); };
  add("alpha", alpha);
  add("params", double(st.model->param_count()));
  add("points", double(data.train.size()));
  add("h0_norm", ne.h0_norm);
  add("residual0", loss.distance_to_target(scaled.evaluate(st.w0, data.train.inputs())));
  add("dh_norm", ne.dh_norm);
  add("d2h_norm", ne.d2h_norm);
  add("lip_h", ne.lip_h);
  add("lip_dh", ne.lip_dh);
  add("sigma_min", ne.sigma_min);
  add("sigma_min_nonzero", ne.sigma_min_nonzero);
  add("rank", double(ne.rank));
  add("kappa", k);

  json diag;
  diag["seeds"] = seeds_json(seeds);
  diag["model"] = scaled.describe();
  diag["dh_converged"] = ne.dh_converged;
  diag["kappa_status"] = kappa_note;
  diag["radius"] = ne.radius;
  diag["lipschitz_samples"] = ne.samples;
  diag["d2_directions"] = ne.d2_directions;
  for (const auto& row : table.rows()) diag["estimates"][row[0]] = row[1];

  const std::filesystem::path dir = config.outputs.directory;
  std::filesystem::create_directories(dir);
  const double entries = double(data.train.size()) * double(st.model->param_count());
  if (entries <= kMaxDenseEntries) {
    const Spectrum sp = kernel_spectrum(tangent_kernel(scaled, st.w0, data.train));
    CsvTable spec({"index", "eigenvalue", "normalized_eigenvalue"});
    for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
      spec.add_row({CsvTable::cell(long(i)), CsvTable::cell(sp.eigenvalues(i)), CsvTable::cell(sp.normalized(i))});
    spec.write(dir / "spectrum.csv");
    diag["kernel_rank"] = sp.rank;
  }

  std::ostringstream s;
  s << "diagnostics for " << config.name << " at initialization (seed " << config.seed << ")\n"
    << table.str() << "kappa: " << kappa_note << "\nwall time " << seconds_since(t0) << " s\n";
  write_common(dir, config, table, diag, s.str());
  if (print_csv) std::cout << table.str();
  return dir;
}

namespace {

ArcCosineKernelSpec arccos_spec(const KernelStudySpec& k) {
  ArcCosineKernelSpec spec;
  spec.dim = k.input_dim;
  spec.outer_moment = k.outer_moment;
  spec.inner_moment = k.inner_moment ? *k.inner_moment : double(k.input_dim);
  spec.validate();
  return spec;
}

}  // namespace

CsvTable kernel_section_table(const ExperimentConfig& config) {
  const KernelStudySpec& k = config.kernel;
  const ArcCosineKernelSpec spec = arccos_spec(k);
  const KernelSection sec = kernel_section(spec, phi_grid(k.grid_points), k.width, k.seeds, config.seed);
  std::vector<std::string> header = {"phi", "K_limit", "K_a", "K_b"};
  for (int s = 0; s < k.seeds; ++s) header.push_back("seed_" + std::to_string(s));
  CsvTable t(header);
  for (std::size_t i = 0; i < sec.phi.size(); ++i) {
    std::vector<std::string> row = {CsvTable::cell(sec.phi[i]), CsvTable::cell(sec.limit[i].total()),
                                    CsvTable::cell(sec.limit[i].a), CsvTable::cell(sec.limit[i].b)};
    for (int s = 0; s < k.seeds; ++s) row.push_back(CsvTable::cell(sec.realizations[s][i]));
    t.add_row(std::move(row));
  }
  return t;
}

CsvTable kernel_spectrum_table(const ExperimentConfig& config) {
  const KernelStudySpec& k = config.kernel;
  const ArcCosineKernelSpec spec = arccos_spec(k);
  Engine data_rng = make_engine(config.seed, {stream::train, 0});
  const Matrix X = sample_sphere(k.spectrum_points, k.input_dim, data_rng);
  TwoLayerConfig tc;
  tc.width = k.width;
  tc.input_dim = k.input_dim;
  tc.output_dim = 1;
  tc.activation.kind = compute::ActivationKind::relu;
  tc.scale_rule = ScaleRule::inv_sqrt_width;
  const TwoLayerNet net(tc);
  Engine init_rng = make_engine(config.seed, {stream::init, 0});
  Matrix A;
  Vector b;
  draw_features(spec, k.width, init_rng, A, b);
  const ParamVector w = net.pack(A, Matrix(b));
  const Spectrum sp = kernel_spectrum(tangent_kernel(net, w, EvaluationSet(X, std::nullopt, Weighting::unit)));
  CsvTable t({"index", "eigenvalue", "normalized_eigenvalue"});
  for (Eigen::Index i = 0; i < sp.eigenvalues.size(); ++i)
    t.add_row({CsvTable::cell(long(i)), CsvTable::cell(sp.eigenvalues(i)), CsvTable::cell(sp.normalized(i))});
  return t;
}

std::filesystem::path kernel_study(const ExperimentConfig& config, bool section) {
  const auto t0 = std::chrono::steady_clock::now();
  const CsvTable table = section ? kernel_section_table(config) : kernel_spectrum_table(config);
  const std::filesystem::path dir = config.outputs.directory;
  std::filesystem::create_directories(dir);
  table.write(dir / (section ? "kernel_section.csv" : "kernel_spectrum.csv"));

  json diag;
  diag["study"] = section ? "section" : "spectrum";
  diag["width"] = config.kernel.width;
  diag["input_dim"] = config.kernel.input_dim;
  std::ostringstream s;
  s << "kernel " << (section ? "section" : "spectrum") << " for " << config.name << ", width "
    << config.kernel.width << ", d = " << config.kernel.input_dim << "\n";
  if (section) {
    // Sup over the grid of |seed mean - limit|.
    double sup = 0.0;
    for (const auto& row : table.rows()) {
      double mean = 0.0;
      for (std::size_t c = 4; c < row.size(); ++c) mean += std::stod(row[c]);
      if (row.size() > 4) sup = std::max(sup, std::abs(mean / double(row.size() - 4) - std::stod(row[1])));
    }
    diag["seeds"] = config.kernel.seeds;
    diag["sup_error_of_mean"] = number(sup);
    s << "sup error of the seed mean " << format_double(sup) << "\n";
  } else {
    diag["points"] = config.kernel.spectrum_points;
    s << "leading eigenvalue " << table.rows().front()[1] << "\n";
  }
  s << "wall time " << seconds_since(t0) << " s\n";
  write_common(dir, config, table, diag, s.str());
  return dir;
}

}  // namespace lazyflow
