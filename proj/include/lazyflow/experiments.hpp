#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lazyflow/config.hpp"
#include "lazyflow/flow.hpp"
#include "lazyflow/io.hpp"
#include "lazyflow/two_layer.hpp"

namespace lazyflow {

/// ReLU teacher f*(x) = sum_j b_j relu(a_j . x) with ||a_j|| |b_j| = 1.
struct Teacher {
  std::shared_ptr<const TwoLayerNet> net;
  ParamVector w;

  Matrix labels(const Matrix& inputs) const { return net->evaluate(w, inputs); }
};

Teacher make_teacher(const TeacherSpec& spec, Eigen::Index input_dim, Engine& rng);

struct Dataset {
  EvaluationSet train;
  EvaluationSet test;
};

/// Per-run seeds, all derived from the master seed and the repeat index so that every
/// point of a sweep grid sees the same teacher, data and base initialization.
struct SeedChain {
  std::uint64_t master = 0;
  int repeat = 0;
  std::uint64_t teacher = 0, train = 0, test = 0, init = 0, flow = 0;
};

SeedChain seed_chain(std::uint64_t master, int repeat);

/// Training targets come from the teacher or from explicit values in the config; test
/// targets always from the teacher.
Dataset make_dataset(const ExperimentConfig& config, const Teacher& teacher, const SeedChain& seeds);

struct Student {
  /// The two-layer network whose parameters the model exposes (one half of a
  /// symmetrized student).
  std::shared_ptr<const TwoLayerNet> net;
  ModelPtr model;  // with symmetrized / centered / scaled wrappers applied
  ParamVector w0;
  /// Output multiplier of the model relative to `net` (from a scaled wrapper).
  double output_scale = 1.0;
};

Student make_student(const ExperimentConfig& config, const Matrix& train_inputs, const SeedChain& seeds);

/// One (grid point, scale rule, repeat) configuration of a sweep.
struct JobSpec {
  std::optional<SweepVariable> variable;
  double value = 0.0;
  std::optional<ScaleRule> scale_rule;
  int repeat = 0;
};

/// The configuration with the job's sweep value applied.
ExperimentConfig job_config(const ExperimentConfig& base, const JobSpec& job);

struct JobResult {
  JobSpec job;
  Eigen::Index width = 0;
  double alpha = 1.0;
  double tau = 0.0;  // NaN for Xavier initialization
  std::string status = "ok";  // "ok" or "diverged"
  long steps = 0;
  std::string reason;
  bool converged = false;  // a gradient or loss stopping criterion met before the step budget
  double train_loss = 0.0;
  double test_loss = 0.0;
  double best_test_loss = 0.0;
  double rel_displacement = 0.0;  // ||w_T - w0|| / ||w0||
  double stability = 0.0;         // NaN unless ReLU
  double kappa0 = 0.0;            // NaN unless enabled
  double lin_train_loss = 0.0;    // NaN unless a linearized run was requested
  double lin_test_loss = 0.0;
  double seconds = 0.0;           // wall time; never written to results.csv
  SeedChain seeds;
};

struct JobOutput {
  JobResult result;
  Student student;
  std::optional<Trajectory> trajectory;
  std::optional<Trajectory> linearized;
};

/// Trains one student. With keep_trajectories the recorded states are returned.
JobOutput run_job(const ExperimentConfig& base, const JobSpec& job, bool keep_trajectories = false);

/// Runs every job; OpenMP over jobs, results in job order.
std::vector<JobResult> run_jobs(const ExperimentConfig& base, const std::vector<JobSpec>& jobs);

/// Jobs in grid-major, then scale-rule, then repeat order.
std::vector<JobSpec> sweep_jobs(const ExperimentConfig& config);

/// Column order: variable, value, scale_rule, repeat, width, alpha, tau, status, steps,
/// reason, converged, train_loss, test_loss, best_test_loss, rel_displacement,
/// stability, kappa0, lin_train_loss, lin_test_loss.
CsvTable results_table(const std::vector<JobResult>& results);

/// Mean and sample standard deviation over repeats per (value, scale_rule).
CsvTable aggregate_table(const std::vector<JobResult>& results);

/// Positions |b_j| a_j of every neuron at every stored sample, with the sign of its
/// contribution to the output. Columns t, neuron, x, y, sign. Needs d = 2, k = 1.
CsvTable export_neuron_cloud(const Trajectory& traj, const TwoLayerNet& net);

/// Population square loss of the best predictor h(w0) + Dh(w0) v: least squares on
/// `samples` fresh sphere points labelled by the teacher, evaluated on `holdout`.
/// A symmetrized student at a symmetric start can pass its centered half network, which
/// spans the same tangent space with half the parameters.
struct TangentOptimum {
  double loss = 0.0;
  Eigen::Index features = 0;
  Eigen::Index samples = 0;
};
TangentOptimum tangent_least_squares(const Model& model, const ParamVector& w0,
                                     const Teacher& teacher, const EvaluationSet& holdout,
                                     Eigen::Index samples, Engine& rng);

// Drivers behind the CLI. Each writes config-echo.json, results.csv, diagnostics.json
// and summary.txt into config.outputs.directory and returns that directory.
// run_teacher_student throws NumericalError after writing its outputs if training diverged.

std::filesystem::path run_teacher_student(const ExperimentConfig& config);
std::filesystem::path run_sweep(const ExperimentConfig& config);
/// Width sweep comparing scale rules (1/m and 1/sqrt(m) unless the config lists others).
std::filesystem::path sweep_width(const ExperimentConfig& config);
/// Norm estimates, kappa and the tangent-kernel spectrum at initialization.
std::filesystem::path diagnose(const ExperimentConfig& config, bool print_csv = false);

/// phi, K_limit, K_a, K_b, then K_m for each seed.
CsvTable kernel_section_table(const ExperimentConfig& config);
/// index, eigenvalue, normalized_eigenvalue of a random-init ReLU tangent kernel.
CsvTable kernel_spectrum_table(const ExperimentConfig& config);
std::filesystem::path kernel_study(const ExperimentConfig& config, bool section);

}  // namespace lazyflow
