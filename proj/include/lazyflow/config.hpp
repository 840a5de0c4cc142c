#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lazyflow/compute.hpp"
#include "lazyflow/diagnostics.hpp"
#include "lazyflow/flow.hpp"
#include "lazyflow/two_layer.hpp"

namespace lazyflow {

struct TeacherSpec {
  Eigen::Index neurons = 3;
};

struct DataSpec {
  Eigen::Index input_dim = 2;
  Eigen::Index n_train = 100;
  Eigen::Index n_test = 2000;
};

enum class InitDist { normal, xavier };

struct StudentSpec {
  Eigen::Index width = 50;  // total number of neurons, both halves when symmetrized
  compute::Activation activation{};
  ScaleRule scale_rule = ScaleRule::constant;
  double scale_constant = 1.0;
  InitDist init = InitDist::xavier;
  double init_std = 1.0;  // tau, used by InitDist::normal
  bool symmetrized = false;
  bool centered = false;
  std::optional<double> scaled;  // output multiplier applied by a scaled wrapper
  compute::Backend backend = compute::Backend::omp;
};

enum class TargetSource { teacher, explicit_values };
enum class TrainingMode { gd, sgd };
enum class SweepVariable { tau, alpha, width };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& s);
std::string to_string(ScaleRule r);

struct SweepSpec {
  SweepVariable variable = SweepVariable::tau;
  std::vector<double> grid;
  int repeats = 1;
  /// Width sweeps compare these scale rules; empty means the student's own rule.
  std::vector<ScaleRule> scale_rules;
};

struct KernelStudySpec {
  Eigen::Index input_dim = 10;
  Eigen::Index width = 1000;
  int seeds = 10;
  int grid_points = 64;
  double outer_moment = 1.0;
  std::optional<double> inner_moment;  // defaults to input_dim
  Eigen::Index spectrum_points = 500;
};

struct OutputSpec {
  std::filesystem::path directory = "lazyflow-out";
  bool trajectories = true;
  bool snapshots = false;
  bool neuron_cloud = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  TeacherSpec teacher;
  DataSpec data;
  StudentSpec student;
  TargetSource target_source = TargetSource::teacher;
  std::optional<Matrix> explicit_targets;  // n_train x 1
  FlowConfig flow;
  TrainingMode mode = TrainingMode::gd;
  Eigen::Index batch_size = 200;
  bool linearized = false;  // also train the tangent model from the same start
  std::optional<SweepSpec> sweep;
  NormOptions norms;
  bool kappa = true;
  KernelStudySpec kernel;
  OutputSpec outputs;
};

/// Parses and validates a configuration. Violations raise ConfigError with a field path
/// such as "/flow/step_factor".
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// The configuration with all defaults filled in.
nlohmann::json to_json(const ExperimentConfig& c);

}  // namespace lazyflow
