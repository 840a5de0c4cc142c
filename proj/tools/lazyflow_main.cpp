// lazyflow command line: run, sweep, diagnose and kernel studies from a JSON config.

#include <CLI11.hpp>

#include <iostream>

#include "lazyflow/config.hpp"
#include "lazyflow/errors.hpp"
#include "lazyflow/experiments.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kNumericalError = 2;

lazyflow::ExperimentConfig load(const std::string& path, const std::string& out) {
  lazyflow::ExperimentConfig c = lazyflow::load_config(path);
  if (!out.empty()) c.outputs.directory = out;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lazy training dynamics: scaled models, linearizations and tangent kernels"};
  app.require_subcommand(1);
  std::string config_path, out_dir, var;
  bool csv = false, section = false, spectrum = false;

  auto* run = app.add_subcommand("run", "Train one student on its teacher");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Override outputs.directory");

  auto* sweep = app.add_subcommand("sweep", "Sweep tau, alpha or the width m over a grid");
  sweep->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--var", var, "Sweep variable")->required()->check(CLI::IsMember({"tau", "alpha", "m"}));
  sweep->add_option("--out", out_dir, "Override outputs.directory");

  auto* diag = app.add_subcommand("diagnose", "Norms, kappa and kernel spectrum at initialization");
  diag->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  diag->add_flag("--csv", csv, "Also print the estimates as CSV on stdout");
  diag->add_option("--out", out_dir, "Override outputs.directory");

  auto* kern = app.add_subcommand("kernel", "Random-feature tangent kernels");
  kern->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  auto* sec = kern->add_flag("--section", section, "K_m against its limit along a great circle");
  auto* spe = kern->add_flag("--spectrum", spectrum, "Eigenvalues of the kernel matrix on sphere samples");
  sec->excludes(spe);
  kern->add_option("--out", out_dir, "Override outputs.directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    lazyflow::ExperimentConfig c = load(config_path, out_dir);
    std::filesystem::path dir;
    if (*run) {
      dir = lazyflow::run_teacher_student(c);
    } else if (*sweep) {
      if (!c.sweep) throw lazyflow::ConfigError("/sweep", "the config has no sweep section");
      c.sweep->variable = lazyflow::parse_sweep_variable(var);
      dir = c.sweep->variable == lazyflow::SweepVariable::width ? lazyflow::sweep_width(c) : lazyflow::run_sweep(c);
    } else if (*diag) {
      dir = lazyflow::diagnose(c, csv);
    } else {
      if (!section && !spectrum) throw lazyflow::ConfigError("kernel", "choose --section or --spectrum");
      dir = lazyflow::kernel_study(c, section);
    }
    std::cerr << "wrote " << dir.string() << "\n";
    return 0;
  } catch (const lazyflow::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const lazyflow::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
