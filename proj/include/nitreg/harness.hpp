#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nitreg/nit_solver.hpp"

namespace nitreg {

enum class ProblemKind { Integral1D, Elliptic2D };
enum class ExactKind { Spikes1D, TwoInclusions2D, Zero, File };

const char* to_string(ProblemKind k);
const char* to_string(ExactKind k);

/// Everything needed to reproduce one run. Defaults are the sparse-penalty setup of
/// the 1-D integral-equation experiment.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 20140601;
  std::string out_dir = "out";

  ProblemKind problem = ProblemKind::Integral1D;
  int n = 400;
  int nx = 40;
  int ny = 40;
  ExactKind exact = ExactKind::Spikes1D;
  std::string exact_file;

  double delta = 0.5e-3;
  double r = 2.0;
  bool exact_linear_inner = false;
  StoppingRule stop{StopKind::Discrepancy, 1.02, 200, 1e-10};
  AlphaSchedule schedule{ScheduleKind::Geometric, 0.5, 0.5};
  Penaltyd penalty{PenaltyKind::L2L1, 0.01, 1.0, 0.0, 1e-6};
  InnerSettings inner;

  std::vector<double> study_deltas{4e-3, 2e-3, 1e-3, 5e-4};
  bool study_parallel = true;

  void validate() const;
  /// Flat (section.key, value) listing of every field, in schema order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Reads the INI-style config (sections [experiment], [problem], [noise], [stopping],
/// [schedule], [penalty], [method], [inner], [study]). Unknown sections or keys are
/// rejected; omitted keys keep their defaults.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Built-in configurations of the two published experiments.
ExperimentConfig example51_config(PenaltyKind penalty);
ExperimentConfig example52_config(PenaltyKind penalty, double mu = 0.01);

struct Problem {
  std::unique_ptr<ForwardOp> op;
  GridFnd x_dagger;
  GridFnd y_exact;
};

Problem make_problem(const ExperimentConfig& config);

/// Piecewise-constant spikes of heights 0.5, 1, 0.7 on [0.292, 0.300], [0.500, 0.508], [0.700, 0.708].
GridFnd spikes_1d(const SpacePtrd& space);
/// 1 on the disc of radius 0.2 at (0.3, 0.7), 0.5 on [0.6, 0.8] x [0.2, 0.5], 0 elsewhere.
GridFnd two_inclusions_2d(const SpacePtrd& space);

/// y + delta * e / ||e|| for a seeded standard Gaussian e, so that ||y_delta - y|| = delta.
GridFnd add_noise(const GridFnd& y, double delta, std::uint64_t seed);

struct ExperimentResult {
  RunReport report;
  GridFnd x_dagger;
  double l2_error = 0.0;
  double theta_value = 0.0;
  double eta_hat = 0.0;
  /// Diagnostics that do not stop the run, e.g. tau below (1 + eta_hat) / (1 - eta_hat).
  std::vector<std::string> warnings;
  std::vector<std::string> files;
};

/// Runs the configured experiment. Files are written only when `write_files` is set.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

struct StudyRow {
  double delta = 0.0;
  bool ok = false;
  std::string message;
  int n_delta = 0;
  double residual = 0.0;
  double error = 0.0;
  double theta_value = 0.0;
  double bregman = 0.0;
  Termination terminated_by = Termination::MaxOuter;
};

/// One run per noise level, same noise seed; rows sorted by delta descending.
std::vector<StudyRow> convergence_study(const ExperimentConfig& config, std::vector<double> deltas);

// CSV / text emission. All numbers use round-trip precision so that identical runs
// give byte-identical files.

void write_gridfn_csv(std::ostream& out, const GridFnd& f);
GridFnd read_gridfn_csv(std::istream& in);
void write_iterations_csv(std::ostream& out, const RunReport& report);
void write_summary(std::ostream& out, const ExperimentResult& result);
void write_study_csv(std::ostream& out, const std::vector<StudyRow>& rows);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small-instance invariant and oracle checks used by the `check` subcommand.
std::vector<CheckResult> run_checks();

}  // namespace nitreg
