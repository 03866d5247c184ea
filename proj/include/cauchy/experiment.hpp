#pragma once

#include "cauchy/errors.hpp"
#include "cauchy/mann.hpp"
#include "cauchy/noise.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cauchy {

enum class ExperimentKind { Rectangle, Annulus, AnnulusNoisy, OracleRates, SemiConvergence };

const char* to_string(ExperimentKind k) noexcept;
/// Throws Error(ConfigError) for unknown names.
ExperimentKind parse_experiment_kind(std::string_view name);

enum class ScheduleKind { Identity, Harmonic, Constant };
enum class StopKind { SuccessiveDiff, Discrepancy, MaxIter };

/// Everything an experiment run depends on. Defaults: harmonic averaging,
/// zero start, successive-difference stop 1e-3 in boundary L2, restart every
/// 50 steps for the restart variant, snapshots at k = 5, 10, 25, 50.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Rectangle;
  int n1 = 256;
  int n2 = 193;
  ScheduleKind schedule = ScheduleKind::Harmonic;
  double schedule_constant = 0.5;
  StopKind stop = StopKind::SuccessiveDiff;
  double tol = 1e-3;
  ResidualNorm stop_norm = ResidualNorm::BoundaryL2;
  double mu = 3.0;
  int max_iter = 500;
  int restart_every = 50;  ///< 0 skips the restart variant
  std::vector<int> snapshots{5, 10, 25, 50};
  bool track_star = true;

  double noise_level = 0.05;
  NoiseModel noise_model = NoiseModel::BandLimited;
  int noise_band = 20;
  bool smooth = true;
  double smoothing_regularity = 2.0;
  std::uint64_t seed = 1;

  int modes = 48;
  double strip_width = 0.25;
  std::vector<double> p_values{1.0, 2.0};
  std::vector<double> epsilons{1e-2, 1e-3, 1e-4, 1e-5};
  int curve_max_k = 10'000;
  double psi_decay = 1.0;  ///< psi_j = j^{-decay}
  double source_p = 1.0;   ///< semi-convergence study
  int semi_max_k = 200;

  bool operator==(const ExperimentConfig&) const = default;

  SegmentingSchedule make_schedule() const;
};

/// Default configuration of one experiment (grid sizes and stopping differ).
ExperimentConfig default_config(ExperimentKind kind);

/// Flat `key = value` text, `#` starts a comment. Unknown keys, malformed
/// values and a mismatching `experiment` line raise Error(ConfigError) with
/// the offending line number. Keys not given keep the defaults of the
/// experiment named in the file, or of `expected` when given.
ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> expected = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& file, std::optional<ExperimentKind> expected = std::nullopt);
/// Every key, one per line, in a fixed order; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& cfg);

/// A Cauchy problem with known solution: data on Gamma1 plus the exact
/// Neumann and Dirichlet traces on Gamma2.
struct BenchmarkProblem {
  Grid grid;
  CauchyData data;
  BoundaryFunction exact_flux;
  BoundaryFunction exact_trace;
};

/// Unit-width rectangle of height 3/4, f = sin(pi x), g = 0, u = 0 on the
/// vertical sides; u = cosh(pi y) sin(pi x).
BenchmarkProblem rectangle_benchmark(int n1, int n2);
/// Annulus 1 < r < 3, f = sin t - sin(2t)/2, g = 0;
/// u = (r + 1/r) sin(t)/2 - (r^2 + r^-2) sin(2t)/4.
BenchmarkProblem annulus_benchmark(int n1, int n2);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  std::vector<std::filesystem::path> files;  ///< all outputs, manifest last
  std::vector<CheckResult> checks;
  std::vector<std::string> warnings;
  double wall_seconds = 0.0;

  bool all_passed() const noexcept;
};

/// Runs the configured experiment, writing CSV files, a plotting script and
/// manifest.json into `out_dir` (created if needed).
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Command-line exit statuses.
enum class ExitStatus : int { Ok = 0, ConfigError = 2, SolverFailure = 3, CheckFailure = 4 };
/// Invalid input (configuration, domain, grid, argument) maps to ConfigError;
/// everything raised while solving maps to SolverFailure.
ExitStatus exit_status_for(ErrorCode code) noexcept;

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

}  // namespace cauchy
