#pragma once

#include "cauchy/affine_operator.hpp"

#include <Eigen/Core>

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cauchy {

/// Diagonal d_k = a_{k+1,k+1} of a lower-triangular segmenting matrix. The
/// off-diagonal entries follow from a_{k+1,j} = (1 - d_k) a_{k,j}, so the
/// averaged iterate obeys v_{k+1} = (1 - d_k) v_k + d_k T(v_k).
class SegmentingSchedule {
 public:
  enum class Kind { Identity, Harmonic, Constant, Custom };

  /// d_k = 1: plain successive substitution.
  static SegmentingSchedule identity();
  /// d_k = 1/(k+1): running mean of all raw iterates.
  static SegmentingSchedule harmonic();
  /// d_k = c with c in [0, 1].
  static SegmentingSchedule constant(double c);
  /// Values outside [0, 1] are rejected when evaluated.
  static SegmentingSchedule custom(std::function<double(int)> d, std::string label = "custom");

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  /// Weight for the step from index k to k+1, k >= 1.
  double d(int k) const;
  /// Whether sum_k d_k (1 - d_k) diverges; nullopt for custom schedules.
  std::optional<bool> divergent_sum() const noexcept;

 private:
  SegmentingSchedule(Kind kind, std::string name, double c, std::function<double(int)> f)
      : kind_(kind), name_(std::move(name)), c_(c), f_(std::move(f)) {}
  Kind kind_;
  std::string name_;
  double c_ = 1.0;
  std::function<double(int)> f_;
};

/// The leading n x n block of the segmenting matrix (row k holds a_{k,j}).
Eigen::MatrixXd segmenting_matrix(const SegmentingSchedule& schedule, int n);

enum class ResidualNorm { Star, BoundaryL2 };

struct SuccessiveDiff {
  double tol = 1e-3;
  ResidualNorm norm = ResidualNorm::BoundaryL2;
};
struct Discrepancy {
  double mu = 3.0;
  double epsilon = 0.0;
  ResidualNorm norm = ResidualNorm::Star;
};
struct MaxIterOnly {};
using StopRule = std::variant<SuccessiveDiff, Discrepancy, MaxIterOnly>;

struct IterationConfig {
  SegmentingSchedule schedule = SegmentingSchedule::harmonic();
  int max_iter = 500;
  StopRule stop = SuccessiveDiff{};
  std::optional<int> restart_every;
  /// Store full iterates every this many steps (0: only snapshots and the final one).
  int record_every = 0;
  std::vector<int> snapshots;
  /// Star norms cost an extra solve per evaluation on the PDE operator.
  bool track_star = true;

  /// Throws Error(InvalidArgument) for inconsistent settings; returns
  /// warnings for admissible but weak ones (mu <= 2).
  std::vector<std::string> validate() const;
};

struct StepRecord {
  int k = 0;
  double residual_star = std::numeric_limits<double>::quiet_NaN();
  double residual_l2 = 0.0;
  double diff_l2 = std::numeric_limits<double>::quiet_NaN();  ///< |v_k - v_{k-1}|, NaN at k = 1
  double err_star = std::numeric_limits<double>::quiet_NaN();
  double err_l2 = std::numeric_limits<double>::quiet_NaN();
  bool restart = false;  ///< averaging was reset after this step
};

struct Snapshot {
  int k;
  Eigen::VectorXd raw;       ///< phi_k = T(v_{k-1}) (phi_1 for k = 1)
  Eigen::VectorXd averaged;  ///< v_k
};

enum class StopReason { SuccessiveDiff, Discrepancy, MaxIterations };
const char* to_string(StopReason r) noexcept;

struct IterationRecord {
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;
  StopReason stop_reason = StopReason::MaxIterations;
  int stop_index = 0;
  Eigen::VectorXd solution;  ///< averaged iterate at the stop index
  std::vector<std::string> warnings;

  bool stopped_by_rule() const noexcept { return stop_reason != StopReason::MaxIterations; }
  const Snapshot* snapshot(int k) const noexcept;
};

/// Runs v_1 = initial, v_{k+1} = (1 - d) v_k + d T(v_k). Step k evaluates
/// T(v_k), records r_k = T(v_k) - v_k and stops at the first k satisfying the
/// rule; `solution` is v_k. With restart_every = m, after every m-th step the
/// schedule index returns to 1 and v_{k+1} = T(v_k), the last raw iterate.
IterationRecord mann_mazya_run(const AffineOperator& op, const Eigen::VectorXd& initial, const IterationConfig& cfg,
                               const std::optional<Eigen::VectorXd>& reference = std::nullopt);

/// Same loop; requires cfg.restart_every.
IterationRecord restart_run(const AffineOperator& op, const Eigen::VectorXd& initial, const IterationConfig& cfg,
                            const std::optional<Eigen::VectorXd>& reference = std::nullopt);

/// True when the residual already meets mu * epsilon (ties stop).
bool discrepancy_reached(double residual, double mu, double epsilon) noexcept;
/// First recorded k with residual <= mu * epsilon.
std::optional<int> discrepancy_index(const IterationRecord& record, double mu, double epsilon,
                                     ResidualNorm norm = ResidualNorm::Star);

/// k-th averaged iterate of the scheme applied to T_l + shift from the given
/// start, i.e. R_k(shift). k = 1 returns the start.
Eigen::VectorXd regularized_reconstruct(const AffineOperator& linear, const Eigen::VectorXd& shift,
                                        const Eigen::VectorXd& start, int k,
                                        const SegmentingSchedule& schedule = SegmentingSchedule::harmonic());

/// Explicit O(k)-memory form: v_k = sum_j a_{k,j} phi_j with phi_{j+1} = T(v_j).
/// Returns v_1..v_n as columns.
Eigen::MatrixXd matrix_form_iterates(const AffineOperator& op, const Eigen::VectorXd& initial,
                                     const SegmentingSchedule& schedule, int n);

/// CSV with header k,residual_star,residual_l2,diff_l2,err_star,err_l2,restart_flag.
void write_csv(std::ostream& out, const IterationRecord& record);

}  // namespace cauchy
