#pragma once

#include "cauchy/affine_operator.hpp"
#include "cauchy/mann.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <numbers>
#include <vector>

namespace cauchy {

/// Sine coefficients (phi_j), j = 1..N, of a trace phi(y) = sum phi_j sin(j y)
/// on [-pi, pi]. Entry 0 holds mode 1.
struct FourierTrace {
  Eigen::VectorXd coefficients;
  Eigen::Index modes() const noexcept { return coefficients.size(); }
};

/// sqrt(sum_j (1 + j^2)^s phi_j^2).
double sobolev_norm(const FourierTrace& phi, double s);

enum class ModeNorm { SobolevMinusHalf, L2 };

/// Per-mode eigenvalue tanh(j w)^2 and its gap 1 - tanh(j w)^2 =
/// 4 e^{-2jw} / (1 + e^{-2jw})^2, both evaluated without cancellation.
double strip_eigenvalue(int j, double width) noexcept;
double strip_gap(int j, double width) noexcept;
/// ln(e / gap) = 1 + 2 ln cosh(j w), accurate for large j.
double log_e_over_gap(int j, double width) noexcept;

/// The Cauchy fixed-point operator on a strip of the given width between the
/// data side and the unknown side, with u = 0 on the lateral sides, written
/// in the sine basis. Each mode is an independent affine map
///   (T phi)_j = lambda_j phi_j + j tanh sech a_j + sech b_j,
/// where a_j, b_j are the Dirichlet data and the derivative towards the
/// interior on the data side. The default width 2 pi is the square [-pi, pi]^2.
class SpectralOperator final : public AffineOperator {
 public:
  static constexpr double kSquareWidth = 2.0 * std::numbers::pi;

  static SpectralOperator from_cauchy_data(const FourierTrace& dirichlet, const FourierTrace& derivative,
                                           double width = kSquareWidth, ModeNorm norm = ModeNorm::SobolevMinusHalf);
  /// Operator whose affine term makes `fixed_point` the exact solution.
  static SpectralOperator from_fixed_point(const FourierTrace& fixed_point, double width = kSquareWidth,
                                           ModeNorm norm = ModeNorm::SobolevMinusHalf);

  /// Same spectrum, different affine term (noisy data).
  SpectralOperator with_affine_term(Eigen::VectorXd z) const;

  FourierTrace apply_T(const FourierTrace& phi) const;
  FourierTrace exact_fixed_point() const;

  Eigen::Index dimension() const override { return lambda_.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd apply_linear(const Eigen::VectorXd& v) const override;
  const Eigen::VectorXd& affine_term() const override { return z_; }
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const override;
  double diagnostic_norm(const Eigen::VectorXd& v) const override { return v.norm(); }

  const Eigen::VectorXd& eigenvalues() const noexcept { return lambda_; }
  const Eigen::VectorXd& gaps() const noexcept { return gap_; }
  const Eigen::VectorXd& norm_weights() const noexcept { return weight_; }
  double width() const noexcept { return width_; }
  ModeNorm norm_kind() const noexcept { return norm_; }

 private:
  SpectralOperator(int modes, double width, ModeNorm norm);
  void check(const Eigen::VectorXd& v) const;

  double width_;
  ModeNorm norm_;
  Eigen::VectorXd lambda_;
  Eigen::VectorXd gap_;
  Eigen::VectorXd weight_;
  Eigen::VectorXd z_;
};

/// f(lambda) = (ln(e / lambda))^{-p} = (1 - ln lambda)^{-p}, f(0) = 0.
double log_source_filter(double lambda, double p);

/// Coefficients f(1 - lambda_j) psi_j: the start-error of a source condition.
/// p = 0 returns psi unchanged (no smoothness assumed).
FourierTrace source_element(double p, const FourierTrace& psi, const SpectralOperator& op);

/// z + delta with delta Gaussian per mode, rescaled so |delta| = epsilon in
/// the operator's norm.
Eigen::VectorXd perturb_affine_term(const SpectralOperator& op, double epsilon, std::uint64_t seed);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

/// Least squares y = slope x + intercept. With five or more points the two
/// extreme x values are dropped before fitting.
LinearFit fit_line(std::vector<double> x, std::vector<double> y);

struct RateConfig {
  double p = 1.0;
  FourierTrace psi;
  double width = 0.25;
  std::vector<double> epsilons;
  double mu = 3.0;
  std::uint64_t seed = 1;
  SegmentingSchedule schedule = SegmentingSchedule::identity();
  int max_iter = 2'000'000;
  /// Exact-data error curve is evaluated up to this k.
  int curve_max_k = 10'000;
  ModeNorm norm = ModeNorm::SobolevMinusHalf;
};

struct RateRow {
  double epsilon;
  int stop_index;
  double error;
  double residual;
  /// error / (-ln sqrt(eps))^{-p}
  double error_ratio;
  /// k (ln k)^p
  double work;
};

struct CurvePoint {
  int k;
  double error;
  /// error * (ln k)^p
  double scaled;
};

struct RateTable {
  std::vector<RateRow> rows;
  std::vector<CurvePoint> exact_curve;
  LinearFit stop_slope;  ///< log k vs log eps
  LinearFit work_slope;  ///< log(k (ln k)^p) vs log(1/eps)
  double initial_error = 0.0;
};

/// Start phi_1 = 0 and fixed point = source_element(p, psi): runs the scheme on
/// exact data for the error curve and, for every epsilon, on data perturbed
/// by exactly epsilon with the discrepancy stop.
RateTable run_rate_experiment(const RateConfig& cfg);

/// sup over recorded k in [k_lo, k_hi] of error (ln k)^p.
double scaled_error_sup(const RateTable& table, int k_lo, int k_hi);

struct AppendixReport {
  double p = 1.0;
  std::vector<int> ks;
  /// max over the grid of f_hat(lambda, k) (ln k)^p, per k
  std::vector<double> f_scaled;
  /// max over the grid of g_hat(lambda, k) k (ln k)^p, per k
  std::vector<double> g_scaled;
  double f_constant = 0.0;
  double g_constant = 0.0;
  double min_second_difference = 0.0;
  double worst_t = 0.0;
};

/// f_hat = (1-l)^k (ln(e/l))^{-p}, g_hat = l f_hat, and h_hat(t) = t exp(-2 t^{-1/(2p)}).
double appendix_f(double lambda, int k, double p);
double appendix_g(double lambda, int k, double p);
double appendix_h(double t, double p);

/// Maximizes f_hat (ln k)^p and g_hat k (ln k)^p over a log-spaced grid of
/// lambda in (0, 1] plus the end points for every k in `ks` and fits one
/// constant per bound. If explicit constants are given, any grid point
/// exceeding them throws Error(BoundViolated) naming (lambda, k). Also scans
/// the second differences of h_hat on a uniform t-grid in [t_min, 1].
AppendixReport appendix_bounds_check(double p, const std::vector<int>& ks, int lambda_points = 10'000,
                                     double f_bound = 0.0, double g_bound = 0.0, int t_points = 10'000,
                                     double t_min = 1e-6);

struct SobolevReport {
  int modes = 0;
  /// min over j of ln(e/(1-lambda_j)) - (2 w j - 1), in 50-digit arithmetic
  double min_margin = 0.0;
  int worst_mode = 0;
  /// sup_j (1+j^2)^p (2wj - 1)^{-2p}: bounded, so the weighted sum is at most
  /// this times sum psi_j^2
  double weight_sup = 0.0;
  double weighted_sum = 0.0;
  double plain_sum = 0.0;
};

/// Checks ln(e/(1-lambda_j)) >= 2 w j - 1 for j = 1..modes (4 pi j - 1 on the
/// square); throws Error(InequalityViolated) with the first failing j.
SobolevReport sobolev_interpretation_check(double p, int modes, const FourierTrace& psi,
                                           double width = SpectralOperator::kSquareWidth);

}  // namespace cauchy
