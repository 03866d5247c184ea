#include "cauchy/spectral.hpp"

#include "cauchy/errors.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace cauchy {

double sobolev_norm(const FourierTrace& phi, double s) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < phi.modes(); ++i) {
    const double j = double(i + 1);
    sum += std::pow(1.0 + j * j, s) * phi.coefficients[i] * phi.coefficients[i];
  }
  return std::sqrt(sum);
}

double strip_eigenvalue(int j, double width) noexcept {
  const double e = std::exp(-2.0 * j * width);
  const double t = (1.0 - e) / (1.0 + e);
  return t * t;
}

double strip_gap(int j, double width) noexcept {
  const double e = std::exp(-2.0 * j * width);
  return 4.0 * e / ((1.0 + e) * (1.0 + e));
}

double log_e_over_gap(int j, double width) noexcept {
  const double x = j * width;
  return 1.0 + 2.0 * x + 2.0 * std::log1p(std::exp(-2.0 * x)) - 2.0 * std::numbers::ln2;
}

SpectralOperator::SpectralOperator(int modes, double width, ModeNorm norm)
    : width_(width), norm_(norm), lambda_(modes), gap_(modes), weight_(modes), z_(Eigen::VectorXd::Zero(modes)) {
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one mode");
  if (!(width > 0.0)) throw Error(ErrorCode::InvalidArgument, "strip width must be positive");
  for (int i = 0; i < modes; ++i) {
    const int j = i + 1;
    lambda_[i] = strip_eigenvalue(j, width);
    gap_[i] = strip_gap(j, width);
    weight_[i] = norm == ModeNorm::L2 ? 1.0 : 1.0 / std::sqrt(1.0 + double(j) * j);
  }
}

SpectralOperator SpectralOperator::from_cauchy_data(const FourierTrace& dirichlet, const FourierTrace& derivative,
                                                    double width, ModeNorm norm) {
  if (dirichlet.modes() != derivative.modes())
    throw Error(ErrorCode::ModeMismatch, "Dirichlet and derivative data have different mode counts");
  SpectralOperator op(int(dirichlet.modes()), width, norm);
  for (Eigen::Index i = 0; i < dirichlet.modes(); ++i) {
    const double x = double(i + 1) * width;
    const double e = std::exp(-x);
    const double sech = 2.0 * e / (1.0 + e * e);
    const double tanh = (1.0 - e * e) / (1.0 + e * e);
    op.z_[i] = double(i + 1) * tanh * sech * dirichlet.coefficients[i] + sech * derivative.coefficients[i];
  }
  return op;
}

SpectralOperator SpectralOperator::from_fixed_point(const FourierTrace& fixed_point, double width, ModeNorm norm) {
  SpectralOperator op(int(fixed_point.modes()), width, norm);
  op.z_ = op.gap_.cwiseProduct(fixed_point.coefficients);
  return op;
}

SpectralOperator SpectralOperator::with_affine_term(Eigen::VectorXd z) const {
  check(z);
  SpectralOperator op = *this;
  op.z_ = std::move(z);
  return op;
}

void SpectralOperator::check(const Eigen::VectorXd& v) const {
  if (v.size() != lambda_.size())
    throw Error(ErrorCode::ModeMismatch, "expected " + std::to_string(lambda_.size()) + " modes, got " +
                                             std::to_string(v.size()));
}

FourierTrace SpectralOperator::apply_T(const FourierTrace& phi) const { return {apply(phi.coefficients)}; }

FourierTrace SpectralOperator::exact_fixed_point() const { return {z_.cwiseQuotient(gap_)}; }

Eigen::VectorXd SpectralOperator::apply(const Eigen::VectorXd& v) const {
  check(v);
  return lambda_.cwiseProduct(v) + z_;
}

Eigen::VectorXd SpectralOperator::apply_linear(const Eigen::VectorXd& v) const {
  check(v);
  return lambda_.cwiseProduct(v);
}

double SpectralOperator::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  check(u);
  check(v);
  return (weight_.array() * u.array() * v.array()).sum();
}

double log_source_filter(double lambda, double p) {
  if (lambda < 0.0 || lambda > 1.0) throw Error(ErrorCode::InvalidArgument, "filter argument outside [0, 1]");
  if (lambda == 0.0) return 0.0;
  return std::pow(1.0 - std::log(lambda), -p);
}

FourierTrace source_element(double p, const FourierTrace& psi, const SpectralOperator& op) {
  if (!(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "source exponent must be non-negative");
  if (psi.modes() != op.dimension()) throw Error(ErrorCode::ModeMismatch, "psi and operator mode counts differ");
  FourierTrace out{Eigen::VectorXd(psi.modes())};
  for (Eigen::Index i = 0; i < psi.modes(); ++i) {
    // ln(e / gap) from the stable closed form; the gap itself underflows for large j.
    const double log_term = log_e_over_gap(int(i + 1), op.width());
    out.coefficients[i] = std::pow(log_term, -p) * psi.coefficients[i];
  }
  return out;
}

Eigen::VectorXd perturb_affine_term(const SpectralOperator& op, double epsilon, std::uint64_t seed) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd delta(op.dimension());
  for (auto& x : delta) x = normal(rng);
  const double n = op.norm(delta);
  if (epsilon == 0.0 || n == 0.0) return op.affine_term();
  return op.affine_term() + (epsilon / n) * delta;
}

LinearFit fit_line(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "fit needs matching x and y");
  if (x.size() >= 5) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::vector<double> xs, ys;
    for (std::size_t k = 1; k + 1 < order.size(); ++k) {
      xs.push_back(x[order[k]]);
      ys.push_back(y[order[k]]);
    }
    x = std::move(xs);
    y = std::move(ys);
  }
  if (x.size() < 2) throw Error(ErrorCode::InvalidArgument, "fit needs at least two points");
  const double n = double(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "fit needs distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = int(x.size());
  return f;
}

RateTable run_rate_experiment(const RateConfig& cfg) {
  if (cfg.epsilons.empty()) throw Error(ErrorCode::InvalidArgument, "empty noise-level grid");
  if (!(cfg.p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "source exponent must be non-negative");
  if (!(cfg.mu > 1.0)) throw Error(ErrorCode::InvalidArgument, "discrepancy parameter mu must exceed 1");
  if (cfg.psi.modes() < 1) throw Error(ErrorCode::InvalidArgument, "psi has no modes");

  const auto shape = SpectralOperator::from_fixed_point(FourierTrace{Eigen::VectorXd::Zero(cfg.psi.modes())},
                                                        cfg.width, cfg.norm);
  const FourierTrace target = source_element(cfg.p, cfg.psi, shape);
  const auto exact = SpectralOperator::from_fixed_point(target, cfg.width, cfg.norm);
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(exact.dimension());

  RateTable table;
  table.initial_error = exact.norm(start - target.coefficients);

  IterationConfig curve_cfg;
  curve_cfg.schedule = cfg.schedule;
  curve_cfg.max_iter = cfg.curve_max_k;
  curve_cfg.stop = MaxIterOnly{};
  const auto curve = mann_mazya_run(exact, start, curve_cfg, target.coefficients);
  table.exact_curve.reserve(curve.steps.size());
  for (const auto& s : curve.steps)
    table.exact_curve.push_back({s.k, s.err_star, s.err_star * std::pow(std::log(double(s.k)), cfg.p)});

  std::vector<double> lx, ly, wx, wy;
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    const double eps = cfg.epsilons[i];
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise levels must be positive");
    const auto noisy = exact.with_affine_term(perturb_affine_term(exact, eps, cfg.seed + i));
    IterationConfig run_cfg;
    run_cfg.schedule = cfg.schedule;
    run_cfg.max_iter = cfg.max_iter;
    run_cfg.stop = Discrepancy{cfg.mu, eps, ResidualNorm::Star};
    const auto rec = mann_mazya_run(noisy, start, run_cfg, target.coefficients);
    const auto& last = rec.steps.back();

    RateRow row;
    row.epsilon = eps;
    row.stop_index = rec.stop_index;
    row.error = last.err_star;
    row.residual = last.residual_star;
    row.error_ratio = row.error / std::pow(-std::log(std::sqrt(eps)), -cfg.p);
    row.work = rec.stop_index * std::pow(std::log(double(rec.stop_index)), cfg.p);
    table.rows.push_back(row);

    lx.push_back(std::log(eps));
    ly.push_back(std::log(double(rec.stop_index)));
    if (rec.stop_index >= 2) {
      wx.push_back(-std::log(eps));
      wy.push_back(std::log(row.work));
    }
  }
  if (lx.size() >= 2) table.stop_slope = fit_line(lx, ly);
  if (wx.size() >= 2) table.work_slope = fit_line(wx, wy);
  return table;
}

double scaled_error_sup(const RateTable& table, int k_lo, int k_hi) {
  double sup = 0.0;
  for (const auto& c : table.exact_curve)
    if (c.k >= k_lo && c.k <= k_hi) sup = std::max(sup, c.scaled);
  return sup;
}

double appendix_f(double lambda, int k, double p) {
  if (lambda <= 0.0) return 0.0;
  return std::pow(1.0 - lambda, k) * std::pow(1.0 - std::log(lambda), -p);
}

double appendix_g(double lambda, int k, double p) { return lambda * appendix_f(lambda, k, p); }

double appendix_h(double t, double p) {
  if (t <= 0.0) return 0.0;
  return t * std::exp(-2.0 * std::pow(t, -1.0 / (2.0 * p)));
}

AppendixReport appendix_bounds_check(double p, const std::vector<int>& ks, int lambda_points, double f_bound,
                                     double g_bound, int t_points, double t_min) {
  if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "exponent must be positive");
  if (lambda_points < 3 || t_points < 3) throw Error(ErrorCode::InvalidArgument, "grids need at least 3 points");

  // Log-spaced interior points plus both end points.
  std::vector<double> lambda;
  lambda.reserve(std::size_t(lambda_points) + 2);
  lambda.push_back(0.0);
  const double lo = std::log(1e-10);
  for (int i = 0; i < lambda_points; ++i) lambda.push_back(std::exp(lo * (1.0 - double(i) / (lambda_points - 1))));
  if (lambda.back() != 1.0) lambda.push_back(1.0);

  std::vector<double> log_one_minus(lambda.size()), filter(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    log_one_minus[i] = lambda[i] < 1.0 ? std::log1p(-lambda[i]) : -INFINITY;
    filter[i] = lambda[i] > 0.0 ? std::pow(1.0 - std::log(lambda[i]), -p) : 0.0;
  }

  AppendixReport rep;
  rep.p = p;
  for (int k : ks) {
    if (k < 2) continue;  // (ln 1)^{-p} is unbounded, nothing to check
    double fmax = 0.0, gmax = 0.0, fl = 0.0, gl = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
      const double f = std::exp(k * log_one_minus[i]) * filter[i];
      if (f > fmax) fmax = f, fl = lambda[i];
      if (lambda[i] * f > gmax) gmax = lambda[i] * f, gl = lambda[i];
    }
    const double lk = std::pow(std::log(double(k)), p);
    rep.ks.push_back(k);
    rep.f_scaled.push_back(fmax * lk);
    rep.g_scaled.push_back(gmax * k * lk);
    if (f_bound > 0.0 && fmax * lk > f_bound * (1.0 + 1e-12))
      throw Error(ErrorCode::BoundViolated, "f bound exceeded at lambda = " + std::to_string(fl) +
                                                ", k = " + std::to_string(k));
    if (g_bound > 0.0 && gmax * k * lk > g_bound * (1.0 + 1e-12))
      throw Error(ErrorCode::BoundViolated, "g bound exceeded at lambda = " + std::to_string(gl) +
                                                ", k = " + std::to_string(k));
  }
  if (!rep.f_scaled.empty()) {
    rep.f_constant = *std::max_element(rep.f_scaled.begin(), rep.f_scaled.end());
    rep.g_constant = *std::max_element(rep.g_scaled.begin(), rep.g_scaled.end());
  }

  const double dt = (1.0 - t_min) / (t_points - 1);
  rep.min_second_difference = INFINITY;
  for (int i = 1; i + 1 < t_points; ++i) {
    const double t = t_min + i * dt;
    const double d2 = appendix_h(t - dt, p) - 2.0 * appendix_h(t, p) + appendix_h(t + dt, p);
    if (d2 < rep.min_second_difference) {
      rep.min_second_difference = d2;
      rep.worst_t = t;
    }
  }
  return rep;
}

SobolevReport sobolev_interpretation_check(double p, int modes, const FourierTrace& psi, double width) {
  using big = boost::multiprecision::cpp_bin_float_50;
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "need at least one mode");
  if (psi.modes() < modes) throw Error(ErrorCode::ModeMismatch, "psi has fewer modes than requested");

  SobolevReport rep;
  rep.modes = modes;
  rep.min_margin = INFINITY;
  const big w = big(width);
  for (int j = 1; j <= modes; ++j) {
    // 1 - tanh^2 = 1 / cosh^2, so ln(e / (1 - lambda)) = ln(e cosh^2(j w)).
    const big c = boost::multiprecision::cosh(w * j);
    const big lhs = boost::multiprecision::log(boost::multiprecision::exp(big(1)) * c * c);
    const big rhs = 2 * w * j - 1;
    const double margin = static_cast<double>(lhs - rhs);
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.worst_mode = j;
    }
    if (lhs < rhs)
      throw Error(ErrorCode::InequalityViolated, "logarithmic bound fails at mode " + std::to_string(j));

    const double jj = double(j);
    if (2.0 * width * jj - 1.0 <= 0.0) continue;  // narrow strips: bound is vacuous for low modes
    const double weight = std::pow(1.0 + jj * jj, p) * std::pow(2.0 * width * jj - 1.0, -2.0 * p);
    const double psi2 = psi.coefficients[j - 1] * psi.coefficients[j - 1];
    rep.weight_sup = std::max(rep.weight_sup, weight);
    rep.weighted_sum += weight * psi2;
    rep.plain_sum += psi2;
  }
  return rep;
}

}  // namespace cauchy
