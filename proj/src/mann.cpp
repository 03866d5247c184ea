#include "cauchy/mann.hpp"

#include "cauchy/errors.hpp"
#include "number_format.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace cauchy {

SegmentingSchedule SegmentingSchedule::identity() { return {Kind::Identity, "identity", 1.0, {}}; }
SegmentingSchedule SegmentingSchedule::harmonic() { return {Kind::Harmonic, "harmonic", 0.0, {}}; }

SegmentingSchedule SegmentingSchedule::constant(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "constant schedule needs c in [0, 1]");
  return {Kind::Constant, "constant", c, {}};
}

SegmentingSchedule SegmentingSchedule::custom(std::function<double(int)> d, std::string label) {
  if (!d) throw Error(ErrorCode::InvalidArgument, "custom schedule needs a function");
  return {Kind::Custom, std::move(label), 0.0, std::move(d)};
}

double SegmentingSchedule::d(int k) const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "schedule index starts at 1");
  switch (kind_) {
    case Kind::Identity: return 1.0;
    case Kind::Harmonic: return 1.0 / (k + 1.0);
    case Kind::Constant: return c_;
    case Kind::Custom: {
      const double v = f_(k);
      if (!(v >= 0.0 && v <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "schedule value outside [0, 1] at k = " + std::to_string(k));
      return v;
    }
  }
  return 1.0;
}

std::optional<bool> SegmentingSchedule::divergent_sum() const noexcept {
  switch (kind_) {
    case Kind::Identity: return false;
    case Kind::Harmonic: return true;  // terms k/(k+1)^2 ~ 1/k
    case Kind::Constant: return c_ > 0.0 && c_ < 1.0;
    case Kind::Custom: return std::nullopt;
  }
  return std::nullopt;
}

Eigen::MatrixXd segmenting_matrix(const SegmentingSchedule& schedule, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "matrix size must be positive");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  a(0, 0) = 1.0;
  for (int k = 1; k < n; ++k) {
    const double d = schedule.d(k);
    a.row(k).head(k) = (1.0 - d) * a.row(k - 1).head(k);
    a(k, k) = d;
  }
  return a;
}

std::vector<std::string> IterationConfig::validate() const {
  std::vector<std::string> warnings;
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
  if (restart_every && *restart_every < 1) throw Error(ErrorCode::InvalidArgument, "restart_every must be >= 1");
  if (record_every < 0) throw Error(ErrorCode::InvalidArgument, "record_every must be >= 0");
  if (const auto* s = std::get_if<SuccessiveDiff>(&stop)) {
    if (!(s->tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "successive-difference tolerance must be positive");
    if (s->norm == ResidualNorm::Star && !track_star)
      throw Error(ErrorCode::InvalidArgument, "star-norm stopping needs track_star");
  } else if (const auto* d = std::get_if<Discrepancy>(&stop)) {
    if (!(d->mu > 1.0)) throw Error(ErrorCode::InvalidArgument, "discrepancy parameter mu must exceed 1");
    if (!(d->epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level epsilon must be positive");
    if (d->norm == ResidualNorm::Star && !track_star)
      throw Error(ErrorCode::InvalidArgument, "star-norm stopping needs track_star");
    if (d->mu <= 2.0) warnings.emplace_back("discrepancy parameter mu <= 2: the convergence-rate results assume mu > 2");
  }
  return warnings;
}

const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::SuccessiveDiff: return "successive_diff";
    case StopReason::Discrepancy: return "discrepancy";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "?";
}

const Snapshot* IterationRecord::snapshot(int k) const noexcept {
  for (const auto& s : snapshots)
    if (s.k == k) return &s;
  return nullptr;
}

bool discrepancy_reached(double residual, double mu, double epsilon) noexcept { return residual <= mu * epsilon; }

IterationRecord mann_mazya_run(const AffineOperator& op, const Eigen::VectorXd& initial, const IterationConfig& cfg,
                               const std::optional<Eigen::VectorXd>& reference) {
  IterationRecord rec;
  rec.warnings = cfg.validate();
  if (initial.size() != op.dimension()) throw Error(ErrorCode::GridMismatch, "initial guess has the wrong dimension");
  if (reference && reference->size() != op.dimension())
    throw Error(ErrorCode::GridMismatch, "reference has the wrong dimension");

  const auto stop_norm = [&](ResidualNorm n, const Eigen::VectorXd& v, double star) {
    return n == ResidualNorm::Star ? star : op.diagnostic_norm(v);
  };
  auto wants_snapshot = [&](int k) {
    return (cfg.record_every > 0 && k % cfg.record_every == 0) ||
           std::find(cfg.snapshots.begin(), cfg.snapshots.end(), k) != cfg.snapshots.end();
  };

  Eigen::VectorXd v = initial;
  Eigen::VectorXd raw = initial;
  Eigen::VectorXd previous;
  int local = 1;  // schedule index within the current restart segment
  rec.steps.reserve(std::size_t(cfg.max_iter));

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Eigen::VectorXd image = op.apply(v);
    const Eigen::VectorXd residual = image - v;

    StepRecord s;
    s.k = k;
    s.residual_l2 = op.diagnostic_norm(residual);
    if (cfg.track_star) s.residual_star = op.norm(residual);
    if (k > 1) s.diff_l2 = op.diagnostic_norm(v - previous);
    if (reference) {
      const Eigen::VectorXd e = v - *reference;
      s.err_l2 = op.diagnostic_norm(e);
      if (cfg.track_star) s.err_star = op.norm(e);
    }
    if (wants_snapshot(k)) rec.snapshots.push_back({k, raw, v});

    bool stop = false;
    if (const auto* sd = std::get_if<SuccessiveDiff>(&cfg.stop)) {
      if (k > 1) {
        const double diff = sd->norm == ResidualNorm::Star ? op.norm(v - previous) : s.diff_l2;
        if (diff <= sd->tol) {
          stop = true;
          rec.stop_reason = StopReason::SuccessiveDiff;
        }
      }
    } else if (const auto* dp = std::get_if<Discrepancy>(&cfg.stop)) {
      if (discrepancy_reached(stop_norm(dp->norm, residual, s.residual_star), dp->mu, dp->epsilon)) {
        stop = true;
        rec.stop_reason = StopReason::Discrepancy;
      }
    }

    if (stop || k == cfg.max_iter) {
      rec.steps.push_back(s);
      rec.stop_index = k;
      if (!rec.snapshot(k)) rec.snapshots.push_back({k, raw, v});
      rec.solution = v;
      return rec;
    }

    previous = v;
    raw = image;
    if (cfg.restart_every && k % *cfg.restart_every == 0) {
      v = image;
      local = 1;
      s.restart = true;
    } else {
      const double d = cfg.schedule.d(local++);
      if (d == 1.0)
        v = image;
      else
        v = (1.0 - d) * v + d * image;
    }
    rec.steps.push_back(s);
  }
  return rec;  // unreachable: max_iter >= 1
}

IterationRecord restart_run(const AffineOperator& op, const Eigen::VectorXd& initial, const IterationConfig& cfg,
                            const std::optional<Eigen::VectorXd>& reference) {
  if (!cfg.restart_every) throw Error(ErrorCode::InvalidArgument, "restart_run needs restart_every");
  return mann_mazya_run(op, initial, cfg, reference);
}

std::optional<int> discrepancy_index(const IterationRecord& record, double mu, double epsilon, ResidualNorm norm) {
  for (const auto& s : record.steps) {
    const double r = norm == ResidualNorm::Star ? s.residual_star : s.residual_l2;
    if (discrepancy_reached(r, mu, epsilon)) return s.k;
  }
  return std::nullopt;
}

Eigen::VectorXd regularized_reconstruct(const AffineOperator& linear, const Eigen::VectorXd& shift,
                                        const Eigen::VectorXd& start, int k, const SegmentingSchedule& schedule) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "iteration index starts at 1");
  if (shift.size() != linear.dimension() || start.size() != linear.dimension())
    throw Error(ErrorCode::GridMismatch, "vector has the wrong dimension");
  Eigen::VectorXd v = start;
  for (int j = 1; j < k; ++j) {
    const Eigen::VectorXd image = linear.apply_linear(v) + shift;
    const double d = schedule.d(j);
    if (d == 1.0)
      v = image;
    else
      v = (1.0 - d) * v + d * image;
  }
  return v;
}

Eigen::MatrixXd matrix_form_iterates(const AffineOperator& op, const Eigen::VectorXd& initial,
                                     const SegmentingSchedule& schedule, int n) {
  const Eigen::MatrixXd a = segmenting_matrix(schedule, n);
  Eigen::MatrixXd raw(op.dimension(), n);
  Eigen::MatrixXd averaged(op.dimension(), n);
  raw.col(0) = initial;
  for (int k = 0; k < n; ++k) {
    averaged.col(k) = raw.leftCols(k + 1) * a.row(k).head(k + 1).transpose();
    if (k + 1 < n) raw.col(k + 1) = op.apply(averaged.col(k));
  }
  return averaged;
}

void write_csv(std::ostream& out, const IterationRecord& record) {
  std::string line = "k,residual_star,residual_l2,diff_l2,err_star,err_l2,restart_flag\n";
  out << line;
  for (const auto& s : record.steps) {
    line.clear();
    line += std::to_string(s.k);
    for (double v : {s.residual_star, s.residual_l2, s.diff_l2, s.err_star, s.err_l2}) {
      line += ',';
      detail::append_number(line, v);
    }
    line += s.restart ? ",1\n" : ",0\n";
    out << line;
  }
}

}  // namespace cauchy
