#include "cauchy/affine_operator.hpp"

#include "cauchy/errors.hpp"

#include <cmath>
#include <random>

namespace cauchy {

double AffineOperator::norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

ShiftedOperator::ShiftedOperator(std::shared_ptr<const AffineOperator> base, Eigen::VectorXd shift)
    : base_(std::move(base)), shift_(std::move(shift)) {
  if (!base_) throw Error(ErrorCode::InvalidArgument, "missing base operator");
  if (shift_.size() != base_->dimension()) throw Error(ErrorCode::GridMismatch, "shift has the wrong dimension");
}

std::shared_ptr<const AffineOperator> linear_part(std::shared_ptr<const AffineOperator> op) {
  const auto n = op->dimension();
  return std::make_shared<const ShiftedOperator>(std::move(op), Eigen::VectorXd::Zero(n));
}

PowerIterationResult dominant_eigenvalue(const AffineOperator& op, int max_iterations, double tolerance,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(op.dimension());
  for (auto& x : v) x = normal(rng);
  // Project through the operator once so components the operator ignores
  // (inactive nodes) do not distort the normalisation.
  v = op.apply_linear(v);
  double nv = op.norm(v);
  if (!(nv > 0.0)) return {0.0, v, 0};
  v /= nv;

  double lambda = 0.0;
  int it = 0;
  for (it = 1; it <= max_iterations; ++it) {
    Eigen::VectorXd w = op.apply_linear(v);
    const double next = op.inner(v, w);
    const double nw = op.norm(w);
    if (!(nw > 0.0)) return {0.0, v, it};
    v = w / nw;
    if (std::abs(next - lambda) <= tolerance * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return {lambda, v, std::min(it, max_iterations)};
}

}  // namespace cauchy
