#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>

namespace cauchy {

/// An affine map T(v) = T_l v + z on R^n with its own inner product. Both the
/// discretized Cauchy operator and the spectral oracle implement this, so the
/// iteration code is written once against it.
class AffineOperator {
 public:
  virtual ~AffineOperator() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::VectorXd& v) const = 0;
  virtual Eigen::VectorXd apply_linear(const Eigen::VectorXd& v) const = 0;
  /// z = T(0).
  virtual const Eigen::VectorXd& affine_term() const = 0;

  /// The inner product in which T_l is non-expansive.
  virtual double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const = 0;
  virtual double norm(const Eigen::VectorXd& v) const;
  /// A secondary, cheaper norm used only for reporting (plain L2 on the trace).
  virtual double diagnostic_norm(const Eigen::VectorXd& v) const = 0;
};

/// v -> T_l v + shift, reusing the linear part of another operator. With a
/// zero shift this is the linear part itself; with a perturbed z it is the
/// operator for noisy data.
class ShiftedOperator final : public AffineOperator {
 public:
  ShiftedOperator(std::shared_ptr<const AffineOperator> base, Eigen::VectorXd shift);

  Eigen::Index dimension() const override { return base_->dimension(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override { return base_->apply_linear(v) + shift_; }
  Eigen::VectorXd apply_linear(const Eigen::VectorXd& v) const override { return base_->apply_linear(v); }
  const Eigen::VectorXd& affine_term() const override { return shift_; }
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const override { return base_->inner(u, v); }
  double diagnostic_norm(const Eigen::VectorXd& v) const override { return base_->diagnostic_norm(v); }

 private:
  std::shared_ptr<const AffineOperator> base_;
  Eigen::VectorXd shift_;
};

std::shared_ptr<const AffineOperator> linear_part(std::shared_ptr<const AffineOperator> op);

struct PowerIterationResult {
  double eigenvalue;  ///< Rayleigh quotient of the last iterate
  Eigen::VectorXd vector;
  int iterations;
};

/// Dominant eigenvalue of the linear part by power iteration in the
/// operator's inner product, from a seeded random start.
PowerIterationResult dominant_eigenvalue(const AffineOperator& op, int max_iterations = 200,
                                         double tolerance = 1e-10, std::uint64_t seed = 1);

}  // namespace cauchy
