#pragma once

#include "cauchy/affine_operator.hpp"
#include "cauchy/mixed_bvp.hpp"

#include <map>
#include <memory>

namespace cauchy {

/// Cauchy data on Gamma1 plus optional conditions on the remaining sides
/// (used for u = 0 on the rectangle's vertical sides).
struct CauchyData {
  BoundaryFunction f;  ///< Dirichlet values on Gamma1
  BoundaryFunction g;  ///< conormal derivative on Gamma1
  std::map<Segment, BoundaryCondition> extra_bc;
};

/// Inner product <phi, psi>_* = int A grad W(phi) . grad W(psi), where W
/// solves the problem with zero Dirichlet data on Gamma1 (and homogeneous
/// extra conditions) and Neumann data phi on Gamma2.
class StarMetric {
 public:
  StarMetric(std::shared_ptr<const Stiffness> stiffness, const BcPattern& extra_pattern,
             SolverOptions options = {});
  /// Shares an existing factorization of the same pattern.
  explicit StarMetric(std::shared_ptr<const MixedProblem> lift_problem);

  DiscreteSolution lift(const BoundaryFunction& phi) const;
  double inner(const BoundaryFunction& phi, const BoundaryFunction& psi) const;
  double norm(const BoundaryFunction& phi) const;

  double inner(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const;
  double norm(const Eigen::VectorXd& phi) const;

  const Grid& grid() const noexcept { return problem_->grid(); }
  /// 1 on Gamma2 entries owned by Gamma2, 0 on corners owned by other sides.
  const Eigen::VectorXd& active_mask() const noexcept { return mask_; }

 private:
  Eigen::VectorXd lift_values(const Eigen::VectorXd& phi) const;
  std::shared_ptr<const MixedProblem> problem_;
  BoundaryFunction gamma2_;
  Eigen::VectorXd mask_;
};

/// The affine map T = L_d o L_n on Neumann data over Gamma2:
///   L_n(phi): trace on Gamma2 of the solve with u = f on Gamma1, flux phi on Gamma2;
///   L_d(psi): flux on Gamma2 of the solve with flux g on Gamma1, u = psi on Gamma2.
/// Both problems are factorized once at construction; the object is
/// immutable afterwards and safe to apply from several threads.
///
/// Gamma2 entries owned by another side (rectangle corners) carry no
/// unknown; T and T_l return zero there, and the *-metric ignores them.
class FixedPointOperator final : public AffineOperator {
 public:
  FixedPointOperator(const Grid& grid, const CoefficientField& coefficients, CauchyData data,
                     SolverOptions options = {});

  /// Same grid, coefficients and condition pattern with new Cauchy data;
  /// factorizations are shared.
  FixedPointOperator with_data(CauchyData data) const;

  BoundaryFunction apply_Ln(const BoundaryFunction& phi) const;
  BoundaryFunction apply_Ld(const BoundaryFunction& psi) const;
  BoundaryFunction apply_T(const BoundaryFunction& phi) const;
  BoundaryFunction apply_Tl(const BoundaryFunction& phi) const;
  /// z = T(0) as a boundary function.
  const BoundaryFunction& affine_term_function() const noexcept { return z_; }

  /// Full solution of the L_n problem (for reconstructing u inside Omega).
  DiscreteSolution solve_Ln(const BoundaryFunction& phi) const;

  Eigen::Index dimension() const override { return z_.size(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const override;
  Eigen::VectorXd apply_linear(const Eigen::VectorXd& v) const override;
  const Eigen::VectorXd& affine_term() const override { return z_.values; }
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const override { return metric_.inner(u, v); }
  double diagnostic_norm(const Eigen::VectorXd& v) const override;

  const StarMetric& metric() const noexcept { return metric_; }
  const Grid& grid() const noexcept { return metric_.grid(); }
  const CauchyData& data() const noexcept { return data_; }
  /// 1 where a Gamma2 entry is an unknown of the iteration, 0 elsewhere.
  const Eigen::VectorXd& active_mask() const noexcept { return metric_.active_mask(); }
  /// Zero Gamma2 boundary function (with quadrature) to wrap raw vectors.
  BoundaryFunction gamma2_function(Eigen::VectorXd values) const { return z_.with_values(std::move(values)); }

  /// Dense matrix of T_l in nodal coordinates; n solve pairs, coarse grids only.
  Eigen::MatrixXd assemble_linear_part() const;

 private:
  struct Shared;
  FixedPointOperator(std::shared_ptr<const Shared> shared, CauchyData data);
  BoundaryFunction ln_impl(const BoundaryFunction& phi, bool homogeneous) const;
  BoundaryFunction ld_impl(const BoundaryFunction& psi, bool homogeneous) const;

  std::shared_ptr<const Shared> shared_;
  CauchyData data_;
  StarMetric metric_;
  BoundaryFunction z_;
};

/// Zeroes the Gamma2 entries that are not unknowns of the iteration.
BoundaryFunction mask_inactive(const FixedPointOperator& op, BoundaryFunction phi);

}  // namespace cauchy
