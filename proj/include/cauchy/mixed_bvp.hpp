#pragma once

#include "cauchy/geometry.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <functional>
#include <map>
#include <memory>

namespace cauchy {

/// Symmetric coefficient matrix A(x) of P u = -div(A grad u).
struct CoefficientField {
  std::function<double(double, double)> a11;
  std::function<double(double, double)> a12;
  std::function<double(double, double)> a22;
  double alpha = 1.0;  ///< ellipticity constant
  bool identity = false;

  static CoefficientField laplace();
  /// A = c(x, y) I.
  static CoefficientField isotropic(std::function<double(double, double)> c, double alpha);

  Eigen::Matrix2d at(const Eigen::Vector2d& x) const;
};

/// Samples the smallest eigenvalue of A at every node; throws
/// Error(InvalidArgument) if it falls below alpha.
void check_ellipticity(const Grid& grid, const CoefficientField& coefficients);

/// Assembled stiffness quadratic form K with u^T K v ~ int A grad u . grad v.
class Stiffness {
 public:
  Stiffness(const Grid& grid, const CoefficientField& coefficients);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const noexcept { return k_; }
  /// Sum of the trapezoid weights of every segment containing a node (zero
  /// for interior nodes). Corner nodes collect both adjacent half-weights.
  const Eigen::VectorXd& boundary_weight() const noexcept { return boundary_weight_; }

 private:
  Grid grid_;
  Eigen::SparseMatrix<double> k_;
  Eigen::VectorXd boundary_weight_;
};

std::shared_ptr<const Stiffness> assemble_stiffness(const Grid& grid, const CoefficientField& coefficients);

enum class BcKind { Dirichlet, Neumann };

struct BoundaryCondition {
  BcKind kind;
  BoundaryFunction data;

  static BoundaryCondition dirichlet(BoundaryFunction f) { return {BcKind::Dirichlet, std::move(f)}; }
  static BoundaryCondition neumann(BoundaryFunction g) { return {BcKind::Neumann, std::move(g)}; }
};

using BcPattern = std::map<Segment, BcKind>;
using BoundaryData = std::map<Segment, BoundaryFunction>;

struct MixedBvpSpec {
  Grid grid;
  CoefficientField coefficients;
  std::map<Segment, BoundaryCondition> bc;
};

struct SolverOptions {
  enum class Method { Auto, Direct, ConjugateGradient };
  Method method = Method::Auto;
  double cg_tolerance = 1e-12;
  int cg_max_iterations = 50000;
  /// Auto switches to preconditioned CG above this many unknowns.
  Eigen::Index direct_limit = 400000;
};

struct DiscreteSolution {
  Grid grid;
  Eigen::VectorXd values;
  std::shared_ptr<const Stiffness> stiffness;
};

/// A mixed problem with a fixed assignment of condition kinds to segments,
/// factorized once. `solve` only changes the boundary data, so one instance
/// serves any number of right-hand sides; it is safe to share read-only
/// between threads.
class MixedProblem {
 public:
  /// Throws Error(SingularSystem) when no segment is Dirichlet and
  /// Error(InvalidArgument) when a segment has no condition.
  MixedProblem(std::shared_ptr<const Stiffness> stiffness, const BcPattern& pattern, SolverOptions options = {});
  ~MixedProblem();
  MixedProblem(const MixedProblem&) = delete;
  MixedProblem& operator=(const MixedProblem&) = delete;

  /// Segments missing from `data` get zero data.
  DiscreteSolution solve(const BoundaryData& data) const;

  const Grid& grid() const noexcept { return stiffness_->grid(); }
  const std::shared_ptr<const Stiffness>& stiffness() const noexcept { return stiffness_; }
  const BcPattern& pattern() const noexcept { return pattern_; }
  bool is_free(Eigen::Index node) const noexcept { return free_index_[std::size_t(node)] >= 0; }
  Eigen::Index num_unknowns() const noexcept { return num_free_; }

 private:
  struct Factorization;

  std::shared_ptr<const Stiffness> stiffness_;
  BcPattern pattern_;
  SolverOptions options_;
  std::vector<Eigen::Index> free_index_;
  Eigen::Index num_free_ = 0;
  std::unique_ptr<Factorization> factor_;
};

/// Solves P u = 0 with the given conditions (assembles and factorizes afresh).
DiscreteSolution solve_mixed(const MixedBvpSpec& spec, SolverOptions options = {});

/// Restriction of the nodal values to a segment. Throws Error(UnknownSegment).
BoundaryFunction dirichlet_trace(const DiscreteSolution& sol, Segment s);

/// Consistent conormal flux (A grad u).nu on a segment: the boundary
/// functional (K u)_i divided by the node's boundary weight. At corners the
/// functional is shared between both sides in proportion to their weights.
BoundaryFunction conormal_flux(const DiscreteSolution& sol, Segment s);

/// u^T K v. Throws Error(GridMismatch) for different grids or coefficients.
double energy_inner_product(const DiscreteSolution& u, const DiscreteSolution& v);

}  // namespace cauchy
