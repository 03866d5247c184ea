#include "cauchy/mixed_bvp.hpp"

#include "cauchy/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace cauchy {

CoefficientField CoefficientField::laplace() {
  CoefficientField c;
  c.a11 = [](double, double) { return 1.0; };
  c.a12 = [](double, double) { return 0.0; };
  c.a22 = [](double, double) { return 1.0; };
  c.alpha = 1.0;
  c.identity = true;
  return c;
}

CoefficientField CoefficientField::isotropic(std::function<double(double, double)> c, double alpha) {
  CoefficientField f;
  f.a11 = c;
  f.a12 = [](double, double) { return 0.0; };
  f.a22 = std::move(c);
  f.alpha = alpha;
  return f;
}

Eigen::Matrix2d CoefficientField::at(const Eigen::Vector2d& x) const {
  if (identity) return Eigen::Matrix2d::Identity();
  const double off = a12(x.x(), x.y());
  Eigen::Matrix2d a;
  a << a11(x.x(), x.y()), off, off, a22(x.x(), x.y());
  return a;
}

void check_ellipticity(const Grid& grid, const CoefficientField& coefficients) {
  if (!(coefficients.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "ellipticity constant must be positive");
  if (coefficients.identity) return;
  for (Eigen::Index n = 0; n < grid.num_nodes(); ++n) {
    const Eigen::Vector2d x = grid.position(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(coefficients.at(x), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues()[0] >= coefficients.alpha * (1.0 - 1e-12)))
      throw Error(ErrorCode::InvalidArgument, "coefficient not uniformly elliptic at (" + std::to_string(x.x()) +
                                                  ", " + std::to_string(x.y()) + ")");
  }
}

namespace {

// Coefficient tensor pulled back to computational coordinates. On the
// annulus, with (r, theta) and Jacobian J of the polar map, r J^-1 A J^-T.
Eigen::Matrix2d computational_tensor(const Grid& grid, const CoefficientField& c, double s1, double s2) {
  if (grid.domain().is_rectangle()) return c.at({s1, s2});
  const double r = s1, ct = std::cos(s2), st = std::sin(s2);
  if (c.identity) return Eigen::Vector2d(r, 1.0 / r).asDiagonal();
  Eigen::Matrix2d jinv;
  jinv << ct, st, -st / r, ct / r;
  return r * jinv * c.at({r * ct, r * st}) * jinv.transpose();
}

}  // namespace

Stiffness::Stiffness(const Grid& grid, const CoefficientField& coefficients) : grid_(grid) {
  check_ellipticity(grid, coefficients);

  const int n1 = grid.n1(), n2 = grid.n2();
  const int cells2 = grid.periodic() ? n2 : n2 - 1;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(std::size_t(n1) * std::size_t(cells2) * 18);

  auto add_triangle = [&](const std::array<Eigen::Index, 3>& node, const std::array<Eigen::Vector2d, 3>& p) {
    const double det = (p[1].x() - p[0].x()) * (p[2].y() - p[0].y()) - (p[2].x() - p[0].x()) * (p[1].y() - p[0].y());
    const double area = 0.5 * std::abs(det);
    std::array<Eigen::Vector2d, 3> grad;
    for (int k = 0; k < 3; ++k) {
      const auto& a = p[(k + 1) % 3];
      const auto& b = p[(k + 2) % 3];
      grad[k] = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) / det;
    }
    const Eigen::Vector2d centroid = (p[0] + p[1] + p[2]) / 3.0;
    const Eigen::Matrix2d b = computational_tensor(grid, coefficients, centroid.x(), centroid.y());
    // Off-diagonal pairs are inserted symmetrically and each diagonal is the
    // negated row sum, so constants are in the kernel to rounding.
    for (int a = 0; a < 3; ++a) {
      for (int c = a + 1; c < 3; ++c) {
        const double v = area * grad[a].dot(b * grad[c]);
        if (v == 0.0) continue;
        triplets.emplace_back(node[a], node[c], v);
        triplets.emplace_back(node[c], node[a], v);
        triplets.emplace_back(node[a], node[a], -v);
        triplets.emplace_back(node[c], node[c], -v);
      }
    }
  };

  for (int j = 0; j < cells2; ++j) {
    const int jp = (j + 1) % n2;
    const double y0 = grid.coord2(j), y1 = y0 + grid.h2();
    for (int i = 0; i + 1 < n1; ++i) {
      const double x0 = grid.coord1(i), x1 = grid.coord1(i + 1);
      const Eigen::Index a = grid.index(i, j), b = grid.index(i + 1, j), c = grid.index(i + 1, jp),
                         d = grid.index(i, jp);
      add_triangle({a, b, c}, {Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y0), Eigen::Vector2d(x1, y1)});
      add_triangle({a, c, d}, {Eigen::Vector2d(x0, y0), Eigen::Vector2d(x1, y1), Eigen::Vector2d(x0, y1)});
    }
  }

  k_.resize(grid.num_nodes(), grid.num_nodes());
  k_.setFromTriplets(triplets.begin(), triplets.end());
  k_.makeCompressed();

  boundary_weight_ = Eigen::VectorXd::Zero(grid.num_nodes());
  for (Segment s : grid.domain().segments()) {
    const auto nodes = grid.segment_nodes(s);
    const auto w = grid.segment_weights(s);
    for (std::size_t k = 0; k < nodes.size(); ++k) boundary_weight_[nodes[k]] += w[k];
  }
}

std::shared_ptr<const Stiffness> assemble_stiffness(const Grid& grid, const CoefficientField& coefficients) {
  return std::make_shared<const Stiffness>(grid, coefficients);
}

struct MixedProblem::Factorization {
  Eigen::SparseMatrix<double> kff;
  std::optional<Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>>> direct;
  std::optional<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                         Eigen::IncompleteCholesky<double>>>
      cg;
};

MixedProblem::MixedProblem(std::shared_ptr<const Stiffness> stiffness, const BcPattern& pattern,
                           SolverOptions options)
    : stiffness_(std::move(stiffness)), pattern_(pattern), options_(options) {
  if (!stiffness_) throw Error(ErrorCode::InvalidArgument, "missing stiffness");
  const Grid& g = grid();
  bool any_dirichlet = false;
  for (Segment s : g.domain().segments()) {
    const auto it = pattern_.find(s);
    if (it == pattern_.end())
      throw Error(ErrorCode::InvalidArgument, std::string("no boundary condition on ") + to_string(s));
    any_dirichlet |= it->second == BcKind::Dirichlet;
  }
  for (const auto& [s, kind] : pattern_)
    if (!g.has_segment(s)) throw Error(ErrorCode::UnknownSegment, to_string(s));
  if (!any_dirichlet)
    throw Error(ErrorCode::SingularSystem, "pure Neumann problem: at least one segment must be Dirichlet");

  free_index_.assign(std::size_t(g.num_nodes()), -1);
  for (Eigen::Index n = 0; n < g.num_nodes(); ++n) {
    const auto own = g.owner(n);
    if (own && pattern_.at(*own) == BcKind::Dirichlet) continue;
    free_index_[std::size_t(n)] = num_free_++;
  }

  factor_ = std::make_unique<Factorization>();
  std::vector<Eigen::Triplet<double>> t;
  const auto& k = stiffness_->matrix();
  t.reserve(std::size_t(k.nonZeros()));
  for (Eigen::Index col = 0; col < k.outerSize(); ++col) {
    const auto fc = free_index_[std::size_t(col)];
    if (fc < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, col); it; ++it) {
      const auto fr = free_index_[std::size_t(it.row())];
      if (fr >= 0) t.emplace_back(fr, fc, it.value());
    }
  }
  factor_->kff.resize(num_free_, num_free_);
  factor_->kff.setFromTriplets(t.begin(), t.end());
  factor_->kff.makeCompressed();

  using Method = SolverOptions::Method;
  const bool use_cg = options_.method == Method::ConjugateGradient ||
                      (options_.method == Method::Auto && num_free_ > options_.direct_limit);
  if (!use_cg) {
    factor_->direct.emplace(factor_->kff);
    if (factor_->direct->info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "stiffness block is not positive definite");
  } else {
    factor_->cg.emplace();
    factor_->cg->setTolerance(options_.cg_tolerance);
    factor_->cg->setMaxIterations(options_.cg_max_iterations);
    factor_->cg->compute(factor_->kff);
    if (factor_->cg->info() != Eigen::Success)
      throw Error(ErrorCode::SingularSystem, "incomplete Cholesky preconditioner failed");
  }
}

MixedProblem::~MixedProblem() = default;

DiscreteSolution MixedProblem::solve(const BoundaryData& data) const {
  const Grid& g = grid();
  for (const auto& [s, f] : data) {
    if (!pattern_.contains(s)) throw Error(ErrorCode::UnknownSegment, to_string(s));
    if (f.size() != Eigen::Index(g.segment_nodes(s).size()))
      throw Error(ErrorCode::GridMismatch, std::string("boundary data size mismatch on ") + to_string(s));
  }

  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.num_nodes());
  Eigen::VectorXd load = Eigen::VectorXd::Zero(g.num_nodes());
  for (const auto& [s, f] : data) {
    const auto nodes = g.segment_nodes(s);
    if (pattern_.at(s) == BcKind::Dirichlet) {
      for (std::size_t k = 0; k < nodes.size(); ++k)
        if (g.owner(nodes[k]) == s) u[nodes[k]] = f.values[Eigen::Index(k)];
    } else {
      const auto w = g.segment_weights(s);
      for (std::size_t k = 0; k < nodes.size(); ++k) load[nodes[k]] += w[k] * f.values[Eigen::Index(k)];
    }
  }

  const Eigen::VectorXd lifted = stiffness_->matrix() * u;
  Eigen::VectorXd rhs(num_free_);
  for (Eigen::Index n = 0; n < g.num_nodes(); ++n) {
    const auto f = free_index_[std::size_t(n)];
    if (f >= 0) rhs[f] = load[n] - lifted[n];
  }

  Eigen::VectorXd x;
  if (factor_->direct) {
    x = factor_->direct->solve(rhs);
  } else {
    x = factor_->cg->solve(rhs);
    if (factor_->cg->info() != Eigen::Success)
      throw Error(ErrorCode::SolverDivergence, "conjugate gradients stopped at residual " +
                                                   std::to_string(factor_->cg->error()) + " after " +
                                                   std::to_string(factor_->cg->iterations()) + " iterations");
  }
  for (Eigen::Index n = 0; n < g.num_nodes(); ++n) {
    const auto f = free_index_[std::size_t(n)];
    if (f >= 0) u[n] = x[f];
  }
  return {g, std::move(u), stiffness_};
}

DiscreteSolution solve_mixed(const MixedBvpSpec& spec, SolverOptions options) {
  BcPattern pattern;
  BoundaryData data;
  for (const auto& [s, bc] : spec.bc) {
    pattern[s] = bc.kind;
    data[s] = bc.data;
  }
  const MixedProblem problem(assemble_stiffness(spec.grid, spec.coefficients), pattern, options);
  return problem.solve(data);
}

BoundaryFunction dirichlet_trace(const DiscreteSolution& sol, Segment s) {
  const auto nodes = sol.grid.segment_nodes(s);
  BoundaryFunction out = zero_boundary(sol.grid, s);
  for (std::size_t k = 0; k < nodes.size(); ++k) out.values[Eigen::Index(k)] = sol.values[nodes[k]];
  return out;
}

BoundaryFunction conormal_flux(const DiscreteSolution& sol, Segment s) {
  if (!sol.stiffness) throw Error(ErrorCode::InvalidArgument, "solution carries no stiffness");
  const auto nodes = sol.grid.segment_nodes(s);
  const auto& k = sol.stiffness->matrix();
  const auto& wsum = sol.stiffness->boundary_weight();
  BoundaryFunction out = zero_boundary(sol.grid, s);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Eigen::Index n = nodes[i];
    // Row n of K u; K is symmetric so the column iterator gives the row.
    double r = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(k, n); it; ++it) r += it.value() * sol.values[it.row()];
    out.values[Eigen::Index(i)] = r / wsum[n];
  }
  return out;
}

double energy_inner_product(const DiscreteSolution& u, const DiscreteSolution& v) {
  if (!(u.grid == v.grid) || u.stiffness != v.stiffness || !u.stiffness)
    throw Error(ErrorCode::GridMismatch, "solutions live on different grids or coefficient fields");
  return u.values.dot(u.stiffness->matrix() * v.values);
}

}  // namespace cauchy
