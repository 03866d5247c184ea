#include "cauchy/fixed_point.hpp"

#include "cauchy/errors.hpp"

#include <cmath>
#include <string>

namespace cauchy {

namespace {

BcPattern lift_pattern(const BcPattern& extra) {
  BcPattern p = extra;
  p[Segment::Gamma1] = BcKind::Dirichlet;
  p[Segment::Gamma2] = BcKind::Neumann;
  return p;
}

BcPattern flux_pattern(const BcPattern& extra) {
  BcPattern p = extra;
  p[Segment::Gamma1] = BcKind::Neumann;
  p[Segment::Gamma2] = BcKind::Dirichlet;
  return p;
}

Eigen::VectorXd gamma2_mask(const Grid& g) {
  const auto nodes = g.segment_nodes(Segment::Gamma2);
  Eigen::VectorXd m(Eigen::Index(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) m[Eigen::Index(k)] = g.owner(nodes[k]) == Segment::Gamma2 ? 1.0 : 0.0;
  return m;
}

BcPattern pattern_of(const std::map<Segment, BoundaryCondition>& extra) {
  BcPattern p;
  for (const auto& [s, bc] : extra) p[s] = bc.kind;
  return p;
}

void validate(const Grid& g, const CauchyData& d) {
  const auto n1 = Eigen::Index(g.segment_nodes(Segment::Gamma1).size());
  if (d.f.segment != Segment::Gamma1 || d.g.segment != Segment::Gamma1)
    throw Error(ErrorCode::GridMismatch, "Cauchy data must live on Gamma1");
  if (d.f.size() != n1 || d.g.size() != n1)
    throw Error(ErrorCode::GridMismatch, "Cauchy data size does not match the Gamma1 nodes");
  for (const auto& [s, bc] : d.extra_bc) {
    if (s == Segment::Gamma1 || s == Segment::Gamma2)
      throw Error(ErrorCode::InvalidArgument, "extra conditions cannot be placed on Gamma1 or Gamma2");
    if (!g.has_segment(s)) throw Error(ErrorCode::UnknownSegment, to_string(s));
    if (bc.data.size() != Eigen::Index(g.segment_nodes(s).size()))
      throw Error(ErrorCode::GridMismatch, std::string("extra condition size mismatch on ") + to_string(s));
  }
  for (Segment s : g.domain().segments())
    if (s != Segment::Gamma1 && s != Segment::Gamma2 && !d.extra_bc.contains(s))
      throw Error(ErrorCode::InvalidArgument, std::string("no condition given on ") + to_string(s));
}

}  // namespace

StarMetric::StarMetric(std::shared_ptr<const Stiffness> stiffness, const BcPattern& extra_pattern,
                       SolverOptions options)
    : StarMetric(std::make_shared<const MixedProblem>(std::move(stiffness), lift_pattern(extra_pattern), options)) {}

StarMetric::StarMetric(std::shared_ptr<const MixedProblem> lift_problem) : problem_(std::move(lift_problem)) {
  const auto& p = problem_->pattern();
  if (p.at(Segment::Gamma1) != BcKind::Dirichlet || p.at(Segment::Gamma2) != BcKind::Neumann)
    throw Error(ErrorCode::InvalidArgument, "the lift problem must be Dirichlet on Gamma1 and Neumann on Gamma2");
  gamma2_ = zero_boundary(problem_->grid(), Segment::Gamma2);
  mask_ = gamma2_mask(problem_->grid());
}

Eigen::VectorXd StarMetric::lift_values(const Eigen::VectorXd& phi) const {
  if (phi.size() != gamma2_.size()) throw Error(ErrorCode::GridMismatch, "vector is not a Gamma2 function");
  return problem_->solve({{Segment::Gamma2, gamma2_.with_values(phi.cwiseProduct(mask_))}}).values;
}

DiscreteSolution StarMetric::lift(const BoundaryFunction& phi) const {
  if (phi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  return {grid(), lift_values(phi.values), problem_->stiffness()};
}

double StarMetric::inner(const Eigen::VectorXd& phi, const Eigen::VectorXd& psi) const {
  const Eigen::VectorXd a = lift_values(phi);
  const Eigen::VectorXd b = (&phi == &psi) ? a : lift_values(psi);
  return a.dot(problem_->stiffness()->matrix() * b);
}

double StarMetric::norm(const Eigen::VectorXd& phi) const { return std::sqrt(std::max(0.0, inner(phi, phi))); }

double StarMetric::inner(const BoundaryFunction& phi, const BoundaryFunction& psi) const {
  if (phi.segment != Segment::Gamma2 || psi.segment != Segment::Gamma2)
    throw Error(ErrorCode::GridMismatch, "expected Gamma2 functions");
  return inner(phi.values, psi.values);
}

double StarMetric::norm(const BoundaryFunction& phi) const {
  if (phi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  return norm(phi.values);
}

struct FixedPointOperator::Shared {
  std::shared_ptr<const Stiffness> stiffness;
  BcPattern extra;
  std::shared_ptr<const MixedProblem> lift;  // L_n and the *-metric
  std::shared_ptr<const MixedProblem> flux;  // L_d
};

FixedPointOperator::FixedPointOperator(const Grid& grid, const CoefficientField& coefficients, CauchyData data,
                                       SolverOptions options)
    : FixedPointOperator(
          [&] {
            validate(grid, data);
            auto s = std::make_shared<Shared>();
            s->stiffness = assemble_stiffness(grid, coefficients);
            s->extra = pattern_of(data.extra_bc);
            s->lift = std::make_shared<const MixedProblem>(s->stiffness, lift_pattern(s->extra), options);
            s->flux = std::make_shared<const MixedProblem>(s->stiffness, flux_pattern(s->extra), options);
            return std::shared_ptr<const Shared>(std::move(s));
          }(),
          data) {}

FixedPointOperator::FixedPointOperator(std::shared_ptr<const Shared> shared, CauchyData data)
    : shared_(std::move(shared)), data_(std::move(data)), metric_(shared_->lift) {
  validate(grid(), data_);
  if (pattern_of(data_.extra_bc) != shared_->extra)
    throw Error(ErrorCode::InvalidArgument, "new data changes the boundary condition pattern");
  z_ = ld_impl(ln_impl(zero_boundary(grid(), Segment::Gamma2), false), false);
}

FixedPointOperator FixedPointOperator::with_data(CauchyData data) const {
  return FixedPointOperator(shared_, std::move(data));
}

BoundaryFunction mask_inactive(const FixedPointOperator& op, BoundaryFunction phi) {
  phi.values = phi.values.cwiseProduct(op.active_mask());
  return phi;
}

BoundaryFunction FixedPointOperator::ln_impl(const BoundaryFunction& phi, bool homogeneous) const {
  BoundaryData d;
  if (!homogeneous) {
    d[Segment::Gamma1] = data_.f;
    for (const auto& [s, bc] : data_.extra_bc) d[s] = bc.data;
  }
  d[Segment::Gamma2] = mask_inactive(*this, phi);
  return dirichlet_trace(shared_->lift->solve(d), Segment::Gamma2);
}

BoundaryFunction FixedPointOperator::ld_impl(const BoundaryFunction& psi, bool homogeneous) const {
  BoundaryData d;
  if (!homogeneous) {
    d[Segment::Gamma1] = data_.g;
    for (const auto& [s, bc] : data_.extra_bc) d[s] = bc.data;
  }
  d[Segment::Gamma2] = psi;
  return mask_inactive(*this, conormal_flux(shared_->flux->solve(d), Segment::Gamma2));
}

DiscreteSolution FixedPointOperator::solve_Ln(const BoundaryFunction& phi) const {
  if (phi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  BoundaryData d;
  d[Segment::Gamma1] = data_.f;
  for (const auto& [s, bc] : data_.extra_bc) d[s] = bc.data;
  d[Segment::Gamma2] = mask_inactive(*this, phi);
  return shared_->lift->solve(d);
}

BoundaryFunction FixedPointOperator::apply_Ln(const BoundaryFunction& phi) const {
  if (phi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  return ln_impl(phi, false);
}

BoundaryFunction FixedPointOperator::apply_Ld(const BoundaryFunction& psi) const {
  if (psi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  return ld_impl(psi, false);
}

BoundaryFunction FixedPointOperator::apply_T(const BoundaryFunction& phi) const {
  return apply_Ld(apply_Ln(phi));
}

BoundaryFunction FixedPointOperator::apply_Tl(const BoundaryFunction& phi) const {
  if (phi.segment != Segment::Gamma2) throw Error(ErrorCode::GridMismatch, "expected a Gamma2 function");
  return ld_impl(ln_impl(phi, true), true);
}

Eigen::VectorXd FixedPointOperator::apply(const Eigen::VectorXd& v) const {
  return apply_T(gamma2_function(v)).values;
}

Eigen::VectorXd FixedPointOperator::apply_linear(const Eigen::VectorXd& v) const {
  return apply_Tl(gamma2_function(v)).values;
}

double FixedPointOperator::diagnostic_norm(const Eigen::VectorXd& v) const {
  if (v.size() != dimension()) throw Error(ErrorCode::GridMismatch, "vector is not a Gamma2 function");
  return std::sqrt(z_.weights.dot(v.cwiseProduct(active_mask()).cwiseAbs2()));
}

Eigen::MatrixXd FixedPointOperator::assemble_linear_part() const {
  const Eigen::Index n = dimension();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (active_mask()[k] == 0.0) continue;
    m.col(k) = apply_linear(Eigen::VectorXd::Unit(n, k));
  }
  return m;
}

}  // namespace cauchy
