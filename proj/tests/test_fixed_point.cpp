#include "cauchy/errors.hpp"
#include "cauchy/experiment.hpp"
#include "cauchy/fixed_point.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace cauchy;
using std::numbers::pi;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

FixedPointOperator make(const BenchmarkProblem& b) { return FixedPointOperator(b.grid, CoefficientField::laplace(), b.data); }

CauchyData zero_data(const BenchmarkProblem& b) {
  CauchyData d = b.data;
  d.f.values.setZero();
  d.g.values.setZero();
  return d;
}

double interior_max_error(const BoundaryFunction& u, const BoundaryFunction& exact) {
  return (u.values - exact.values).cwiseAbs().maxCoeff() / exact.values.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("L_n of the exact flux reproduces the exact trace at second order") {
  double e[3];
  const int sizes[][2] = {{17, 13}, {33, 25}, {65, 49}};
  for (int k = 0; k < 3; ++k) {
    const auto b = rectangle_benchmark(sizes[k][0], sizes[k][1]);
    e[k] = interior_max_error(make(b).apply_Ln(b.exact_flux), b.exact_trace);
  }
  CHECK(e[2] < 2e-3);
  CHECK(std::log2(e[0] / e[1]) >= 1.8);
  CHECK(std::log2(e[1] / e[2]) >= 1.8);
}

TEST_CASE("L_d of the exact trace reproduces the exact flux") {
  double e[3];
  const int sizes[][2] = {{17, 13}, {33, 25}, {65, 49}};
  for (int k = 0; k < 3; ++k) {
    const auto b = rectangle_benchmark(sizes[k][0], sizes[k][1]);
    const auto op = make(b);
    e[k] = interior_max_error(mask_inactive(op, op.apply_Ld(b.exact_trace)), mask_inactive(op, b.exact_flux));
  }
  CHECK(std::log2(e[0] / e[1]) >= 1.8);
  CHECK(std::log2(e[1] / e[2]) >= 1.8);

  const auto a = annulus_benchmark(33, 128);
  const auto flux = make(a).apply_Ld(a.exact_trace);
  for (Eigen::Index i = 0; i < flux.size(); ++i) {
    const double t = flux.parameters[i];
    CHECK(flux.values[i] == doctest::Approx(4.0 / 9.0 * std::sin(t) - 1.48148148 * std::sin(2 * t)).scale(1.0).epsilon(1e-2));
  }
}

TEST_CASE("zero Cauchy data gives zero maps") {
  const auto b = rectangle_benchmark(9, 7);
  const FixedPointOperator op(b.grid, CoefficientField::laplace(), zero_data(b));
  const auto zero = op.gamma2_function(Eigen::VectorXd::Zero(op.dimension()));
  CHECK(op.apply_Ln(zero).values.isZero());
  CHECK(op.apply_Ld(zero).values.isZero());
  CHECK(op.apply_T(zero).values.isZero());
  CHECK(op.affine_term().isZero());
}

TEST_CASE("affine structure of L_n and T") {
  std::mt19937_64 rng(11);
  for (const auto& b : {rectangle_benchmark(17, 13), annulus_benchmark(9, 32)}) {
    const auto op = make(b);
    const auto p1 = op.gamma2_function(random_vector(op.dimension(), rng));
    const auto p2 = op.gamma2_function(random_vector(op.dimension(), rng));
    const auto sum = op.gamma2_function(p1.values + p2.values);
    const auto zero = op.gamma2_function(Eigen::VectorXd::Zero(op.dimension()));
    const Eigen::VectorXd defect =
        op.apply_Ln(sum).values - op.apply_Ln(p1).values - op.apply_Ln(p2).values + op.apply_Ln(zero).values;
    CHECK(defect.cwiseAbs().maxCoeff() <= 1e-10 * op.apply_Ln(p1).values.cwiseAbs().maxCoeff());

    const Eigen::VectorXd z1 = op.apply(p1.values) - op.apply_linear(p1.values);
    const Eigen::VectorXd z2 = op.apply(p2.values) - op.apply_linear(p2.values);
    CHECK((z1 - z2).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + z1.cwiseAbs().maxCoeff()));
    CHECK((z1 - op.affine_term()).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + z1.cwiseAbs().maxCoeff()));
    CHECK(op.apply_linear(Eigen::VectorXd::Zero(op.dimension())).isZero());
    CHECK((op.apply_T(zero).values - op.affine_term()).isZero());
    CHECK((op.apply_Ld(op.apply_Ln(zero)).values - mask_inactive(op, op.affine_term_function()).values).isZero());
  }
}

TEST_CASE("star metric axioms") {
  std::mt19937_64 rng(5);
  for (const auto& b : {rectangle_benchmark(17, 13), annulus_benchmark(9, 32)}) {
    const auto op = make(b);
    CHECK(op.norm(Eigen::VectorXd::Zero(op.dimension())) == 0.0);
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd u = mask_inactive(op, op.gamma2_function(random_vector(op.dimension(), rng))).values;
      const Eigen::VectorXd v = mask_inactive(op, op.gamma2_function(random_vector(op.dimension(), rng))).values;
      CHECK(op.norm(u) > 0.0);
      CHECK(std::abs(op.inner(u, v)) <= op.norm(u) * op.norm(v) * (1 + 1e-10));
      CHECK(op.inner(u, v) == doctest::Approx(op.inner(v, u)).epsilon(1e-10));
    }
  }
}

TEST_CASE("star norm of sine modes matches the closed form on the rectangle") {
  // |sin(j pi x)|_*^2 = tanh(3 j pi / 4) / (2 j pi) for the unit-width, 3/4-high rectangle
  const auto b = rectangle_benchmark(129, 97);
  const auto op = make(b);
  for (int j = 1; j <= 5; ++j) {
    const auto mode = sample_boundary(b.grid, Segment::Gamma2, [j](double x) { return std::sin(j * pi * x); });
    const double exact = std::sqrt(std::tanh(0.75 * j * pi) / (2 * j * pi));
    CHECK(op.metric().norm(mode) == doctest::Approx(exact).epsilon(2e-2));
  }
}

TEST_CASE("star norm is equivalent to the H^-1/2 norm on the first ten modes, stably in h") {
  auto ratios = [](int n1, int n2) {
    const auto b = rectangle_benchmark(n1, n2);
    const auto op = make(b);
    std::vector<double> r;
    for (int j = 1; j <= 10; ++j) {
      const auto mode = sample_boundary(b.grid, Segment::Gamma2, [j](double x) { return std::sin(j * pi * x); });
      const double h_minus_half = std::pow(1 + (j * pi) * (j * pi), -0.25) * boundary_l2_norm(mode);
      r.push_back(op.metric().norm(mode) / h_minus_half);
    }
    return r;
  };
  const auto coarse = ratios(65, 49), fine = ratios(129, 97);
  for (std::size_t j = 0; j < coarse.size(); ++j) {
    CHECK(fine[j] > 0.5);
    CHECK(fine[j] < 2.0);
    CHECK(coarse[j] == doctest::Approx(fine[j]).epsilon(0.1));
  }
}

TEST_CASE("property: non-expansivity and self-adjointness of T_l") {
  std::mt19937_64 rng(2024);
  for (const auto& b : {rectangle_benchmark(33, 25), annulus_benchmark(17, 64)}) {
    const auto op = make(b);
    for (int t = 0; t < 100; ++t) {
      const Eigen::VectorXd phi = random_vector(op.dimension(), rng);
      CHECK(op.norm(op.apply_linear(phi)) <= (1 + 1e-6) * op.norm(phi));
    }
    for (int t = 0; t < 10; ++t) {
      const Eigen::VectorXd u = mask_inactive(op, op.gamma2_function(random_vector(op.dimension(), rng))).values;
      const Eigen::VectorXd v = mask_inactive(op, op.gamma2_function(random_vector(op.dimension(), rng))).values;
      CHECK(std::abs(op.inner(op.apply_linear(u), v) - op.inner(u, op.apply_linear(v))) <=
            1e-8 * op.norm(u) * op.norm(v));
    }
  }
}

TEST_CASE("spectrum of T_l lies in [0, 1) and 1 is not an eigenvalue") {
  for (const auto& b : {rectangle_benchmark(17, 13), annulus_benchmark(7, 24)}) {
    const auto op = make(b);
    const auto power = dominant_eigenvalue(op, 2000, 1e-12);
    CHECK(power.eigenvalue > 0.0);
    CHECK(power.eigenvalue < 1.0);

    const Eigen::EigenSolver<Eigen::MatrixXd> es(op.assemble_linear_part());
    const Eigen::VectorXcd ev = es.eigenvalues();
    CHECK(ev.imag().cwiseAbs().maxCoeff() < 1e-8);
    CHECK(ev.real().minCoeff() > -1e-10);
    // High modes sit within e^{-2 j pi h} of 1, below double resolution on these grids.
    CHECK(ev.real().maxCoeff() <= 1.0 + 1e-12);
    CHECK(ev.real().maxCoeff() == doctest::Approx(power.eigenvalue).epsilon(1e-3));
  }
  // On coarse grids the top gap is resolvable, and 1 is not an eigenvalue.
  for (const auto& b : {rectangle_benchmark(6, 5), annulus_benchmark(4, 8)}) {
    const Eigen::EigenSolver<Eigen::MatrixXd> es(make(b).assemble_linear_part());
    CHECK(es.eigenvalues().real().maxCoeff() < 1.0 - 1e-12);
  }
}

TEST_CASE("smallest eigenvalue of T_l matches the first mode") {
  // Mode 1 on the rectangle: tanh(3 pi / 4)^2. On the annulus 1 < r < 3 mode 1 gives 0.64.
  const auto rect = make(rectangle_benchmark(33, 25));
  Eigen::EigenSolver<Eigen::MatrixXd> es(rect.assemble_linear_part());
  double smallest = 1.0;
  for (auto v : es.eigenvalues()) if (v.real() > 1e-8) smallest = std::min(smallest, v.real());
  CHECK(smallest == doctest::Approx(std::pow(std::tanh(0.75 * pi), 2)).epsilon(2e-3));

  const auto ann = make(annulus_benchmark(17, 32));
  es.compute(ann.assemble_linear_part());
  smallest = 1.0;
  for (auto v : es.eigenvalues()) if (std::abs(v.real()) > 1e-6) smallest = std::min(smallest, v.real());
  CHECK(smallest == doctest::Approx(0.64).epsilon(1e-2));
}

TEST_CASE("fixed-point residual of the exact flux vanishes under refinement") {
  double prev = INFINITY;
  for (const auto& size : {std::pair{33, 25}, std::pair{65, 49}, std::pair{129, 97}}) {
    const auto b = rectangle_benchmark(size.first, size.second);
    const auto op = make(b);
    const Eigen::VectorXd phi = mask_inactive(op, b.exact_flux).values;
    const double rel = op.norm(op.apply(phi) - phi) / op.norm(phi);
    CHECK(rel <= 5e-2);
    CHECK(rel < prev);
    prev = rel;
  }
}

TEST_CASE("with_data shares the operator and changes only z") {
  const auto b = annulus_benchmark(9, 32);
  const auto op = make(b);
  CauchyData doubled = b.data;
  doubled.f.values *= 2.0;
  const auto op2 = op.with_data(doubled);
  const FixedPointOperator fresh(b.grid, CoefficientField::laplace(), doubled);
  CHECK((op2.affine_term() - 2.0 * op.affine_term()).cwiseAbs().maxCoeff() <= 1e-12 * op.affine_term().norm());
  CHECK((op2.affine_term() - fresh.affine_term()).cwiseAbs().maxCoeff() <= 1e-12 * op.affine_term().norm());
}

TEST_CASE("data validation") {
  const auto b = rectangle_benchmark(9, 7);
  CauchyData wrong = b.data;
  wrong.f = zero_boundary(b.grid, Segment::Gamma2);
  CHECK_THROWS_AS(FixedPointOperator(b.grid, CoefficientField::laplace(), wrong), Error);

  CauchyData missing = b.data;
  missing.extra_bc.erase(Segment::Gamma4);
  CHECK_THROWS_AS(FixedPointOperator(b.grid, CoefficientField::laplace(), missing), Error);

  const auto other = rectangle_benchmark(11, 7);
  CHECK_THROWS_AS(FixedPointOperator(b.grid, CoefficientField::laplace(), other.data), Error);
}

TEST_CASE("corner entries are not unknowns") {
  const auto b = rectangle_benchmark(9, 7);
  const auto op = make(b);
  const auto& mask = op.active_mask();
  CHECK(mask[0] == 0.0);
  CHECK(mask[mask.size() - 1] == 0.0);
  CHECK(mask.segment(1, mask.size() - 2).minCoeff() == 1.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(op.dimension());
  const Eigen::VectorXd image = op.apply(ones);
  CHECK(image[0] == 0.0);
  CHECK(image[image.size() - 1] == 0.0);
}
