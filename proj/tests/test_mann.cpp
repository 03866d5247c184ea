#include "cauchy/errors.hpp"
#include "cauchy/experiment.hpp"
#include "cauchy/mann.hpp"
#include "cauchy/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace cauchy;

namespace {

FourierTrace harmonic_psi(int modes) {
  FourierTrace psi{Eigen::VectorXd(modes)};
  for (int j = 0; j < modes; ++j) psi.coefficients[j] = 1.0 / (j + 1);
  return psi;
}

// Strip oracle with fixed point f(I - T_l) psi for psi_j = 1/j.
SpectralOperator oracle(double p = 1.0, int modes = 48, double width = 0.25) {
  const auto shape = SpectralOperator::from_fixed_point(FourierTrace{Eigen::VectorXd::Zero(modes)}, width);
  return SpectralOperator::from_fixed_point(source_element(p, harmonic_psi(modes), shape), width);
}

FixedPointOperator small_rectangle(int n1 = 17, int n2 = 13) {
  const auto b = rectangle_benchmark(n1, n2);
  return FixedPointOperator(b.grid, CoefficientField::laplace(), b.data);
}

Eigen::VectorXd random_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

TEST_CASE("schedules") {
  CHECK(SegmentingSchedule::identity().d(7) == 1.0);
  CHECK(SegmentingSchedule::harmonic().d(1) == 0.5);
  CHECK(SegmentingSchedule::harmonic().d(9) == doctest::Approx(0.1));
  CHECK(SegmentingSchedule::constant(0.3).d(100) == 0.3);
  CHECK_THROWS_AS(SegmentingSchedule::constant(1.5), Error);
  CHECK_THROWS_AS(SegmentingSchedule::harmonic().d(0), Error);
  const auto bad = SegmentingSchedule::custom([](int k) { return k > 3 ? 2.0 : 0.5; });
  CHECK(bad.d(3) == 0.5);
  CHECK_THROWS_AS(bad.d(4), Error);

  CHECK(SegmentingSchedule::harmonic().divergent_sum() == true);
  CHECK(SegmentingSchedule::constant(0.5).divergent_sum() == true);
  CHECK(SegmentingSchedule::constant(1.0).divergent_sum() == false);
  CHECK(SegmentingSchedule::identity().divergent_sum() == false);
  CHECK_FALSE(bad.divergent_sum().has_value());
}

TEST_CASE("property: segmenting matrices are lower triangular with unit row sums") {
  for (const auto& s : {SegmentingSchedule::identity(), SegmentingSchedule::harmonic(), SegmentingSchedule::constant(0.3),
                        SegmentingSchedule::custom([](int k) { return 1.0 / std::sqrt(k + 1.0); })}) {
    const Eigen::MatrixXd a = segmenting_matrix(s, 40);
    CHECK((a.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(a.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().isZero());
    CHECK((a.array() >= 0.0).all());
  }
  const Eigen::MatrixXd h = segmenting_matrix(SegmentingSchedule::harmonic(), 50);
  for (int k = 0; k < 50; ++k)
    for (int j = 0; j <= k; ++j) CHECK(h(k, j) == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
  CHECK(segmenting_matrix(SegmentingSchedule::identity(), 5).isIdentity());
}

TEST_CASE("identity schedule is bitwise the plain successive substitution") {
  const auto op = small_rectangle();
  const Eigen::VectorXd start = random_vector(op.dimension(), 3);
  IterationConfig cfg;
  cfg.schedule = SegmentingSchedule::identity();
  cfg.max_iter = 30;
  cfg.stop = MaxIterOnly{};
  cfg.record_every = 1;
  const auto rec = mann_mazya_run(op, start, cfg);
  Eigen::VectorXd v = start;
  for (int k = 1; k <= 30; ++k) {
    const Snapshot* s = rec.snapshot(k);
    REQUIRE(s != nullptr);
    CHECK((s->averaged.array() == v.array()).all());
    v = op.apply(v);
  }
}

TEST_CASE("O(1)-memory recursion equals explicit matrix averaging over 50 steps") {
  const auto op = small_rectangle();
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(op.dimension());
  for (const auto& s : {SegmentingSchedule::harmonic(), SegmentingSchedule::constant(0.4)}) {
    IterationConfig cfg;
    cfg.schedule = s;
    cfg.max_iter = 50;
    cfg.stop = MaxIterOnly{};
    cfg.record_every = 1;
    const auto rec = mann_mazya_run(op, start, cfg);
    const Eigen::MatrixXd explicit_form = matrix_form_iterates(op, start, s, 50);
    double dev = 0.0;
    for (int k = 1; k <= 50; ++k)
      dev = std::max(dev, (rec.snapshot(k)->averaged - explicit_form.col(k - 1)).cwiseAbs().maxCoeff());
    CHECK(dev <= 1e-12 * explicit_form.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("property: segmenting identity holds at every step") {
  const auto op = oracle();
  IterationConfig cfg;
  cfg.schedule = SegmentingSchedule::harmonic();
  cfg.max_iter = 40;
  cfg.stop = MaxIterOnly{};
  cfg.record_every = 1;
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  for (int k = 1; k < 40; ++k) {
    const double d = cfg.schedule.d(k);
    const Eigen::VectorXd expected = (1 - d) * rec.snapshot(k)->averaged + d * op.apply(rec.snapshot(k)->averaged);
    CHECK((rec.snapshot(k + 1)->averaged - expected).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((rec.snapshot(k + 1)->raw - op.apply(rec.snapshot(k)->averaged)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("error relations on the oracle") {
  const auto op = oracle();
  const Eigen::VectorXd exact = op.exact_fixed_point().coefficients;
  IterationConfig cfg;
  cfg.max_iter = 30;
  cfg.stop = MaxIterOnly{};
  cfg.record_every = 1;
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  const Eigen::MatrixXd a = segmenting_matrix(cfg.schedule, 30);
  for (int k = 1; k < 30; ++k) {
    const Eigen::VectorXd gamma = rec.snapshot(k)->averaged - exact;
    const Eigen::VectorXd eps_next = rec.snapshot(k + 1)->raw - exact;
    CHECK((eps_next - op.apply_linear(gamma)).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(op.dimension());
    for (int j = 1; j <= k; ++j) mix += a(k - 1, j - 1) * (rec.snapshot(j)->raw - exact);
    CHECK((mix - gamma).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("property: Fejer monotonicity and asymptotic regularity on the oracle") {
  for (const auto& s : {SegmentingSchedule::identity(), SegmentingSchedule::harmonic(), SegmentingSchedule::constant(0.5)}) {
    const auto op = oracle();
    IterationConfig cfg;
    cfg.schedule = s;
    cfg.max_iter = 20000;
    cfg.stop = MaxIterOnly{};
    const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg, op.exact_fixed_point().coefficients);
    for (std::size_t i = 1; i < rec.steps.size(); ++i) {
      CHECK(rec.steps[i].err_star <= rec.steps[i - 1].err_star + 1e-12);
      CHECK(rec.steps[i].residual_star <= rec.steps[i - 1].residual_star + 1e-10);
    }
    CHECK(rec.steps.back().residual_star < 1e-2 * rec.steps.front().residual_star);
  }
}

TEST_CASE("property: residuals never increase on the discretized operator") {
  for (auto restart : {std::optional<int>{}, std::optional<int>{7}}) {
    const auto op = small_rectangle(33, 25);
    IterationConfig cfg;
    cfg.max_iter = 60;
    cfg.stop = MaxIterOnly{};
    cfg.restart_every = restart;
    const auto rec = mann_mazya_run(op, random_vector(op.dimension(), 9), cfg);
    for (std::size_t i = 1; i < rec.steps.size(); ++i)
      CHECK(rec.steps[i].residual_star <= rec.steps[i - 1].residual_star + 1e-10);
  }
}

TEST_CASE("discrepancy stop") {
  const auto op = oracle();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(op.dimension());
  const double r1 = op.norm(op.apply(zero));
  IterationConfig cfg;
  cfg.schedule = SegmentingSchedule::identity();
  cfg.max_iter = 100000;
  cfg.stop = Discrepancy{3.0, r1 / 3.0};
  auto rec = mann_mazya_run(op, zero, cfg);
  CHECK(rec.stop_index == 1);
  CHECK(rec.stop_reason == StopReason::Discrepancy);
  CHECK(discrepancy_reached(3.0, 3.0, 1.0));

  int previous = 0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    cfg.stop = Discrepancy{3.0, eps};
    rec = mann_mazya_run(op, zero, cfg);
    CHECK(rec.stopped_by_rule());
    CHECK(rec.stop_index >= previous);
    CHECK(discrepancy_index(rec, 3.0, eps) == rec.stop_index);
    previous = rec.stop_index;
  }
  CHECK(previous > 1);
}

TEST_CASE("maximum iterations are distinguished from a rule stop") {
  const auto op = oracle();
  IterationConfig cfg;
  cfg.max_iter = 5;
  cfg.stop = Discrepancy{3.0, 1e-12};
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  CHECK(rec.stop_reason == StopReason::MaxIterations);
  CHECK_FALSE(rec.stopped_by_rule());
  CHECK(rec.stop_index == 5);
  CHECK(rec.solution.size() == op.dimension());
}

TEST_CASE("successive-difference stop and its default") {
  IterationConfig cfg;
  const auto* sd = std::get_if<SuccessiveDiff>(&cfg.stop);
  REQUIRE(sd != nullptr);
  CHECK(sd->tol == 1e-3);
  CHECK(sd->norm == ResidualNorm::BoundaryL2);
  CHECK(cfg.schedule.kind() == SegmentingSchedule::Kind::Harmonic);

  const auto op = small_rectangle();
  cfg.max_iter = 2000;
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  CHECK(rec.stop_reason == StopReason::SuccessiveDiff);
  CHECK(rec.steps.back().diff_l2 <= 1e-3);
  for (std::size_t i = 1; i + 1 < rec.steps.size(); ++i) CHECK(rec.steps[i].diff_l2 > 1e-3);
  CHECK(std::isnan(rec.steps.front().diff_l2));
}

TEST_CASE("rectangle: error to the exact flux decreases across snapshots") {
  const auto b = rectangle_benchmark(33, 25);
  const FixedPointOperator op(b.grid, CoefficientField::laplace(), b.data);
  IterationConfig cfg;
  cfg.snapshots = {5, 10, 25, 50};
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg, mask_inactive(op, b.exact_flux).values);
  double prev = INFINITY;
  for (int k : cfg.snapshots) {
    const double e = rec.steps[std::size_t(k - 1)].err_l2;
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("restart with period max_iter is the plain run") {
  const auto op = small_rectangle();
  IterationConfig cfg;
  cfg.max_iter = 40;
  cfg.stop = MaxIterOnly{};
  const auto plain = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  cfg.restart_every = 40;
  const auto restarted = restart_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  CHECK((plain.solution.array() == restarted.solution.array()).all());
  for (std::size_t i = 0; i < plain.steps.size(); ++i)
    CHECK(plain.steps[i].residual_l2 == restarted.steps[i].residual_l2);

  cfg.restart_every.reset();
  CHECK_THROWS_AS(restart_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg), Error);
}

TEST_CASE("restart semantics: schedule index resets and the last raw iterate restarts the average") {
  const auto op = oracle();
  IterationConfig cfg;
  cfg.max_iter = 12;
  cfg.stop = MaxIterOnly{};
  cfg.restart_every = 5;
  cfg.record_every = 1;
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  CHECK(rec.steps[4].restart);
  CHECK(rec.steps[9].restart);
  CHECK_FALSE(rec.steps[5].restart);
  CHECK((rec.snapshot(6)->averaged - op.apply(rec.snapshot(5)->averaged)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::VectorXd v6 = rec.snapshot(6)->averaged;
  const Eigen::VectorXd expected = 0.5 * v6 + 0.5 * op.apply(v6);
  CHECK((rec.snapshot(7)->averaged - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("rectangle restart after 50 steps is no worse than the plain run after 500") {
  const auto b = rectangle_benchmark(65, 49);
  const FixedPointOperator op(b.grid, CoefficientField::laplace(), b.data);
  const Eigen::VectorXd exact = mask_inactive(op, b.exact_flux).values;
  IterationConfig cfg;
  cfg.max_iter = 500;
  cfg.stop = MaxIterOnly{};
  cfg.track_star = false;
  const auto plain = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg, exact);
  cfg.restart_every = 50;
  const auto restarted = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg, exact);
  CHECK(restarted.steps.back().err_l2 <= 1.1 * plain.steps.back().err_l2);
}

TEST_CASE("regularization family") {
  const auto op = oracle();
  const Eigen::VectorXd phi = random_vector(op.dimension(), 4);
  const Eigen::VectorXd z = op.affine_term();
  CHECK((regularized_reconstruct(op, z, phi, 1, SegmentingSchedule::harmonic()).array() == phi.array()).all());

  // R_k^phi(z) is the k-th averaged iterate of the run started at phi.
  IterationConfig cfg;
  cfg.max_iter = 15;
  cfg.stop = MaxIterOnly{};
  const auto rec = mann_mazya_run(op, phi, cfg);
  CHECK((regularized_reconstruct(op, z, phi, 15, cfg.schedule) - rec.solution).cwiseAbs().maxCoeff() <= 1e-13);

  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(op.dimension());
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd psi = random_vector(op.dimension(), 100 + trial);
    for (int k = 1; k <= 30; ++k)
      CHECK(op.norm(regularized_reconstruct(op, psi, zero, k + 1, SegmentingSchedule::harmonic())) <=
            k * op.norm(psi) * (1 + 1e-12));
  }
}

TEST_CASE("semi-convergence on the oracle with 5% noise") {
  const auto exact = oracle();
  const double eps = 0.05 * exact.norm(exact.affine_term());
  const auto noisy = exact.with_affine_term(perturb_affine_term(exact, eps, 1));
  const Eigen::VectorXd target = exact.exact_fixed_point().coefficients;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(exact.dimension());
  std::vector<double> curve;
  for (int k = 1; k <= 200; ++k)
    curve.push_back(exact.norm(
        regularized_reconstruct(noisy, noisy.affine_term(), zero, k, SegmentingSchedule::identity()) - target));
  const auto best = std::min_element(curve.begin(), curve.end());
  CHECK(best != curve.begin());
  CHECK(best != curve.end() - 1);
  CHECK(curve.back() > *best);
}

TEST_CASE("configuration validation") {
  IterationConfig cfg;
  cfg.max_iter = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.max_iter = 10;
  cfg.stop = SuccessiveDiff{0.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.stop = Discrepancy{1.0, 0.1};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.stop = Discrepancy{3.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.stop = Discrepancy{1.5, 0.1};
  CHECK(cfg.validate().size() == 1);
  cfg.stop = Discrepancy{3.0, 0.1};
  CHECK(cfg.validate().empty());
  cfg.restart_every = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("history CSV layout") {
  const auto op = oracle(1.0, 8);
  IterationConfig cfg;
  cfg.max_iter = 3;
  cfg.stop = MaxIterOnly{};
  cfg.restart_every = 2;
  const auto rec = mann_mazya_run(op, Eigen::VectorXd::Zero(op.dimension()), cfg);
  std::ostringstream out;
  write_csv(out, rec);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,residual_star,residual_l2,diff_l2,err_star,err_l2,restart_flag");
  std::getline(in, line);
  CHECK(line.rfind("1,", 0) == 0);
  CHECK(line.find(",nan,") != std::string::npos);
  CHECK(line.back() == '0');
  std::getline(in, line);
  CHECK(line.back() == '1');
  int rows = 2;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
