#include "cauchy/errors.hpp"
#include "cauchy/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cauchy;
using std::numbers::pi;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("domains validate their dimensions") {
  CHECK(code_of([] { Domain::rectangle(0.0, 1.0); }) == ErrorCode::InvalidDomain);
  CHECK(code_of([] { Domain::rectangle(1.0, -1.0); }) == ErrorCode::InvalidDomain);
  CHECK(code_of([] { Domain::annulus(2.0, 1.0); }) == ErrorCode::InvalidDomain);
  CHECK(code_of([] { Domain::annulus(0.0, 1.0); }) == ErrorCode::InvalidDomain);
  CHECK(Domain::rectangle(1.0, 0.75).segments().size() == 4);
  CHECK(Domain::annulus(1.0, 3.0).segments().size() == 2);
  CHECK_FALSE(Domain::annulus(1.0, 3.0).has_segment(Segment::Gamma3));
}

TEST_CASE("grids reject fewer than three nodes per direction") {
  CHECK(code_of([] { Grid(Domain::rectangle(1, 1), 2, 5); }) == ErrorCode::TooCoarse);
  CHECK(code_of([] { Grid(Domain::annulus(1, 3), 5, 2); }) == ErrorCode::TooCoarse);
}

TEST_CASE("rectangle 5 x 4 grid") {
  const Grid g(Domain::rectangle(1.0, 0.75), 5, 4);
  CHECK(g.num_nodes() == 20);
  const auto top = g.segment_nodes(Segment::Gamma2);
  REQUIRE(top.size() == 5);
  for (auto node : top) CHECK(g.position(node).y() == doctest::Approx(0.75));
  CHECK(g.segment_nodes(Segment::Gamma3).size() == 4);
}

TEST_CASE("annulus 4 x 8 grid") {
  const Grid g(Domain::annulus(1.0, 3.0), 4, 8);
  CHECK(g.num_nodes() == 32);
  const auto outer = g.segment_nodes(Segment::Gamma2);
  REQUIRE(outer.size() == 8);
  for (auto node : outer) CHECK(g.position(node).norm() == doctest::Approx(3.0));
  CHECK(code_of([&] { g.segment_nodes(Segment::Gamma4); }) == ErrorCode::UnknownSegment);
}

TEST_CASE("256 nodes on the rectangle's top side") {
  const Grid g(Domain::rectangle(1.0, 0.75), 256, 193);
  CHECK(g.segment_nodes(Segment::Gamma2).size() == 256);
}

TEST_CASE("every boundary node has exactly one owner; corners belong to the vertical sides") {
  const Grid g(Domain::rectangle(1.0, 0.75), 6, 5);
  int boundary = 0;
  for (Eigen::Index n = 0; n < g.num_nodes(); ++n)
    if (g.owner(n)) ++boundary;
  CHECK(boundary == 2 * 6 + 2 * 5 - 4);
  CHECK(g.owner(g.index(0, 0)) == Segment::Gamma3);
  CHECK(g.owner(g.index(5, 4)) == Segment::Gamma4);
  CHECK(g.owner(g.index(2, 4)) == Segment::Gamma2);
  CHECK(g.owner(g.index(2, 0)) == Segment::Gamma1);
  CHECK_FALSE(g.owner(g.index(2, 2)).has_value());

  const Grid a(Domain::annulus(1.0, 3.0), 4, 8);
  for (int j = 0; j < 8; ++j) {
    CHECK(a.owner(a.index(0, j)) == Segment::Gamma1);
    CHECK(a.owner(a.index(3, j)) == Segment::Gamma2);
  }
}

TEST_CASE("sampling sin(pi x) at quarter points") {
  const Grid g(Domain::rectangle(1.0, 0.75), 5, 4);
  const auto f = sample_boundary(g, Segment::Gamma1, [](double x) { return std::sin(pi * x); });
  const double expected[] = {0.0, std::sqrt(0.5), 1.0, std::sqrt(0.5), 0.0};
  for (int i = 0; i < 5; ++i) CHECK(f.values[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(zero_boundary(g, Segment::Gamma4).values.isZero());
  CHECK(sample_boundary(g, Segment::Gamma3, [](double) { return 0.0; }).values.isZero());
}

TEST_CASE("sampling the annulus Dirichlet data") {
  const Grid g(Domain::annulus(1.0, 3.0), 5, 16);
  const auto f = sample_boundary(g, Segment::Gamma1, [](double t) { return std::sin(t) - 0.5 * std::sin(2 * t); });
  REQUIRE(f.size() == 16);
  CHECK(f.periodic);
  for (int j = 0; j < 16; ++j) {
    const double t = 2 * pi * j / 16;
    CHECK(f.parameters[j] == doctest::Approx(t));
    CHECK(f.values[j] == doctest::Approx(std::sin(t) - 0.5 * std::sin(2 * t)));
  }
}

TEST_CASE("weights are positive and sum to the arc length") {
  for (const Grid& g : {Grid(Domain::rectangle(1.0, 0.75), 7, 9), Grid(Domain::annulus(1.0, 3.0), 5, 12)}) {
    for (Segment s : g.domain().segments()) {
      const auto w = zero_boundary(g, s).weights;
      CHECK((w.array() > 0.0).all());
      CHECK(std::abs(w.sum() - g.domain().segment_length(s)) <= 1e-12 * g.domain().segment_length(s));
    }
  }
}

TEST_CASE("L2 norms of constants and sin") {
  const Grid r(Domain::rectangle(1.0, 0.75), 33, 25);
  const auto one = sample_boundary(r, Segment::Gamma2, [](double) { return 1.0; });
  CHECK(boundary_l2_norm(one) == doctest::Approx(1.0).epsilon(1e-14));
  const auto left = sample_boundary(r, Segment::Gamma3, [](double) { return 2.5; });
  CHECK(std::abs(boundary_l2_norm(left) - 2.5 * std::sqrt(0.75)) <= 1e-12);

  const Grid a(Domain::annulus(1.0, 3.0), 5, 64);
  const auto outer = sample_boundary(a, Segment::Gamma2, [](double) { return 1.0; });
  CHECK(boundary_l2_norm(outer) == doctest::Approx(std::sqrt(6 * pi)).epsilon(1e-13));
  CHECK(boundary_l2_norm(outer) == doctest::Approx(4.3416).epsilon(1e-4));

  const Grid fine(Domain::rectangle(1.0, 0.75), 257, 5);
  const auto s = sample_boundary(fine, Segment::Gamma1, [](double x) { return std::sin(pi * x); });
  CHECK(boundary_l2_norm(s) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
}

TEST_CASE("property: norm of a smooth function converges at order two") {
  auto error = [](int n) {
    const Grid g(Domain::rectangle(1.0, 0.75), n, 5);
    const auto f = sample_boundary(g, Segment::Gamma1, [](double x) { return std::exp(x); });
    return std::abs(boundary_l2_norm(f) - std::sqrt((std::exp(2.0) - 1.0) / 2.0));
  };
  const double e1 = error(17), e2 = error(33), e3 = error(65);
  CHECK(std::log2(e1 / e2) >= 1.9);
  CHECK(std::log2(e2 / e3) >= 1.9);
}

TEST_CASE("property: constants are integrated exactly on every segment") {
  for (double c : {0.3, 1.0, 7.25}) {
    const Grid g(Domain::annulus(0.5, 2.0), 4, 11);
    for (Segment s : g.domain().segments()) {
      const auto u = sample_boundary(g, s, [c](double) { return c; });
      CHECK(std::abs(boundary_l2_norm(u) - c * std::sqrt(g.domain().segment_length(s))) <= 1e-12 * c);
    }
  }
}

TEST_CASE("property: annulus sampling is rotation invariant up to an index shift") {
  const int n = 24, shift = 5;
  const Grid g(Domain::annulus(1.0, 3.0), 4, n);
  auto f = [](double t) { return std::cos(3 * t) + 0.2 * std::sin(t); };
  const double dt = 2 * pi * shift / n;
  const auto base = sample_boundary(g, Segment::Gamma2, f);
  const auto rotated = sample_boundary(g, Segment::Gamma2, [&](double t) { return f(t + dt); });
  for (int j = 0; j < n; ++j) CHECK(rotated.values[j] == doctest::Approx(base.values[(j + shift) % n]).epsilon(1e-12));
  CHECK(boundary_l2_norm(rotated) == doctest::Approx(boundary_l2_norm(base)).epsilon(1e-12));
}

TEST_CASE("distance needs a common segment") {
  const Grid g(Domain::rectangle(1.0, 0.75), 5, 4);
  const auto a = zero_boundary(g, Segment::Gamma1);
  const auto b = zero_boundary(g, Segment::Gamma2);
  CHECK_THROWS_AS(boundary_l2_distance(a, b), Error);
  const auto c = sample_boundary(g, Segment::Gamma1, [](double) { return 2.0; });
  CHECK(boundary_l2_distance(a, c) == doctest::Approx(2.0));
}
