#include "cauchy/geometry.hpp"

#include "cauchy/errors.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace cauchy {

const char* to_string(Segment s) noexcept {
  switch (s) {
    case Segment::Gamma1: return "Gamma1";
    case Segment::Gamma2: return "Gamma2";
    case Segment::Gamma3: return "Gamma3";
    case Segment::Gamma4: return "Gamma4";
  }
  return "Gamma?";
}

namespace {

constexpr std::array<Segment, 4> kRectangleSegments = {Segment::Gamma1, Segment::Gamma2, Segment::Gamma3,
                                                       Segment::Gamma4};
constexpr std::array<Segment, 2> kAnnulusSegments = {Segment::Gamma1, Segment::Gamma2};

}  // namespace

Domain Domain::rectangle(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height))
    throw Error(ErrorCode::InvalidDomain, "rectangle needs positive width and height");
  return Domain(Rectangle{width, height});
}

Domain Domain::annulus(double inner_radius, double outer_radius) {
  if (!(inner_radius > 0.0) || !(outer_radius > inner_radius) || !std::isfinite(outer_radius))
    throw Error(ErrorCode::InvalidDomain, "annulus needs 0 < inner_radius < outer_radius");
  return Domain(Annulus{inner_radius, outer_radius});
}

std::span<const Segment> Domain::segments() const noexcept {
  if (is_rectangle()) return kRectangleSegments;
  return kAnnulusSegments;
}

bool Domain::has_segment(Segment s) const noexcept {
  for (Segment t : segments())
    if (t == s) return true;
  return false;
}

double Domain::segment_length(Segment s) const {
  if (!has_segment(s)) throw Error(ErrorCode::UnknownSegment, to_string(s));
  if (is_rectangle()) {
    const auto& r = rectangle();
    return (s == Segment::Gamma1 || s == Segment::Gamma2) ? r.width : r.height;
  }
  const auto& a = annulus();
  return 2.0 * std::numbers::pi * (s == Segment::Gamma1 ? a.inner_radius : a.outer_radius);
}

Grid::Grid(const Domain& domain, int n1, int n2) : domain_(domain), n1_(n1), n2_(n2) {
  if (n1 < 3 || n2 < 3)
    throw Error(ErrorCode::TooCoarse, "grid needs at least 3 nodes per direction, got " + std::to_string(n1) +
                                          "x" + std::to_string(n2));

  if (domain_.is_rectangle()) {
    const auto& r = domain_.rectangle();
    h1_ = r.width / (n1_ - 1);
    h2_ = r.height / (n2_ - 1);

    auto straight = [](Segment id, int n, double h, auto node_of) {
      SegmentData d{id, {}, {}, {}};
      for (int k = 0; k < n; ++k) {
        d.nodes.push_back(node_of(k));
        d.parameters.push_back(k * h);
        d.weights.push_back((k == 0 || k == n - 1) ? 0.5 * h : h);
      }
      return d;
    };
    segments_.push_back(straight(Segment::Gamma1, n1_, h1_, [&](int k) { return index(k, 0); }));
    segments_.push_back(straight(Segment::Gamma2, n1_, h1_, [&](int k) { return index(k, n2_ - 1); }));
    segments_.push_back(straight(Segment::Gamma3, n2_, h2_, [&](int k) { return index(0, k); }));
    segments_.push_back(straight(Segment::Gamma4, n2_, h2_, [&](int k) { return index(n1_ - 1, k); }));
  } else {
    const auto& a = domain_.annulus();
    h1_ = (a.outer_radius - a.inner_radius) / (n1_ - 1);
    h2_ = 2.0 * std::numbers::pi / n2_;

    auto circle = [&](Segment id, int i, double radius) {
      SegmentData d{id, {}, {}, {}};
      for (int j = 0; j < n2_; ++j) {
        d.nodes.push_back(index(i, j));
        d.parameters.push_back(coord2(j));
        d.weights.push_back(radius * h2_);
      }
      return d;
    };
    segments_.push_back(circle(Segment::Gamma1, 0, a.inner_radius));
    segments_.push_back(circle(Segment::Gamma2, n1_ - 1, a.outer_radius));
  }
}

double Grid::coord1(int i) const noexcept {
  if (domain_.is_rectangle()) return i * h1_;
  return domain_.annulus().inner_radius + i * h1_;
}

double Grid::coord2(int j) const noexcept { return j * h2_; }

Eigen::Vector2d Grid::position(Eigen::Index node) const noexcept {
  const int i = int(node % n1_);
  const int j = int(node / n1_);
  if (domain_.is_rectangle()) return {coord1(i), coord2(j)};
  const double r = coord1(i), t = coord2(j);
  return {r * std::cos(t), r * std::sin(t)};
}

const Grid::SegmentData& Grid::data(Segment s) const {
  for (const auto& d : segments_)
    if (d.id == s) return d;
  throw Error(ErrorCode::UnknownSegment, std::string(to_string(s)) + " is not a segment of this domain");
}

std::span<const Eigen::Index> Grid::segment_nodes(Segment s) const { return data(s).nodes; }
std::span<const double> Grid::segment_parameters(Segment s) const { return data(s).parameters; }
std::span<const double> Grid::segment_weights(Segment s) const { return data(s).weights; }

std::optional<Segment> Grid::owner(Eigen::Index node) const noexcept {
  const int i = int(node % n1_);
  const int j = int(node / n1_);
  if (domain_.is_rectangle()) {
    if (i == 0) return Segment::Gamma3;
    if (i == n1_ - 1) return Segment::Gamma4;
    if (j == 0) return Segment::Gamma1;
    if (j == n2_ - 1) return Segment::Gamma2;
    return std::nullopt;
  }
  if (i == 0) return Segment::Gamma1;
  if (i == n1_ - 1) return Segment::Gamma2;
  return std::nullopt;
}

Grid build_grid(const Domain& domain, int n1, int n2) { return Grid(domain, n1, n2); }

BoundaryFunction BoundaryFunction::with_values(Eigen::VectorXd v) const {
  BoundaryFunction out{segment, std::move(v), weights, parameters, periodic};
  if (out.values.size() != weights.size())
    throw Error(ErrorCode::GridMismatch, "value count does not match the segment");
  return out;
}

BoundaryFunction zero_boundary(const Grid& g, Segment s) {
  return sample_boundary(g, s, [](double) { return 0.0; });
}

BoundaryFunction sample_boundary(const Grid& g, Segment s, const std::function<double(double)>& func) {
  const auto params = g.segment_parameters(s);
  const auto weights = g.segment_weights(s);
  BoundaryFunction b;
  b.segment = s;
  b.periodic = g.periodic();
  b.parameters = Eigen::Map<const Eigen::VectorXd>(params.data(), Eigen::Index(params.size()));
  b.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(), Eigen::Index(weights.size()));
  b.values.resize(b.parameters.size());
  for (Eigen::Index k = 0; k < b.values.size(); ++k) b.values[k] = func(b.parameters[k]);
  return b;
}

double boundary_l2_norm(const BoundaryFunction& u) {
  return std::sqrt(u.weights.dot(u.values.cwiseAbs2()));
}

double boundary_l2_distance(const BoundaryFunction& u, const BoundaryFunction& v) {
  if (u.segment != v.segment || u.size() != v.size())
    throw Error(ErrorCode::GridMismatch, "boundary functions live on different segments");
  return std::sqrt(u.weights.dot((u.values - v.values).cwiseAbs2()));
}

}  // namespace cauchy
