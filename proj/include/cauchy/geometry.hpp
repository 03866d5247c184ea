#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace cauchy {

/// Boundary parts. On the rectangle: Gamma1 bottom, Gamma2 top, Gamma3 left,
/// Gamma4 right. On the annulus: Gamma1 inner circle, Gamma2 outer circle.
enum class Segment : int { Gamma1 = 1, Gamma2 = 2, Gamma3 = 3, Gamma4 = 4 };

const char* to_string(Segment s) noexcept;

struct Rectangle {
  double width;
  double height;
  bool operator==(const Rectangle&) const = default;
};

struct Annulus {
  double inner_radius;
  double outer_radius;
  bool operator==(const Annulus&) const = default;
};

class Domain {
 public:
  /// Throws Error(InvalidDomain) for non-positive dimensions.
  static Domain rectangle(double width, double height);
  /// Throws Error(InvalidDomain) unless 0 < inner < outer.
  static Domain annulus(double inner_radius, double outer_radius);

  bool is_rectangle() const noexcept { return std::holds_alternative<Rectangle>(shape_); }
  bool is_annulus() const noexcept { return std::holds_alternative<Annulus>(shape_); }
  const Rectangle& rectangle() const { return std::get<Rectangle>(shape_); }
  const Annulus& annulus() const { return std::get<Annulus>(shape_); }

  std::span<const Segment> segments() const noexcept;
  bool has_segment(Segment s) const noexcept;
  double segment_length(Segment s) const;

  bool operator==(const Domain&) const = default;

 private:
  explicit Domain(std::variant<Rectangle, Annulus> shape) : shape_(shape) {}
  std::variant<Rectangle, Annulus> shape_;
};

/// Uniform tensor grid over a domain. Nodes are indexed `j * n1 + i` where i
/// runs along the first coordinate (x, or r) and j along the second (y, or
/// theta). The annulus is periodic in theta, theta_j = 2 pi j / n2, and the
/// seam node is stored once.
///
/// Segment node lists are closed: on the rectangle the four corners appear in
/// both adjacent segments. For boundary conditions every boundary node has a
/// single owner; corners are owned by the vertical sides Gamma3/Gamma4.
class Grid {
 public:
  /// Throws Error(TooCoarse) when n1 or n2 is below 3.
  Grid(const Domain& domain, int n1, int n2);

  const Domain& domain() const noexcept { return domain_; }
  int n1() const noexcept { return n1_; }
  int n2() const noexcept { return n2_; }
  Eigen::Index num_nodes() const noexcept { return Eigen::Index(n1_) * n2_; }
  bool periodic() const noexcept { return domain_.is_annulus(); }

  /// Mesh widths in computational coordinates (x/y or r/theta).
  double h1() const noexcept { return h1_; }
  double h2() const noexcept { return h2_; }

  Eigen::Index index(int i, int j) const noexcept { return Eigen::Index(j) * n1_ + i; }
  /// Computational coordinates (x, y) or (r, theta) of node (i, j).
  double coord1(int i) const noexcept;
  double coord2(int j) const noexcept;
  /// Physical position of a node.
  Eigen::Vector2d position(Eigen::Index node) const noexcept;

  bool has_segment(Segment s) const noexcept { return domain_.has_segment(s); }
  /// Throws Error(UnknownSegment).
  std::span<const Eigen::Index> segment_nodes(Segment s) const;
  /// Boundary parameter (x, y or theta) of each segment node.
  std::span<const double> segment_parameters(Segment s) const;
  /// Composite trapezoid weights in physical arc length (periodic on circles).
  std::span<const double> segment_weights(Segment s) const;

  /// Owning segment of a boundary node, nullopt for interior nodes.
  std::optional<Segment> owner(Eigen::Index node) const noexcept;

  bool operator==(const Grid& other) const noexcept {
    return domain_ == other.domain_ && n1_ == other.n1_ && n2_ == other.n2_;
  }

 private:
  struct SegmentData {
    Segment id;
    std::vector<Eigen::Index> nodes;
    std::vector<double> parameters;
    std::vector<double> weights;
  };
  const SegmentData& data(Segment s) const;

  Domain domain_;
  int n1_;
  int n2_;
  double h1_;
  double h2_;
  std::vector<SegmentData> segments_;
};

Grid build_grid(const Domain& domain, int n1, int n2);

/// Samples of a function on one boundary segment together with the segment's
/// quadrature weights.
struct BoundaryFunction {
  Segment segment = Segment::Gamma1;
  Eigen::VectorXd values;
  Eigen::VectorXd weights;
  Eigen::VectorXd parameters;
  bool periodic = false;

  Eigen::Index size() const noexcept { return values.size(); }
  double arc_length() const noexcept { return weights.sum(); }

  /// Same segment and quadrature with new values.
  BoundaryFunction with_values(Eigen::VectorXd v) const;
};

BoundaryFunction zero_boundary(const Grid& g, Segment s);

/// values[i] = func(parameter of node i). Throws Error(UnknownSegment).
BoundaryFunction sample_boundary(const Grid& g, Segment s, const std::function<double(double)>& func);

/// sqrt(sum_i w_i v_i^2).
double boundary_l2_norm(const BoundaryFunction& u);
/// L2 norm of u - v; both must share a segment.
double boundary_l2_distance(const BoundaryFunction& u, const BoundaryFunction& v);

}  // namespace cauchy
