#pragma once

#include "cauchy/fixed_point.hpp"

#include <cstdint>

namespace cauchy {

enum class NoiseModel {
  PerNode,      ///< independent Gaussian value at every node
  PerMode,      ///< Gaussian coefficient for every resolvable mode
  BandLimited,  ///< Gaussian coefficients for modes 1..band only
};

struct NoiseSpec {
  double relative_level = 0.05;
  std::uint64_t seed = 1;
  NoiseModel model = NoiseModel::BandLimited;
  int band = 20;
};

struct NoisyData {
  CauchyData data;
  /// |f_eps - f| + |g_eps - g| in boundary L2.
  double epsilon = 0.0;
  double dirichlet_deviation = 0.0;
  double neumann_deviation = 0.0;
};

/// Adds seeded noise to f and g. The budget epsilon = level * (|f| + |g|) is
/// split evenly, each component receiving a perturbation of L2 norm
/// epsilon / 2, so the Neumann data is perturbed even where it vanishes.
NoisyData perturb_cauchy_data(const CauchyData& data, const NoiseSpec& spec);

/// A single seeded perturbation of the given L2 norm on a boundary segment.
Eigen::VectorXd boundary_noise(const BoundaryFunction& like, double norm, NoiseModel model, int band,
                               std::uint64_t seed);

/// Spectral coefficients of a boundary function in the segment's natural
/// basis: real Fourier (periodic) or sine series of the values after the
/// linear interpolant of the end values is removed (open segment).
struct BoundarySpectrum {
  bool periodic = false;
  double length = 0.0;
  double start = 0.0;  ///< open segment: end-point values of the removed trend
  double end = 0.0;
  Eigen::VectorXd cos;  ///< periodic: frequencies 0..K
  Eigen::VectorXd sin;  ///< periodic: frequencies 0..K (sin[0] = 0); open: modes 1..M at sin[m-1]
};

BoundarySpectrum analyze(const BoundaryFunction& f);
/// Inverse of `analyze` keeping modes up to `cutoff` (all if negative).
Eigen::VectorXd synthesize(const BoundaryFunction& like, const BoundarySpectrum& s, int cutoff = -1);

/// Discrete H^s norm: spectral weights (1 + frequency^2)^s with frequencies in
/// the segment parameter (k for theta, m pi / length for x); s = 0 reduces to
/// the discrete L2 norm by Parseval. The trend of an open segment is not
/// included.
double discrete_sobolev_norm(const BoundaryFunction& f, double s);

/// Fourier truncation with cutoff N(eps) = max(1, ceil(eps^{-1/r})). For data
/// in H^r the truncation error in H^s is of order eps^{(r-s)/r}.
class SmoothingOperator {
 public:
  explicit SmoothingOperator(double data_regularity = 2.0, double target_smoothness = 0.5);

  int cutoff(double epsilon) const;
  BoundaryFunction smooth(const BoundaryFunction& f, double epsilon) const;
  /// The a-priori bound exponent (r - s) / r.
  double rate_exponent() const noexcept { return (r_ - s_) / r_; }
  double data_regularity() const noexcept { return r_; }
  double target_smoothness() const noexcept { return s_; }

 private:
  double r_;
  double s_;
};

struct PerturbedTerm {
  BoundaryFunction z;
  /// |z_eps - z|_* when the exact operator is known.
  double deviation_star = 0.0;
  double deviation_l2 = 0.0;
};

/// z_eps = T(0) for the noisy data, reusing the factorizations of `exact`.
PerturbedTerm perturbed_affine_term(const FixedPointOperator& exact, const CauchyData& noisy);

}  // namespace cauchy
