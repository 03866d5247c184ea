#include "cauchy/noise.hpp"

#include "cauchy/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace cauchy {

namespace {

constexpr double kPi = std::numbers::pi;

// Highest resolvable mode index for the segment's basis.
int max_mode(const BoundaryFunction& f) {
  const auto n = int(f.size());
  return f.periodic ? n / 2 : n - 2;
}

Eigen::VectorXd draw(const BoundaryFunction& like, double norm, NoiseModel model, int band, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const auto n = like.size();
  Eigen::VectorXd v(n);
  if (model == NoiseModel::PerNode) {
    for (auto& x : v) x = normal(rng);
  } else {
    const int top = model == NoiseModel::BandLimited ? std::min(band, max_mode(like)) : max_mode(like);
    if (top < 1) throw Error(ErrorCode::InvalidArgument, "segment too coarse for modal noise");
    BoundarySpectrum s;
    s.periodic = like.periodic;
    s.length = like.arc_length();
    if (like.periodic) {
      s.cos = Eigen::VectorXd::Zero(n / 2 + 1);
      s.sin = Eigen::VectorXd::Zero(n / 2 + 1);
      for (int k = 1; k <= top; ++k) {
        s.cos[k] = normal(rng);
        s.sin[k] = normal(rng);
      }
    } else {
      s.sin = Eigen::VectorXd::Zero(std::max<Eigen::Index>(n - 2, 0));
      for (int m = 1; m <= top; ++m) s.sin[m - 1] = normal(rng);
    }
    v = synthesize(like, s);
  }
  const double current = std::sqrt(like.weights.dot(v.cwiseAbs2()));
  if (current == 0.0) return Eigen::VectorXd::Zero(n);
  return v * (norm / current);
}

}  // namespace

Eigen::VectorXd boundary_noise(const BoundaryFunction& like, double norm, NoiseModel model, int band,
                               std::uint64_t seed) {
  if (!(norm >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise norm must be non-negative");
  std::mt19937_64 rng(seed);
  return draw(like, norm, model, band, rng);
}

NoisyData perturb_cauchy_data(const CauchyData& data, const NoiseSpec& spec) {
  if (!(spec.relative_level >= 0.0)) throw Error(ErrorCode::InvalidArgument, "relative noise level must be >= 0");
  if (spec.model == NoiseModel::BandLimited && spec.band < 1)
    throw Error(ErrorCode::InvalidArgument, "band limit must be at least 1");
  NoisyData out{data, 0.0, 0.0, 0.0};
  const double scale = boundary_l2_norm(data.f) + boundary_l2_norm(data.g);
  if (spec.relative_level == 0.0 || scale == 0.0) return out;

  std::mt19937_64 rng(spec.seed);
  const double share = 0.5 * spec.relative_level * scale;
  const Eigen::VectorXd df = draw(data.f, share, spec.model, spec.band, rng);
  const Eigen::VectorXd dg = draw(data.g, share, spec.model, spec.band, rng);
  out.data.f.values += df;
  out.data.g.values += dg;
  out.dirichlet_deviation = boundary_l2_distance(out.data.f, data.f);
  out.neumann_deviation = boundary_l2_distance(out.data.g, data.g);
  out.epsilon = out.dirichlet_deviation + out.neumann_deviation;
  return out;
}

BoundarySpectrum analyze(const BoundaryFunction& f) {
  const auto n = f.size();
  if (n < 3) throw Error(ErrorCode::TooCoarse, "segment needs at least 3 nodes");
  BoundarySpectrum s;
  s.periodic = f.periodic;
  s.length = f.arc_length();
  if (f.periodic) {
    const Eigen::Index top = n / 2;
    s.cos = Eigen::VectorXd::Zero(top + 1);
    s.sin = Eigen::VectorXd::Zero(top + 1);
    for (Eigen::Index k = 0; k <= top; ++k) {
      double c = 0.0, d = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double t = 2.0 * kPi * double(k * j % n) / double(n);
        c += f.values[j] * std::cos(t);
        d += f.values[j] * std::sin(t);
      }
      const bool edge = k == 0 || (n % 2 == 0 && k == top);
      s.cos[k] = c * (edge ? 1.0 : 2.0) / double(n);
      s.sin[k] = edge ? 0.0 : 2.0 * d / double(n);
    }
    return s;
  }
  s.start = f.values[0];
  s.end = f.values[n - 1];
  const Eigen::Index m_top = n - 2;
  s.sin = Eigen::VectorXd::Zero(m_top);
  for (Eigen::Index m = 1; m <= m_top; ++m) {
    double acc = 0.0;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
      const double trend = s.start + (s.end - s.start) * double(i) / double(n - 1);
      acc += (f.values[i] - trend) * std::sin(kPi * double(m * i % (2 * (n - 1))) / double(n - 1));
    }
    s.sin[m - 1] = 2.0 * acc / double(n - 1);
  }
  return s;
}

Eigen::VectorXd synthesize(const BoundaryFunction& like, const BoundarySpectrum& s, int cutoff) {
  const auto n = like.size();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  if (s.periodic) {
    const Eigen::Index top = s.cos.size() - 1;
    const Eigen::Index keep = cutoff < 0 ? top : std::min<Eigen::Index>(cutoff, top);
    for (Eigen::Index j = 0; j < n; ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k <= keep; ++k) {
        const double t = 2.0 * kPi * double(k * j % n) / double(n);
        acc += s.cos[k] * std::cos(t) + s.sin[k] * std::sin(t);
      }
      v[j] = acc;
    }
    return v;
  }
  const Eigen::Index keep = cutoff < 0 ? s.sin.size() : std::min<Eigen::Index>(cutoff, s.sin.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = s.start + (s.end - s.start) * double(i) / double(n - 1);
    for (Eigen::Index m = 1; m <= keep; ++m)
      acc += s.sin[m - 1] * std::sin(kPi * double(m * i % (2 * (n - 1))) / double(n - 1));
    v[i] = acc;
  }
  return v;
}

double discrete_sobolev_norm(const BoundaryFunction& f, double s) {
  const BoundarySpectrum sp = analyze(f);
  double sum = 0.0;
  if (sp.periodic) {
    const auto n = f.size();
    const Eigen::Index top = sp.cos.size() - 1;
    for (Eigen::Index k = 0; k <= top; ++k) {
      const double w = std::pow(1.0 + double(k * k), s);
      const bool edge = k == 0 || (n % 2 == 0 && k == top);
      const double energy = edge ? sp.cos[k] * sp.cos[k] : 0.5 * (sp.cos[k] * sp.cos[k] + sp.sin[k] * sp.sin[k]);
      sum += w * energy;
    }
    return std::sqrt(sp.length * sum);
  }
  for (Eigen::Index m = 1; m <= sp.sin.size(); ++m) {
    const double freq = double(m) * kPi / sp.length;
    sum += std::pow(1.0 + freq * freq, s) * sp.sin[m - 1] * sp.sin[m - 1];
  }
  return std::sqrt(0.5 * sp.length * sum);
}

SmoothingOperator::SmoothingOperator(double data_regularity, double target_smoothness)
    : r_(data_regularity), s_(target_smoothness) {
  if (!(r_ >= s_) || !(s_ >= 0.0) || !(r_ > 0.0))
    throw Error(ErrorCode::InvalidArgument, "smoothing needs 0 <= s <= r and r > 0");
}

int SmoothingOperator::cutoff(double epsilon) const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise level must be positive");
  const double n = std::ceil(std::pow(epsilon, -1.0 / r_));
  if (!(n < 1e9)) return 1'000'000'000;
  return std::max(1, int(n));
}

BoundaryFunction SmoothingOperator::smooth(const BoundaryFunction& f, double epsilon) const {
  return f.with_values(synthesize(f, analyze(f), cutoff(epsilon)));
}

PerturbedTerm perturbed_affine_term(const FixedPointOperator& exact, const CauchyData& noisy) {
  const FixedPointOperator op = exact.with_data(noisy);
  PerturbedTerm out{op.affine_term_function(), 0.0, 0.0};
  const Eigen::VectorXd diff = out.z.values - exact.affine_term();
  out.deviation_star = exact.norm(diff);
  out.deviation_l2 = exact.diagnostic_norm(diff);
  return out;
}

}  // namespace cauchy
