#include "cauchy/experiment.hpp"

#include "cauchy/errors.hpp"
#include "cauchy/spectral.hpp"
#include "number_format.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#ifndef CAUCHY_VERSION
#define CAUCHY_VERSION "unknown"
#endif

namespace cauchy {

namespace fs = std::filesystem;
using detail::append_number;
using detail::format_number;

// ---------------------------------------------------------------------------
// names

const char* to_string(ExperimentKind k) noexcept {
  switch (k) {
    case ExperimentKind::Rectangle: return "rectangle";
    case ExperimentKind::Annulus: return "annulus";
    case ExperimentKind::AnnulusNoisy: return "annulus_noisy";
    case ExperimentKind::OracleRates: return "oracle_rates";
    case ExperimentKind::SemiConvergence: return "semi_convergence";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Rectangle, ExperimentKind::Annulus, ExperimentKind::AnnulusNoisy,
                 ExperimentKind::OracleRates, ExperimentKind::SemiConvergence})
    if (name == to_string(k)) return k;
  throw Error(ErrorCode::ConfigError, "unknown experiment '" + std::string(name) + "'");
}

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ScheduleKind> kSchedules[] = {
    {ScheduleKind::Identity, "identity"}, {ScheduleKind::Harmonic, "harmonic"}, {ScheduleKind::Constant, "constant"}};
constexpr EnumName<StopKind> kStops[] = {
    {StopKind::SuccessiveDiff, "successive_diff"}, {StopKind::Discrepancy, "discrepancy"}, {StopKind::MaxIter, "max_iter"}};
constexpr EnumName<ResidualNorm> kNorms[] = {{ResidualNorm::BoundaryL2, "l2"}, {ResidualNorm::Star, "star"}};
constexpr EnumName<NoiseModel> kNoise[] = {
    {NoiseModel::PerNode, "per_node"}, {NoiseModel::PerMode, "per_mode"}, {NoiseModel::BandLimited, "band_limited"}};

template <class E, std::size_t N>
const char* name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E value_of(const EnumName<E> (&table)[N], std::string_view s) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string options;
  for (const auto& e : table) options += std::string(options.empty() ? "" : ", ") + e.name;
  throw Error(ErrorCode::ConfigError, "expected one of {" + options + "}, got '" + std::string(s) + "'");
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view s) {
  s = trim(s);
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ConfigError, "malformed number '" + std::string(s) + "'");
  if constexpr (std::is_floating_point_v<T>)
    if (!std::isfinite(v)) throw Error(ErrorCode::ConfigError, "number must be finite");
  return v;
}

bool parse_bool(std::string_view s) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::ConfigError, "expected a boolean, got '" + std::string(s) + "'");
}

template <class T>
std::vector<T> parse_list(std::string_view s) {
  std::vector<T> out;
  s = trim(s);
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(parse_number<T>(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s = s.substr(comma + 1);
  }
  return out;
}

template <class T>
std::string emit_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      append_number(s, v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

#define CM_INT(name) \
  Field { #name, [](const ExperimentConfig& c) { return std::to_string(c.name); }, \
          [](ExperimentConfig& c, std::string_view v) { c.name = parse_number<decltype(c.name)>(v); } }
#define CM_REAL(name) \
  Field { #name, [](const ExperimentConfig& c) { return format_number(c.name); }, \
          [](ExperimentConfig& c, std::string_view v) { c.name = parse_number<double>(v); } }
#define CM_BOOL(name) \
  Field { #name, [](const ExperimentConfig& c) { return std::string(c.name ? "true" : "false"); }, \
          [](ExperimentConfig& c, std::string_view v) { c.name = parse_bool(v); } }
#define CM_ENUM(name, table) \
  Field { #name, [](const ExperimentConfig& c) { return std::string(name_of(table, c.name)); }, \
          [](ExperimentConfig& c, std::string_view v) { c.name = value_of(table, trim(v)); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      CM_INT(n1),
      CM_INT(n2),
      CM_ENUM(schedule, kSchedules),
      CM_REAL(schedule_constant),
      CM_ENUM(stop, kStops),
      CM_REAL(tol),
      CM_ENUM(stop_norm, kNorms),
      CM_REAL(mu),
      CM_INT(max_iter),
      CM_INT(restart_every),
      Field{"snapshots", [](const ExperimentConfig& c) { return emit_list(c.snapshots); },
            [](ExperimentConfig& c, std::string_view v) { c.snapshots = parse_list<int>(v); }},
      CM_BOOL(track_star),
      CM_REAL(noise_level),
      CM_ENUM(noise_model, kNoise),
      CM_INT(noise_band),
      CM_BOOL(smooth),
      CM_REAL(smoothing_regularity),
      CM_INT(seed),
      CM_INT(modes),
      CM_REAL(strip_width),
      Field{"p_values", [](const ExperimentConfig& c) { return emit_list(c.p_values); },
            [](ExperimentConfig& c, std::string_view v) { c.p_values = parse_list<double>(v); }},
      Field{"epsilons", [](const ExperimentConfig& c) { return emit_list(c.epsilons); },
            [](ExperimentConfig& c, std::string_view v) { c.epsilons = parse_list<double>(v); }},
      CM_INT(curve_max_k),
      CM_REAL(psi_decay),
      CM_REAL(source_p),
      CM_INT(semi_max_k),
  };
  return f;
}

#undef CM_INT
#undef CM_REAL
#undef CM_BOOL
#undef CM_ENUM

struct Line {
  int number;
  std::string_view key;
  std::string_view value;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++number;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(number) + ": expected 'key = value'");
    out.push_back({number, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
  }
  return out;
}

}  // namespace

SegmentingSchedule ExperimentConfig::make_schedule() const {
  switch (schedule) {
    case ScheduleKind::Identity: return SegmentingSchedule::identity();
    case ScheduleKind::Harmonic: return SegmentingSchedule::harmonic();
    case ScheduleKind::Constant: return SegmentingSchedule::constant(schedule_constant);
  }
  return SegmentingSchedule::harmonic();
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::Rectangle: break;
    case ExperimentKind::Annulus:
    case ExperimentKind::AnnulusNoisy:
      c.n1 = 121;
      c.n2 = 512;
      c.restart_every = 0;
      break;
    case ExperimentKind::OracleRates:
    case ExperimentKind::SemiConvergence:
      c.schedule = ScheduleKind::Identity;
      c.stop = StopKind::Discrepancy;
      c.stop_norm = ResidualNorm::Star;
      c.restart_every = 0;
      break;
  }
  return c;
}

ExperimentConfig parse_config(std::string_view text, std::optional<ExperimentKind> expected) {
  const auto lines = split_lines(text);
  std::optional<ExperimentKind> kind;
  for (const auto& l : lines) {
    if (l.key != "experiment") continue;
    try {
      const auto k = parse_experiment_kind(l.value);
      if (kind && *kind != k) throw Error(ErrorCode::ConfigError, "conflicting experiment lines");
      if (expected && *expected != k)
        throw Error(ErrorCode::ConfigError, std::string("file is for '") + to_string(k) + "' but the command is '" +
                                                to_string(*expected) + "'");
      kind = k;
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(l.number) + ": " + e.message());
    }
  }
  ExperimentConfig cfg = default_config(kind.value_or(expected.value_or(ExperimentKind::Rectangle)));

  std::map<std::string, int, std::less<>> seen;
  for (const auto& l : lines) {
    if (l.key == "experiment") continue;
    const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) { return l.key == f.key; });
    if (it == fields().end())
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(l.number) + ": unknown key '" + std::string(l.key) + "'");
    if (const auto s = seen.find(l.key); s != seen.end())
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(l.number) + ": key '" + std::string(l.key) +
                                              "' already set on line " + std::to_string(s->second));
    seen.emplace(std::string(l.key), l.number);
    try {
      it->set(cfg, l.value);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(l.number) + " (" + std::string(l.key) + "): " +
                                              e.message());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& file, std::optional<ExperimentKind> expected) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), expected);
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::string out = "experiment = ";
  out += to_string(cfg.experiment);
  out += '\n';
  for (const auto& f : fields()) {
    out += f.key;
    out += " = ";
    out += f.get(cfg);
    out += '\n';
  }
  return out;
}

ExitStatus exit_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidDomain:
    case ErrorCode::TooCoarse:
    case ErrorCode::UnknownSegment: return ExitStatus::ConfigError;
    default: return ExitStatus::SolverFailure;
  }
}

bool RunResult::all_passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::InvalidArgument, "SHA-256 unavailable");
  char buf[1 << 15];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf, std::size_t(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

// ---------------------------------------------------------------------------
// experiment runners

BenchmarkProblem rectangle_benchmark(int n1, int n2) {
  Grid g(Domain::rectangle(1.0, 0.75), n1, n2);
  CauchyData d{sample_boundary(g, Segment::Gamma1, [](double x) { return std::sin(std::numbers::pi * x); }),
               zero_boundary(g, Segment::Gamma1),
               {}};
  d.extra_bc.emplace(Segment::Gamma3, BoundaryCondition::dirichlet(zero_boundary(g, Segment::Gamma3)));
  d.extra_bc.emplace(Segment::Gamma4, BoundaryCondition::dirichlet(zero_boundary(g, Segment::Gamma4)));
  const double h = 0.75;
  auto flux = sample_boundary(g, Segment::Gamma2, [&](double x) { return std::numbers::pi * std::sinh(std::numbers::pi * h) * std::sin(std::numbers::pi * x); });
  auto trace = sample_boundary(g, Segment::Gamma2, [&](double x) { return std::cosh(std::numbers::pi * h) * std::sin(std::numbers::pi * x); });
  return {g, std::move(d), std::move(flux), std::move(trace)};
}

BenchmarkProblem annulus_benchmark(int n1, int n2) {
  Grid g(Domain::annulus(1.0, 3.0), n1, n2);
  CauchyData d{sample_boundary(g, Segment::Gamma1, [](double t) { return std::sin(t) - 0.5 * std::sin(2.0 * t); }),
               zero_boundary(g, Segment::Gamma1),
               {}};
  auto flux = sample_boundary(g, Segment::Gamma2,
                              [](double t) { return 4.0 / 9.0 * std::sin(t) - 40.0 / 27.0 * std::sin(2.0 * t); });
  auto trace = sample_boundary(g, Segment::Gamma2,
                               [](double t) { return 5.0 / 3.0 * std::sin(t) - 41.0 / 18.0 * std::sin(2.0 * t); });
  return {g, std::move(d), std::move(flux), std::move(trace)};
}

namespace {


class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& content) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + p.string());
    out << content;
    out.close();
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + p.string());
    files_.push_back(p);
  }

  const std::vector<fs::path>& files() const noexcept { return files_; }
  const fs::path& dir() const noexcept { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    for (auto h : header) column(h);
    text_.back() = '\n';
  }
  explicit Csv(const std::vector<std::string>& header) {
    for (const auto& h : header) column(h);
    text_.back() = '\n';
  }
  Csv& operator<<(double v) {
    sep();
    append_number(text_, v);
    return *this;
  }
  Csv& operator<<(int v) {
    sep();
    text_ += std::to_string(v);
    return *this;
  }
  Csv& operator<<(std::string_view v) {
    sep();
    text_ += v;
    return *this;
  }
  void end_row() {
    text_ += '\n';
    fresh_ = true;
  }
  const std::string& str() const noexcept { return text_; }

 private:
  void column(std::string_view h) {
    text_ += h;
    text_ += ',';
  }
  void sep() {
    if (!fresh_) text_ += ',';
    fresh_ = false;
  }
  std::string text_;
  bool fresh_ = true;
};

std::string history_csv(const IterationRecord& rec) {
  std::ostringstream ss;
  write_csv(ss, rec);
  return ss.str();
}

void add_check(RunResult& r, std::string name, bool passed, std::string detail) {
  r.checks.push_back({std::move(name), passed, std::move(detail)});
}

struct Verdict {
  bool passed;
  std::string detail;
};

void add_check(RunResult& r, std::string name, Verdict v) {
  r.checks.push_back({std::move(name), v.passed, std::move(v.detail)});
}

Verdict residuals_non_increasing(const IterationRecord& rec, double slack) {
  for (std::size_t i = 1; i < rec.steps.size(); ++i) {
    const double a = rec.steps[i - 1].residual_star, b = rec.steps[i].residual_star;
    if (std::isnan(a) || std::isnan(b)) continue;
    if (b > a + slack)
      return {false, "residual rises at k = " + std::to_string(rec.steps[i].k) + ": " + format_number(a) + " -> " +
                         format_number(b)};
  }
  return {true, "checked " + std::to_string(rec.steps.size()) + " steps"};
}

IterationConfig iteration_config(const ExperimentConfig& c, double discrepancy_eps) {
  IterationConfig it;
  it.schedule = c.make_schedule();
  it.max_iter = c.max_iter;
  it.track_star = c.track_star;
  it.snapshots = c.snapshots;
  switch (c.stop) {
    case StopKind::SuccessiveDiff: it.stop = SuccessiveDiff{c.tol, c.stop_norm}; break;
    case StopKind::Discrepancy: it.stop = Discrepancy{c.mu, discrepancy_eps, c.stop_norm}; break;
    case StopKind::MaxIter: it.stop = MaxIterOnly{}; break;
  }
  return it;
}

struct VariantResult {
  IterationRecord record;
  std::vector<std::pair<int, double>> trace_errors;  // snapshot k -> relative trace error
};

VariantResult run_variant(const FixedPointOperator& op, const BenchmarkProblem& s, const IterationConfig& it,
                          const std::string& prefix, Output& out) {
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(op.dimension());
  const Eigen::VectorXd reference = mask_inactive(op, s.exact_flux).values;
  VariantResult v{mann_mazya_run(op, start, it, reference), {}};
  out.write(prefix + "_history.csv", history_csv(v.record));

  std::vector<std::string> header{"s", "exact_trace", "exact_flux"};
  std::vector<BoundaryFunction> traces;
  auto snaps = v.record.snapshots;
  std::sort(snaps.begin(), snaps.end(), [](const Snapshot& a, const Snapshot& b) { return a.k < b.k; });
  for (const auto& sn : snaps) {
    header.push_back("trace_k" + std::to_string(sn.k));
    header.push_back("flux_k" + std::to_string(sn.k));
    traces.push_back(op.apply_Ln(op.gamma2_function(sn.averaged)));
    v.trace_errors.emplace_back(sn.k, boundary_l2_distance(traces.back(), s.exact_trace) /
                                          boundary_l2_norm(s.exact_trace));
  }
  Csv csv(header);
  for (Eigen::Index i = 0; i < s.exact_trace.size(); ++i) {
    csv << s.exact_trace.parameters[i] << s.exact_trace.values[i] << s.exact_flux.values[i];
    for (std::size_t j = 0; j < snaps.size(); ++j) csv << traces[j].values[i] << snaps[j].averaged[i];
    csv.end_row();
  }
  out.write(prefix + "_snapshots.csv", csv.str());
  return v;
}

Verdict errors_decreasing(const std::vector<std::pair<int, double>>& e) {
  Verdict v{true, {}};
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) v.detail += ", ";
    v.detail += "k=" + std::to_string(e[i].first) + ": " + format_number(e[i].second);
    if (i && e[i].second > e[i - 1].second) v.passed = false;
  }
  return v;
}

void run_pde(const ExperimentConfig& c, const BenchmarkProblem& s, const std::string& name, Output& out, RunResult& result) {
  const FixedPointOperator op(s.grid, CoefficientField::laplace(), s.data);
  const IterationConfig it = iteration_config(c, 0.0);
  if (c.stop == StopKind::Discrepancy)
    throw Error(ErrorCode::ConfigError, "exact-data experiments have no noise level; use successive_diff or max_iter");

  const auto plain = run_variant(op, s, it, name, out);
  result.warnings.insert(result.warnings.end(), plain.record.warnings.begin(), plain.record.warnings.end());

  Csv summary({"variant", "k", "trace_error_rel", "flux_error_rel", "stop_reason"});
  const double flux_norm = boundary_l2_norm(s.exact_flux);
  auto summarize = [&](const std::string& variant, const VariantResult& v) {
    for (const auto& [k, err] : v.trace_errors) {
      const auto& step = v.record.steps[std::size_t(k - 1)];
      summary << variant << k << err << step.err_l2 / flux_norm
              << (k == v.record.stop_index ? to_string(v.record.stop_reason) : "");
      summary.end_row();
    }
  };
  summarize("plain", plain);

  add_check(result, name + ": residuals non-increasing", residuals_non_increasing(plain.record, 1e-10));
  add_check(result, name + ": trace error decreases across snapshots", errors_decreasing(plain.trace_errors));
  if (c.stop == StopKind::SuccessiveDiff)
    add_check(result, name + ": stopped by successive-difference rule", plain.record.stopped_by_rule(),
              "stop index " + std::to_string(plain.record.stop_index));

  if (c.restart_every > 0) {
    IterationConfig rit = it;
    rit.restart_every = c.restart_every;
    const auto restarted = run_variant(op, s, rit, name + "_restart", out);
    summarize("restart", restarted);
    add_check(result, name + "_restart: residuals non-increasing",
              residuals_non_increasing(restarted.record, 1e-10));
    add_check(result, name + "_restart: trace error decreases across snapshots",
              errors_decreasing(restarted.trace_errors));
  }
  out.write(name + "_summary.csv", summary.str());
}

void run_annulus_noisy(const ExperimentConfig& c, Output& out, RunResult& result) {
  const BenchmarkProblem s = annulus_benchmark(c.n1, c.n2);
  const FixedPointOperator exact(s.grid, CoefficientField::laplace(), s.data);

  const NoiseSpec spec{c.noise_level, c.seed, c.noise_model, c.noise_band};
  const NoisyData noisy = perturb_cauchy_data(s.data, spec);
  CauchyData used = noisy.data;
  int cutoff = -1;
  if (c.smooth && noisy.epsilon > 0.0) {
    const SmoothingOperator smoother(c.smoothing_regularity);
    cutoff = smoother.cutoff(noisy.epsilon);
    used.f = smoother.smooth(noisy.data.f, noisy.epsilon);
    used.g = smoother.smooth(noisy.data.g, noisy.epsilon);
  }
  const PerturbedTerm pz = perturbed_affine_term(exact, used);
  const FixedPointOperator perturbed = exact.with_data(used);

  Csv data_csv({"theta", "f", "f_noisy", "f_used", "g", "g_noisy", "g_used"});
  for (Eigen::Index i = 0; i < s.data.f.size(); ++i) {
    data_csv << s.data.f.parameters[i] << s.data.f.values[i] << noisy.data.f.values[i] << used.f.values[i]
             << s.data.g.values[i] << noisy.data.g.values[i] << used.g.values[i];
    data_csv.end_row();
  }
  out.write("annulus_noisy_data.csv", data_csv.str());

  const double z_eps = pz.deviation_star > 0.0 ? pz.deviation_star : 1e-300;
  const IterationConfig it = iteration_config(c, z_eps);
  const auto clean = run_variant(exact, s, it, "annulus_noisy_exact", out);
  const auto dirty = run_variant(perturbed, s, it, "annulus_noisy_perturbed", out);
  result.warnings.insert(result.warnings.end(), dirty.record.warnings.begin(), dirty.record.warnings.end());

  Csv traj({"k", "exact_err_l2", "noisy_err_l2", "exact_err_star", "noisy_err_star", "exact_residual_star",
            "noisy_residual_star"});
  const std::size_t rows = std::max(clean.record.steps.size(), dirty.record.steps.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < rows; ++i) {
    const StepRecord* a = i < clean.record.steps.size() ? &clean.record.steps[i] : nullptr;
    const StepRecord* b = i < dirty.record.steps.size() ? &dirty.record.steps[i] : nullptr;
    traj << int(i + 1) << (a ? a->err_l2 : nan) << (b ? b->err_l2 : nan) << (a ? a->err_star : nan)
         << (b ? b->err_star : nan) << (a ? a->residual_star : nan) << (b ? b->residual_star : nan);
    traj.end_row();
  }
  out.write("annulus_noisy_trajectories.csv", traj.str());

  const auto stop_k = discrepancy_index(dirty.record, c.mu, z_eps);
  Csv summary({"quantity", "value"});
  summary << "epsilon_data" << noisy.epsilon;
  summary.end_row();
  summary << "dirichlet_deviation" << noisy.dirichlet_deviation;
  summary.end_row();
  summary << "neumann_deviation" << noisy.neumann_deviation;
  summary.end_row();
  summary << "smoothing_cutoff" << cutoff;
  summary.end_row();
  summary << "z_deviation_star" << pz.deviation_star;
  summary.end_row();
  summary << "z_deviation_l2" << pz.deviation_l2;
  summary.end_row();
  summary << "discrepancy_index" << (stop_k ? *stop_k : -1);
  summary.end_row();
  summary << "exact_stop_index" << clean.record.stop_index;
  summary.end_row();
  summary << "noisy_stop_index" << dirty.record.stop_index;
  summary.end_row();
  for (const auto& [k, e] : clean.trace_errors) {
    summary << ("exact_trace_error_k" + std::to_string(k)) << e;
    summary.end_row();
  }
  for (const auto& [k, e] : dirty.trace_errors) {
    summary << ("noisy_trace_error_k" + std::to_string(k)) << e;
    summary.end_row();
  }
  out.write("annulus_noisy_summary.csv", summary.str());

  add_check(result, "annulus_noisy: residuals non-increasing", residuals_non_increasing(dirty.record, 1e-10));
  // The two trajectories should agree early and separate later.
  const std::size_t common = std::min(clean.record.steps.size(), dirty.record.steps.size());
  if (common >= 2) {
    auto gap = [&](std::size_t i) {
      return std::abs(dirty.record.steps[i].err_l2 - clean.record.steps[i].err_l2) / clean.record.steps[i].err_l2;
    };
    const double early = gap(0), late = gap(common - 1);
    add_check(result, "annulus_noisy: noisy trajectory departs from exact one", late > early,
              "relative gap k=1: " + format_number(early) + ", k=" + std::to_string(common) + ": " +
                  format_number(late));
  }
}

FourierTrace decaying_psi(int modes, double decay) {
  FourierTrace psi{Eigen::VectorXd(modes)};
  for (int j = 0; j < modes; ++j) psi.coefficients[j] = std::pow(double(j + 1), -decay);
  return psi;
}

std::string p_label(double p) {
  std::string s = format_number(p);
  std::replace(s.begin(), s.end(), '.', '_');
  return "p" + s;
}

void run_oracle_rates(const ExperimentConfig& c, Output& out, RunResult& result) {
  if (c.epsilons.empty()) throw Error(ErrorCode::ConfigError, "epsilons: the noise-level grid is empty");
  if (c.p_values.empty()) throw Error(ErrorCode::ConfigError, "p_values: no source exponents given");

  Csv fits({"p", "stop_slope", "stop_intercept", "work_slope", "work_intercept", "scaled_sup_100",
            "scaled_sup_10000", "max_error_ratio", "first_error_ratio"});
  for (double p : c.p_values) {
    RateConfig rc;
    rc.p = p;
    rc.psi = decaying_psi(c.modes, c.psi_decay);
    rc.width = c.strip_width;
    rc.epsilons = c.epsilons;
    rc.mu = c.mu;
    rc.seed = c.seed;
    rc.schedule = c.make_schedule();
    rc.curve_max_k = c.curve_max_k;
    const RateTable t = run_rate_experiment(rc);

    Csv rows({"epsilon", "stop_index", "error", "residual", "error_ratio", "work"});
    double max_ratio = 0.0;
    for (const auto& r : t.rows) {
      rows << r.epsilon << r.stop_index << r.error << r.residual << r.error_ratio << r.work;
      rows.end_row();
      max_ratio = std::max(max_ratio, r.error_ratio);
    }
    out.write("oracle_rates_" + p_label(p) + ".csv", rows.str());

    Csv curve({"k", "error", "scaled_error"});
    for (const auto& cp : t.exact_curve) {
      curve << cp.k << cp.error << cp.scaled;
      curve.end_row();
    }
    out.write("oracle_curve_" + p_label(p) + ".csv", curve.str());

    const int k_hi = std::min(c.curve_max_k, 10'000);
    const double s_lo = scaled_error_sup(t, 2, 100), s_hi = scaled_error_sup(t, 2, k_hi);
    fits << p << t.stop_slope.slope << t.stop_slope.intercept << t.work_slope.slope << t.work_slope.intercept
         << s_lo << s_hi << max_ratio << t.rows.front().error_ratio;
    fits.end_row();

    const std::string tag = "oracle p=" + format_number(p);
    add_check(result, tag + ": stopping-index slope in [-2.3, -1.7]",
              t.stop_slope.slope >= -2.3 && t.stop_slope.slope <= -1.7, "slope " + format_number(t.stop_slope.slope));
    add_check(result, tag + ": scaled error envelope varies <= 30%", s_lo > 0.0 && s_hi / s_lo - 1.0 <= 0.3,
              "sup at 1e2 " + format_number(s_lo) + ", up to " + std::to_string(k_hi) + " " + format_number(s_hi));
    add_check(result, tag + ": noisy error ratio bounded", max_ratio <= 2.0 * t.rows.front().error_ratio,
              "max " + format_number(max_ratio) + ", coarsest " + format_number(t.rows.front().error_ratio));
  }
  out.write("oracle_fits.csv", fits.str());
}

void run_semi_convergence(const ExperimentConfig& c, Output& out, RunResult& result) {
  if (c.semi_max_k < 3) throw Error(ErrorCode::ConfigError, "semi_max_k must be at least 3");
  const FourierTrace psi = decaying_psi(c.modes, c.psi_decay);
  const auto shape = SpectralOperator::from_fixed_point(FourierTrace{Eigen::VectorXd::Zero(c.modes)}, c.strip_width);
  const FourierTrace target = source_element(c.source_p, psi, shape);
  const auto exact = SpectralOperator::from_fixed_point(target, c.strip_width);
  const double eps = c.noise_level * exact.norm(exact.affine_term());
  if (!(eps > 0.0)) throw Error(ErrorCode::ConfigError, "noise_level must be positive for semi_convergence");
  const auto noisy = exact.with_affine_term(perturb_affine_term(exact, eps, c.seed));

  IterationConfig it;
  it.schedule = c.make_schedule();
  it.max_iter = c.semi_max_k;
  it.stop = MaxIterOnly{};
  const auto rec = mann_mazya_run(noisy, Eigen::VectorXd::Zero(exact.dimension()), it, target.coefficients);

  Csv csv({"k", "error", "residual"});
  int k_min = 1;
  double e_min = INFINITY;
  for (const auto& s : rec.steps) {
    csv << s.k << s.err_star << s.residual_star;
    csv.end_row();
    if (s.err_star < e_min) e_min = s.err_star, k_min = s.k;
  }
  out.write("semi_convergence.csv", csv.str());

  const auto k_stop = discrepancy_index(rec, c.mu, eps);
  const double e_stop = k_stop ? rec.steps[std::size_t(*k_stop - 1)].err_star : INFINITY;
  Csv summary({"quantity", "value"});
  summary << "epsilon" << eps;
  summary.end_row();
  summary << "minimum_k" << k_min;
  summary.end_row();
  summary << "minimum_error" << e_min;
  summary.end_row();
  summary << "discrepancy_k" << (k_stop ? *k_stop : -1);
  summary.end_row();
  summary << "discrepancy_error" << e_stop;
  summary.end_row();
  out.write("semi_convergence_summary.csv", summary.str());

  add_check(result, "semi-convergence: interior minimum", k_min > 1 && k_min < c.semi_max_k,
            "minimum at k = " + std::to_string(k_min));
  add_check(result, "semi-convergence: discrepancy stop within 2x of minimum", k_stop && e_stop <= 2.0 * e_min,
            k_stop ? "stop k = " + std::to_string(*k_stop) + ", ratio " + format_number(e_stop / e_min)
                   : std::string("discrepancy level never reached"));
}

std::string plot_script(ExperimentKind kind) {
  std::string s = R"(#!/usr/bin/env python3
# Plots the CSV files in this directory. Needs matplotlib.
import csv
import glob
import os
import sys

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit("matplotlib is not installed")

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {key: [float(r[key]) if r[key] not in ("", "nan") else float("nan") for r in rows] for key in rows[0]}


def snapshots(path):
    data = read(os.path.basename(path))
    fig, ax = plt.subplots()
    ax.plot(data["s"], data["exact_trace"], "k", lw=2, label="exact")
    for key in data:
        if key.startswith("trace_k"):
            ax.plot(data["s"], data[key], label=key[6:])
    ax.legend()
    fig.savefig(path.replace(".csv", ".png"), dpi=120)


def history(path):
    data = read(os.path.basename(path))
    fig, ax = plt.subplots()
    for key in ("residual_star", "residual_l2", "err_l2"):
        ax.semilogy(data["k"], data[key], label=key)
    ax.legend()
    fig.savefig(path.replace(".csv", ".png"), dpi=120)


)";
  switch (kind) {
    case ExperimentKind::Rectangle:
    case ExperimentKind::Annulus:
      s += R"(for p in glob.glob(os.path.join(HERE, "*_snapshots.csv")):
    snapshots(p)
for p in glob.glob(os.path.join(HERE, "*_history.csv")):
    history(p)
)";
      break;
    case ExperimentKind::AnnulusNoisy:
      s += R"(for p in glob.glob(os.path.join(HERE, "*_snapshots.csv")):
    snapshots(p)
t = read("annulus_noisy_trajectories.csv")
fig, ax = plt.subplots()
ax.semilogy(t["k"], t["exact_err_l2"], label="exact data")
ax.semilogy(t["k"], t["noisy_err_l2"], lw=2, label="noisy data")
ax.legend()
fig.savefig(os.path.join(HERE, "annulus_noisy_trajectories.png"), dpi=120)
d = read("annulus_noisy_data.csv")
fig, axes = plt.subplots(1, 2, figsize=(10, 4))
for ax, key in zip(axes, ("f", "g")):
    ax.plot(d["theta"], d[key], "k", label=key)
    ax.plot(d["theta"], d[key + "_noisy"], label="noisy")
    ax.plot(d["theta"], d[key + "_used"], label="smoothed")
    ax.legend()
fig.savefig(os.path.join(HERE, "annulus_noisy_data.png"), dpi=120)
)";
      break;
    case ExperimentKind::OracleRates:
      s += R"(for p in glob.glob(os.path.join(HERE, "oracle_curve_*.csv")):
    c = read(os.path.basename(p))
    fig, ax = plt.subplots()
    ax.loglog(c["k"], c["error"], label="error")
    ax.loglog(c["k"], c["scaled_error"], label="error * (ln k)^p")
    ax.legend()
    fig.savefig(p.replace(".csv", ".png"), dpi=120)
for p in glob.glob(os.path.join(HERE, "oracle_rates_*.csv")):
    r = read(os.path.basename(p))
    fig, ax = plt.subplots()
    ax.loglog(r["epsilon"], r["stop_index"], "o-")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("stopping index")
    fig.savefig(p.replace(".csv", ".png"), dpi=120)
)";
      break;
    case ExperimentKind::SemiConvergence:
      s += R"(c = read("semi_convergence.csv")
fig, ax = plt.subplots()
ax.semilogy(c["k"], c["error"], label="error")
ax.semilogy(c["k"], c["residual"], label="residual")
ax.legend()
fig.savefig(os.path.join(HERE, "semi_convergence.png"), dpi=120)
)";
      break;
  }
  return s;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  Output out(out_dir);
  RunResult result;

  switch (cfg.experiment) {
    case ExperimentKind::Rectangle: run_pde(cfg, rectangle_benchmark(cfg.n1, cfg.n2), "rectangle", out, result); break;
    case ExperimentKind::Annulus: run_pde(cfg, annulus_benchmark(cfg.n1, cfg.n2), "annulus", out, result); break;
    case ExperimentKind::AnnulusNoisy: run_annulus_noisy(cfg, out, result); break;
    case ExperimentKind::OracleRates: run_oracle_rates(cfg, out, result); break;
    case ExperimentKind::SemiConvergence: run_semi_convergence(cfg, out, result); break;
  }
  out.write("plot.py", plot_script(cfg.experiment));
  out.write("config.txt", emit_config(cfg));

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::ordered_json m;
  m["tool"] = "cauchy-mann";
  m["version"] = CAUCHY_VERSION;
  m["experiment"] = to_string(cfg.experiment);
  m["started_utc"] = started;
  m["wall_seconds"] = result.wall_seconds;
  m["seed"] = cfg.seed;
  m["initial_guess"] = "zero";
  nlohmann::ordered_json conf;
  const std::string config_text = emit_config(cfg);
  for (const auto& l : split_lines(config_text)) conf[std::string(l.key)] = std::string(l.value);
  m["config"] = conf;
  m["files"] = nlohmann::json::array();
  for (const auto& f : out.files())
    m["files"].push_back({{"name", f.filename().string()},
                          {"bytes", fs::file_size(f)},
                          {"sha256", sha256_file(f)}});
  m["checks"] = nlohmann::json::array();
  for (const auto& c : result.checks) m["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  m["warnings"] = result.warnings;
  out.write("manifest.json", m.dump(2) + "\n");

  result.files = out.files();
  return result;
}

}  // namespace cauchy
