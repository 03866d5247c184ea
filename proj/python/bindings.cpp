#include "cauchy/errors.hpp"
#include "cauchy/experiment.hpp"
#include "cauchy/fixed_point.hpp"
#include "cauchy/mann.hpp"
#include "cauchy/noise.hpp"
#include "cauchy/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace cauchy;

namespace {

SegmentingSchedule schedule_from(const std::string& name, double c) {
  if (name == "identity") return SegmentingSchedule::identity();
  if (name == "harmonic") return SegmentingSchedule::harmonic();
  if (name == "constant") return SegmentingSchedule::constant(c);
  throw Error(ErrorCode::InvalidArgument, "unknown schedule '" + name + "'");
}

ResidualNorm norm_from(const std::string& name) {
  if (name == "star") return ResidualNorm::Star;
  if (name == "l2") return ResidualNorm::BoundaryL2;
  throw Error(ErrorCode::InvalidArgument, "unknown norm '" + name + "'");
}

py::dict record_to_dict(const IterationRecord& rec) {
  const auto n = rec.steps.size();
  Eigen::VectorXi k(Eigen::Index(n), 1);
  Eigen::VectorXd rs(n), rl(n), dl(n), es(n), el(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = rec.steps[i];
    const auto j = Eigen::Index(i);
    k[j] = s.k;
    rs[j] = s.residual_star;
    rl[j] = s.residual_l2;
    dl[j] = s.diff_l2;
    es[j] = s.err_star;
    el[j] = s.err_l2;
  }
  py::dict snaps;
  for (const auto& s : rec.snapshots) snaps[py::int_(s.k)] = s.averaged;
  py::dict d;
  d["k"] = k;
  d["residual_star"] = rs;
  d["residual_l2"] = rl;
  d["diff_l2"] = dl;
  d["err_star"] = es;
  d["err_l2"] = el;
  d["stop_index"] = rec.stop_index;
  d["stop_reason"] = to_string(rec.stop_reason);
  d["solution"] = rec.solution;
  d["snapshots"] = snaps;
  d["warnings"] = rec.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mann-Maz'ya iteration for elliptic Cauchy problems";
  py::register_exception<Error>(m, "CauchyError", PyExc_RuntimeError);

  py::enum_<Segment>(m, "Segment")
      .value("GAMMA1", Segment::Gamma1)
      .value("GAMMA2", Segment::Gamma2)
      .value("GAMMA3", Segment::Gamma3)
      .value("GAMMA4", Segment::Gamma4);

  py::class_<Domain>(m, "Domain")
      .def_static("rectangle", static_cast<Domain (*)(double, double)>(&Domain::rectangle), py::arg("width"), py::arg("height"))
      .def_static("annulus", static_cast<Domain (*)(double, double)>(&Domain::annulus), py::arg("inner_radius"), py::arg("outer_radius"))
      .def_property_readonly("is_annulus", &Domain::is_annulus);

  py::class_<Grid>(m, "Grid")
      .def(py::init<const Domain&, int, int>(), py::arg("domain"), py::arg("n1"), py::arg("n2"))
      .def_property_readonly("n1", &Grid::n1)
      .def_property_readonly("n2", &Grid::n2)
      .def_property_readonly("num_nodes", &Grid::num_nodes)
      .def("segment_parameters",
           [](const Grid& g, Segment s) {
             const auto p = g.segment_parameters(s);
             return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(p.data(), Eigen::Index(p.size())));
           })
      .def("segment_weights", [](const Grid& g, Segment s) {
        const auto w = g.segment_weights(s);
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size())));
      });

  py::class_<AffineOperator>(m, "AffineOperator")
      .def_property_readonly("dimension", &AffineOperator::dimension)
      .def("apply", &AffineOperator::apply)
      .def("apply_linear", &AffineOperator::apply_linear)
      .def_property_readonly("affine_term", &AffineOperator::affine_term)
      .def("inner", &AffineOperator::inner)
      .def("norm", &AffineOperator::norm)
      .def("diagnostic_norm", &AffineOperator::diagnostic_norm);

  py::class_<FixedPointOperator, AffineOperator>(m, "CauchyOperator")
      .def_property_readonly("active_mask", &FixedPointOperator::active_mask)
      .def_property_readonly("parameters", [](const FixedPointOperator& op) {
        return op.affine_term_function().parameters;
      })
      .def("dirichlet_trace", [](const FixedPointOperator& op, const Eigen::VectorXd& phi) {
        return op.apply_Ln(op.gamma2_function(phi)).values;
      });

  py::class_<BenchmarkProblem>(m, "BenchmarkProblem")
      .def_property_readonly("grid", [](const BenchmarkProblem& b) { return b.grid; })
      .def_property_readonly("exact_flux", [](const BenchmarkProblem& b) { return b.exact_flux.values; })
      .def_property_readonly("exact_trace", [](const BenchmarkProblem& b) { return b.exact_trace.values; })
      .def_property_readonly("parameters", [](const BenchmarkProblem& b) { return b.exact_flux.parameters; })
      .def("operator", [](const BenchmarkProblem& b) {
        return FixedPointOperator(b.grid, CoefficientField::laplace(), b.data);
      });

  m.def("rectangle_benchmark", &rectangle_benchmark, py::arg("n1") = 65, py::arg("n2") = 49);
  m.def("annulus_benchmark", &annulus_benchmark, py::arg("n1") = 31, py::arg("n2") = 128);

  py::class_<SpectralOperator, AffineOperator>(m, "SpectralOperator")
      .def_static(
          "from_fixed_point",
          [](const Eigen::VectorXd& phi, double width) {
            return SpectralOperator::from_fixed_point(FourierTrace{phi}, width);
          },
          py::arg("fixed_point"), py::arg("width") = SpectralOperator::kSquareWidth)
      .def_property_readonly("eigenvalues", &SpectralOperator::eigenvalues)
      .def_property_readonly("gaps", &SpectralOperator::gaps)
      .def("with_affine_term", &SpectralOperator::with_affine_term)
      .def("exact_fixed_point", [](const SpectralOperator& op) { return op.exact_fixed_point().coefficients; });

  m.def(
      "source_element",
      [](double p, const Eigen::VectorXd& psi, const SpectralOperator& op) {
        return source_element(p, FourierTrace{psi}, op).coefficients;
      },
      py::arg("p"), py::arg("psi"), py::arg("op"));
  m.def("perturb_affine_term", &perturb_affine_term, py::arg("op"), py::arg("epsilon"), py::arg("seed") = 1);
  m.def("strip_eigenvalue", &strip_eigenvalue, py::arg("j"), py::arg("width"));
  m.def("strip_gap", &strip_gap, py::arg("j"), py::arg("width"));
  m.def("log_e_over_gap", &log_e_over_gap, py::arg("j"), py::arg("width"));
  m.def("log_source_filter", &log_source_filter, py::arg("lam"), py::arg("p"));
  m.def("appendix_f", &appendix_f, py::arg("lam"), py::arg("k"), py::arg("p"));
  m.def("appendix_g", &appendix_g, py::arg("lam"), py::arg("k"), py::arg("p"));
  m.def("appendix_h", &appendix_h, py::arg("t"), py::arg("p"));

  m.def(
      "segmenting_matrix",
      [](const std::string& schedule, int n, double c) { return segmenting_matrix(schedule_from(schedule, c), n); },
      py::arg("schedule"), py::arg("n"), py::arg("c") = 0.5);

  m.def(
      "mann_mazya_run",
      [](const AffineOperator& op, std::optional<Eigen::VectorXd> initial, const std::string& schedule, int max_iter,
         const std::string& stop, double tol, double mu, double epsilon, const std::string& norm,
         std::optional<int> restart_every, std::vector<int> snapshots, std::optional<Eigen::VectorXd> reference,
         double c) {
        IterationConfig cfg;
        cfg.schedule = schedule_from(schedule, c);
        cfg.max_iter = max_iter;
        cfg.restart_every = restart_every;
        cfg.snapshots = std::move(snapshots);
        if (stop == "successive_diff")
          cfg.stop = SuccessiveDiff{tol, norm_from(norm)};
        else if (stop == "discrepancy")
          cfg.stop = Discrepancy{mu, epsilon, norm_from(norm)};
        else if (stop == "max_iter")
          cfg.stop = MaxIterOnly{};
        else
          throw Error(ErrorCode::InvalidArgument, "unknown stop rule '" + stop + "'");
        const Eigen::VectorXd start = initial.value_or(Eigen::VectorXd::Zero(op.dimension()));
        IterationRecord rec;
        {
          py::gil_scoped_release release;
          rec = mann_mazya_run(op, start, cfg, reference);
        }
        return record_to_dict(rec);
      },
      py::arg("op"), py::arg("initial") = py::none(), py::arg("schedule") = "harmonic", py::arg("max_iter") = 500,
      py::arg("stop") = "successive_diff", py::arg("tol") = 1e-3, py::arg("mu") = 3.0, py::arg("epsilon") = 0.0,
      py::arg("norm") = "l2", py::arg("restart_every") = py::none(), py::arg("snapshots") = std::vector<int>{},
      py::arg("reference") = py::none(), py::arg("c") = 0.5);

  m.def("default_config", [](const std::string& kind) { return emit_config(default_config(parse_experiment_kind(kind))); },
        py::arg("experiment"), "Default configuration text of an experiment.");
  m.def("normalize_config", [](const std::string& text) { return emit_config(parse_config(text)); },
        py::arg("text"), "Parses configuration text and emits it with every key.");
  m.def(
      "run_experiment",
      [](const std::string& text, const std::filesystem::path& out) {
        const auto cfg = parse_config(text);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(cfg, out);
        }
        py::list checks;
        for (const auto& c : r.checks) checks.append(py::make_tuple(c.name, c.passed, c.detail));
        py::dict d;
        d["files"] = r.files;
        d["checks"] = checks;
        d["warnings"] = r.warnings;
        d["wall_seconds"] = r.wall_seconds;
        return d;
      },
      py::arg("config_text"), py::arg("out_dir"));
  m.def("sha256_file", &sha256_file, py::arg("path"));
}
