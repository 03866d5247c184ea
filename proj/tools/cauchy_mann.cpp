#include "cauchy/errors.hpp"
#include "cauchy/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

namespace {

constexpr int status(cauchy::ExitStatus s) { return static_cast<int>(s); }

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool check = false;
  bool print_config = false;
};

int run(cauchy::ExperimentKind kind, const Options& opt) {
  cauchy::ExperimentConfig cfg =
      opt.config.empty() ? cauchy::default_config(kind) : cauchy::load_config(opt.config, kind);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.print_config) {
    std::cout << cauchy::emit_config(cfg);
    return status(cauchy::ExitStatus::Ok);
  }
  const std::string out = opt.out.empty() ? std::string("out/") + cauchy::to_string(kind) : opt.out;
  const auto result = cauchy::run_experiment(cfg, out);

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& c : result.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
  std::cout << "wrote " << result.files.size() << " files to " << out << " in " << result.wall_seconds << " s\n";
  return status(opt.check && !result.all_passed() ? cauchy::ExitStatus::CheckFailure : cauchy::ExitStatus::Ok);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mann-Maz'ya iteration experiments for elliptic Cauchy problems"};
  app.require_subcommand(1);
  Options opt;
  std::optional<cauchy::ExperimentKind> chosen;

  const std::pair<cauchy::ExperimentKind, const char*> kinds[] = {
      {cauchy::ExperimentKind::Rectangle, "rectangle benchmark, plain and restarted runs"},
      {cauchy::ExperimentKind::Annulus, "annulus benchmark"},
      {cauchy::ExperimentKind::AnnulusNoisy, "annulus with perturbed and smoothed Cauchy data"},
      {cauchy::ExperimentKind::OracleRates, "stopping indices and error rates on the spectral oracle"},
      {cauchy::ExperimentKind::SemiConvergence, "error curve and discrepancy stop for noisy oracle data"},
  };
  for (const auto& [kind, description] : kinds) {
    auto* sub = app.add_subcommand(cauchy::to_string(kind), description);
    sub->add_option("--config", opt.config, "key = value configuration file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory (default out/<subcommand>)");
    sub->add_option("--seed", opt.seed, "override the configured random seed");
    sub->add_flag("--check", opt.check, "exit with status 4 when a built-in check fails");
    sub->add_flag("--print-config", opt.print_config, "print the effective configuration and exit");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return status(code == 0 ? cauchy::ExitStatus::Ok : cauchy::ExitStatus::ConfigError);
  }

  try {
    return run(*chosen, opt);
  } catch (const cauchy::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return status(cauchy::exit_status_for(e.code()));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return status(cauchy::ExitStatus::SolverFailure);
  }
}
