#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ihpe/cli.hpp"

int main(int argc, char** argv) {
  using namespace ihpe;
  CLI::App app{"Inertial under-relaxed HPE solver for monotone inclusions"};
  app.require_subcommand(1);

  cli::ParamsArgs pa;
  auto* params = app.add_subcommand("params", "Print beta', tau, eta, q(alpha) or the tau(sigma, beta) curve");
  params->add_option("--sigma", pa.sigma, "relative-error tolerance(s)")->delimiter(',');
  params->add_option("--beta", pa.beta, "inertial target(s)")->delimiter(',');
  params->add_option("--alpha", pa.alpha, "inertial bound used for q(alpha)");
  params->add_flag("--curve", pa.curve, "emit CSV of tau(sigma, beta) over a beta grid");
  params->add_option("--points", pa.curve_points, "beta grid size for --curve")->check(CLI::PositiveNumber);

  std::string config_path, out_dir = ".", trace_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  unsigned jobs = 0;

  auto* solve = app.add_subcommand("solve", "Run one experiment and write trace, CSV and summary");
  solve->add_option("--config", config_path, "experiment config (JSON)")->required();
  solve->add_option("--out", out_dir, "output directory");
  solve->add_option("--seed", seed, "override problem.seed");
  solve->add_option("--tol", tol, "certification tolerance");

  auto* bench = app.add_subcommand("bench", "Run the sweep grid of a config and emit a CSV matrix");
  bench->add_option("--config", config_path, "experiment config with a sweep section")->required();
  bench->add_option("--out", out_dir, "output directory");
  bench->add_option("--seed", seed, "problem seed when the sweep has no seed list");
  bench->add_option("--jobs", jobs, "worker threads (0 = all cores)");

  auto* certify = app.add_subcommand("certify", "Re-check a recorded trace offline");
  certify->add_option("trace", trace_path, "trace in JSON-lines format")->required();
  certify->add_option("--config", config_path, "config the trace was produced from");
  certify->add_option("--tol", tol, "tolerance for the relative-error check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsage;
  }

  try {
    if (*params) return cli::cmd_params(pa, std::cout);
    if (*solve) {
      cli::SolveArgs a{load_config(config_path), out_dir, seed, tol};
      return cli::cmd_solve(a, std::cout);
    }
    if (*bench) {
      cli::BenchArgs a{load_config(config_path), out_dir, seed, jobs};
      return cli::cmd_bench(a, std::cout);
    }
    if (*certify) {
      cli::CertifyArgs a;
      a.trace = trace_path;
      if (!config_path.empty()) a.config = load_config(config_path);
      if (tol) a.tol = *tol;
      return cli::cmd_certify(a, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::exit_code_for(e);
  }
  return cli::kUsage;
}
