#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "ihpe/bounds.hpp"
#include "ihpe/config.hpp"
#include "ihpe/errors.hpp"
#include "ihpe/experiment.hpp"
#include "ihpe/params.hpp"
#include "ihpe/trace_io.hpp"

// Command implementations behind the `ihpe` executable. Each returns a
// process exit code and writes human output to the given stream.

namespace ihpe::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kIterationCap = 3,
  kParameter = 4,
  kCertification = 5,
  kTheorem = 6,
  kParse = 7,
  kNumerical = 8,
  kOracle = 9,
};

/// Maps a library error to its exit code.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e)) return kParse;
  if (dynamic_cast<const ParameterError*>(&e)) return kParameter;
  if (dynamic_cast<const CertificationError*>(&e)) return kCertification;
  if (dynamic_cast<const TheoremViolation*>(&e)) return kTheorem;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  if (dynamic_cast<const OracleError*>(&e)) return kOracle;
  if (dynamic_cast<const UsageError*>(&e)) return kUsage;
  return kFailure;
}

namespace detail {

inline std::string num(double x) { return ihpe::detail::num(x); }

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw UsageError("cannot write '" + p.string() + "'");
  f.precision(17);
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------- params

struct ParamsArgs {
  std::vector<double> sigma{0.0};
  std::vector<double> beta{1.0 / 3.0};
  double alpha = 0.0;
  bool curve = false;
  int curve_points = 199;
};

/// tau(sigma, beta) on the grid beta = i/(points+1), for the five reference sigmas.
inline void write_curve(std::ostream& out, int points = 199) {
  out << "sigma,beta,beta_prime,tau\n";
  for (double sigma : {0.0, 0.25, 0.5, 0.75, 0.99}) {
    for (int i = 1; i <= points; ++i) {
      const double beta = static_cast<double>(i) / static_cast<double>(points + 1);
      out << detail::num(sigma) << ',' << detail::num(beta) << ','
          << detail::num(beta_prime(sigma, beta)) << ',' << detail::num(tau_of(sigma, beta)) << '\n';
    }
  }
}

inline int cmd_params(const ParamsArgs& a, std::ostream& out) {
  if (a.curve) {
    write_curve(out, a.curve_points);
    return kOk;
  }
  if (a.sigma.empty() || a.beta.empty()) throw UsageError("params: need at least one sigma and beta");
  out << std::left << std::setw(22) << "sigma" << std::setw(22) << "beta" << std::setw(22)
      << "beta_prime" << std::setw(22) << "tau" << std::setw(22) << "eta" << "q(alpha)\n";
  for (double s : a.sigma) {
    for (double b : a.beta) {
      const double bp = beta_prime(s, b);
      const double tau = tau_of(s, b);
      const double eta = eta_of(s, tau);
      out << std::setw(22) << detail::num(s) << std::setw(22) << detail::num(b) << std::setw(22)
          << detail::num(bp) << std::setw(22) << detail::num(tau) << std::setw(22)
          << detail::num(eta) << detail::num(q_value(a.alpha, eta)) << '\n';
    }
  }
  return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
  ExperimentConfig config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

inline nlohmann::json bounds_json(const BoundReport& b) {
  nlohmann::json j;
  j["worst_v"] = b.worst_v;
  j["worst_eps"] = b.worst_eps;
  j["worst_v_a"] = b.worst_v_a;
  j["worst_eps_a"] = b.worst_eps_a;
  j["ergodic_checked"] = b.ergodic_checked;
  j["eps_trivial"] = b.eps_trivial;
  j["ok"] = b.ok();
  if (b.violation_k) j["violation"] = {{"k", *b.violation_k}, {"what", b.violation}};
  j["v_ratio"] = b.v_ratio;
  j["eps_ratio"] = b.eps_ratio;
  j["v_a_ratio"] = b.v_a_ratio;
  j["eps_a_ratio"] = b.eps_a_ratio;
  return j;
}

inline nlohmann::json summary_json(const Experiment& e, const ExperimentResult& r) {
  nlohmann::json j;
  const auto& tr = r.run.state.trace;
  j["verdict"] = std::string(to_string(r.run.verdict));
  j["iterations"] = r.run.state.k;
  j["problem"] = std::string(to_string(e.problem.spec.kind));
  j["instance"] = std::string(to_string(e.config.instance.kind));
  j["dimension"] = e.problem.dim();
  j["params"] = {{"alpha", e.params.alpha}, {"sigma", e.params.sigma}, {"beta", e.params.beta},
                 {"beta_prime", e.params.beta_prime}, {"tau", e.params.tau}, {"eta", e.params.eta},
                 {"q_alpha", e.params.q_alpha}};
  j["lambda_floor"] = e.lambda_floor;
  j["d0"] = e.d0 ? nlohmann::json(*e.d0) : nlohmann::json(nullptr);
  if (!tr.empty()) {
    const auto& last = tr.back();
    j["final"] = {{"norm_v", last.norm_v}, {"eps", last.eps}, {"norm_v_a", last.norm_v_a},
                  {"eps_a", last.eps_a}, {"Lambda", last.Lambda}};
    double worst_ratio = 0.0;
    for (const auto& rec : tr) worst_ratio = std::max(worst_ratio, rec.error_ratio);
    j["max_error_ratio"] = worst_ratio;
  }
  const CheckReport& c = r.checks;
  if (c.bounds) {
    j["bound_utilization"] = {{"v", c.bounds->worst_v}, {"eps", c.bounds->worst_eps},
                              {"v_a", c.bounds->worst_v_a}, {"eps_a", c.bounds->worst_eps_a}};
    j["bounds_ok"] = c.bounds->ok();
  } else {
    j["bound_utilization"] = nullptr;
  }
  if (c.summability) {
    j["laws"] = {{"fejer_ok", c.fejer_ok},
                 {"min_fejer_residual", c.min_fejer},
                 {"summability_ratio", c.summability->worst_ratio()},
                 {"summability_ok", c.summability->ok()},
                 {"energy_ok", c.energy->ok()}};
  }
  return j;
}

inline int cmd_solve(const SolveArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.config;
  if (a.seed) cfg.problem.seed = *a.seed;
  if (a.tol) cfg.certify_tol = *a.tol;
  const Experiment e = prepare(cfg);
  const ExperimentResult r = execute(e);
  const auto& tr = r.run.state.trace;

  {
    auto f = detail::open_out(a.out_dir / cfg.output.trace_jsonl);
    write_trace_jsonl(f, trace_header(e), tr);
  }
  {
    auto f = detail::open_out(a.out_dir / cfg.output.trace_csv);
    write_trace_csv(f, tr);
  }
  const nlohmann::json summary = summary_json(e, r);
  {
    auto f = detail::open_out(a.out_dir / cfg.output.summary);
    f << summary.dump(2) << '\n';
  }
  if (r.checks.bounds) {
    auto f = detail::open_out(a.out_dir / cfg.output.bounds);
    f << bounds_json(*r.checks.bounds).dump() << '\n';
  }

  out << "verdict     " << to_string(r.run.verdict) << "\n"
      << "iterations  " << r.run.state.k << "\n";
  if (!tr.empty()) {
    out << "norm_v      " << detail::num(tr.back().norm_v) << "\n"
        << "eps         " << detail::num(tr.back().eps) << "\n";
  }
  if (r.checks.bounds) {
    out << "bound use   " << detail::num(r.checks.bounds->worst()) << "\n";
  } else {
    out << "bound use   skipped (no reference solution)\n";
  }
  out << "outputs     " << (a.out_dir / cfg.output.trace_jsonl).string() << "\n";

  if (r.checks.bounds && !r.checks.bounds->ok()) {
    throw TheoremViolation(*r.checks.bounds->violation_k, r.checks.bounds->violation,
                           r.checks.bounds->violation);
  }
  if (!r.checks.laws_ok()) {
    throw TheoremViolation(-1, "laws", "a descent or summability law failed; see " +
                                           (a.out_dir / cfg.output.summary).string());
  }
  return r.run.verdict == Verdict::iteration_cap ? kIterationCap : kOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  ExperimentConfig config;
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  unsigned jobs = 0;  ///< 0 = hardware concurrency
  std::string file = "bench.csv";
};

struct BenchCell {
  double alpha = 0.0;
  double sigma = 0.0;
  std::optional<double> beta;
  std::optional<double> tau;
  std::uint64_t seed = 0;
};

struct BenchRow {
  BenchCell cell;
  std::string status = "ok";
  std::string verdict;
  long iterations = 0;
  double norm_v = NAN, eps = NAN, norm_v_a = NAN, eps_a = NAN, utilization = NAN;
  std::string message;
};

inline std::vector<BenchCell> bench_grid(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed) {
  if (!cfg.sweep) throw UsageError("bench: config has no sweep section");
  const SweepSpec& s = *cfg.sweep;
  const bool any = !s.alpha.empty() || !s.sigma.empty() || !s.beta.empty() || !s.tau.empty() || !s.seed.empty();
  if (!any) throw UsageError("bench: empty grid");
  if (!s.beta.empty() && !s.tau.empty()) throw UsageError("bench: sweep.beta and sweep.tau are exclusive");
  const std::vector<double> alphas = s.alpha.empty() ? std::vector<double>{cfg.params.alpha} : s.alpha;
  const std::vector<double> sigmas = s.sigma.empty() ? std::vector<double>{cfg.params.sigma} : s.sigma;
  const std::uint64_t base_seed = seed.value_or(cfg.problem.seed);
  const std::vector<std::uint64_t> seeds = s.seed.empty() ? std::vector<std::uint64_t>{base_seed} : s.seed;
  std::vector<BenchCell> cells;
  for (double al : alphas)
    for (double sg : sigmas)
      for (std::uint64_t sd : seeds) {
        if (!s.tau.empty()) {
          for (double t : s.tau) cells.push_back({al, sg, std::nullopt, t, sd});
        } else if (!s.beta.empty()) {
          for (double b : s.beta) cells.push_back({al, sg, b, std::nullopt, sd});
        } else {
          cells.push_back({al, sg, cfg.params.beta, cfg.params.tau, sd});
        }
      }
  auto key = [](const BenchCell& c) {
    return std::make_tuple(c.alpha, c.sigma, c.beta.value_or(-1.0), c.tau.value_or(-1.0), c.seed);
  };
  std::sort(cells.begin(), cells.end(), [&](const BenchCell& x, const BenchCell& y) { return key(x) < key(y); });
  return cells;
}

inline BenchRow bench_cell(const ExperimentConfig& base, const BenchCell& cell) {
  BenchRow row;
  row.cell = cell;
  try {
    ExperimentConfig cfg = base;
    cfg.sweep.reset();
    cfg.params.alpha = cell.alpha;
    cfg.params.sigma = cell.sigma;
    cfg.params.beta = cell.beta;
    cfg.params.tau = cell.tau;
    cfg.problem.seed = cell.seed;
    const Experiment e = prepare(cfg);
    const ExperimentResult r = execute(e);
    row.verdict = std::string(to_string(r.run.verdict));
    row.iterations = r.run.state.k;
    if (!r.run.state.trace.empty()) {
      const auto& last = r.run.state.trace.back();
      row.norm_v = last.norm_v;
      row.eps = last.eps;
      row.norm_v_a = last.norm_v_a;
      row.eps_a = last.eps_a;
    }
    if (r.checks.bounds) row.utilization = r.checks.bounds->worst();
    if (r.checks.bounds && !r.checks.bounds->ok()) {
      row.status = "bound_violation";
      row.message = r.checks.bounds->violation;
    } else if (!r.checks.laws_ok()) {
      row.status = "law_violation";
    }
  } catch (const std::exception& ex) {
    row.status = "error";
    row.message = ex.what();
  }
  return row;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  using detail::num;
  out << "alpha,sigma,beta,tau,seed,status,verdict,iterations,final_norm_v,final_eps,"
         "final_norm_v_a,final_eps_a,worst_utilization,message\n";
  for (const auto& r : rows) {
    out << num(r.cell.alpha) << ',' << num(r.cell.sigma) << ','
        << (r.cell.beta ? num(*r.cell.beta) : "") << ',' << (r.cell.tau ? num(*r.cell.tau) : "") << ','
        << r.cell.seed << ',' << r.status << ',' << r.verdict << ',' << r.iterations << ','
        << num(r.norm_v) << ',' << num(r.eps) << ',' << num(r.norm_v_a) << ',' << num(r.eps_a) << ','
        << num(r.utilization) << ',' << detail::csv_escape(r.message) << '\n';
  }
}

/// Runs every grid cell on a worker pool; rows come out in grid order.
inline std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                                       unsigned jobs) {
  const std::vector<BenchCell> cells = bench_grid(cfg, seed);
  std::vector<BenchRow> rows(cells.size());
  unsigned n = jobs ? jobs : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) rows[i] = bench_cell(cfg, cells[i]);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline int cmd_bench(const BenchArgs& a, std::ostream& out) {
  const std::vector<BenchRow> rows = run_bench(a.config, a.seed, a.jobs);
  std::ostringstream csv;
  write_bench_csv(csv, rows);
  {
    auto f = detail::open_out(a.out_dir / a.file);
    f << csv.str();
  }
  out << csv.str();
  return kOk;
}

// ---------------------------------------------------------------- certify

struct CertifyArgs {
  std::filesystem::path trace;
  std::optional<ExperimentConfig> config;
  double tol = 1e-9;
};

inline int cmd_certify(const CertifyArgs& a, std::ostream& out) {
  std::ifstream in(a.trace);
  if (!in) throw UsageError("cannot open trace '" + a.trace.string() + "'");
  const TraceFile tf = read_trace_jsonl(in);

  HpeParams params;
  std::optional<double> d0;
  double lambda_floor = 0.0;
  if (a.config) {
    const Experiment e = prepare(*a.config);
    params = e.params;
    d0 = e.d0;
    lambda_floor = e.lambda_floor;
    if (tf.header) {
      const TraceHeader& h = *tf.header;
      const bool same = std::abs(h.sigma - params.sigma) <= 1e-15 && std::abs(h.tau - params.tau) <= 1e-15 &&
                        std::abs(h.alpha - params.alpha) <= 1e-15;
      if (!same) throw UsageError("certify: trace header parameters differ from the config");
    }
  } else if (tf.header) {
    params = tf.header->params();
    d0 = tf.header->d0;
    lambda_floor = tf.header->lambda_floor;
  } else if (!tf.records.empty()) {
    throw UsageError("certify: trace has no header; pass --config");
  }

  const CertifyReport rep = certify_trace(tf.records, params, d0, lambda_floor, a.tol);
  for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
  out << "records " << tf.records.size() << '\n';
  for (const auto& it : rep.items) {
    out << std::left << std::setw(16) << it.name << to_string(it.status);
    if (!it.detail.empty() && it.status != CertifyItem::Status::pass) out << "  " << it.detail;
    out << '\n';
  }
  out << (rep.ok() ? "PASS" : "FAIL") << '\n';
  return rep.ok() ? kOk : kTheorem;
}

}  // namespace ihpe::cli
