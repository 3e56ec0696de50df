#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ihpe/bounds.hpp"
#include "ihpe/config.hpp"
#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/instances.hpp"
#include "ihpe/laws.hpp"
#include "ihpe/problems.hpp"
#include "ihpe/trace_io.hpp"

namespace ihpe {

/// A config turned into runnable parts.
struct Experiment {
  ExperimentConfig config;
  TestProblem problem;
  HpeParams params;
  PreparedInstance instance;
  double lambda_floor = 0.0;
  std::optional<double> d0;
};

inline Experiment prepare(const ExperimentConfig& cfg) {
  Experiment e;
  e.config = cfg;
  e.params = cfg.params.build();
  e.problem = make_problem(cfg.problem);
  e.instance = prepare_instance(e.problem, cfg.instance, e.params.sigma);
  e.lambda_floor = e.instance.lambda_floor;
  if (cfg.lambda_floor) {
    if (!(*cfg.lambda_floor > 0.0)) {
      throw ParameterError("lambda_floor > 0", "lambda_floor = " + detail::fmt(*cfg.lambda_floor));
    }
    if (*cfg.lambda_floor > e.instance.lambda_floor) {
      throw ParameterError("lambda_k >= lambda_floor",
                           "configured floor " + detail::fmt(*cfg.lambda_floor) +
                               " exceeds the smallest stepsize " + detail::fmt(e.instance.lambda_floor));
    }
    e.lambda_floor = *cfg.lambda_floor;
  }
  e.d0 = e.problem.known_d0;
  return e;
}

struct CheckReport {
  std::optional<std::vector<double>> fejer;
  double min_fejer = 0.0;
  std::optional<SummabilityReport> summability;
  std::optional<EnergyReport> energy;
  std::optional<BoundReport> bounds;

  bool fejer_ok = true;
  std::optional<long> fejer_violation_k;

  bool laws_ok() const {
    return fejer_ok && (!summability || summability->ok()) && (!energy || energy->ok());
  }
};

/// Fejer, summability, energy and rate checks for a trace with known d0.
inline CheckReport check_trace(const std::vector<IterationRecord>& trace, const HpeParams& params,
                               std::optional<double> d0, double lambda_floor,
                               double bound_tol = 1e-8) {
  CheckReport rep;
  if (!d0 || trace.empty()) return rep;
  const bool have_dist = std::none_of(trace.begin(), trace.end(), [](const IterationRecord& r) {
    return std::isnan(r.dist_to_solution) || std::isnan(r.dist_w_to_solution);
  });
  const double phi0 = (*d0) * (*d0);
  if (have_dist) {
    rep.fejer = fejer_check(trace);
    rep.min_fejer = 0.0;
    for (std::size_t i = 0; i < rep.fejer->size(); ++i) {
      const double res = (*rep.fejer)[i];
      rep.min_fejer = std::min(rep.min_fejer, res);
      const double mag = trace[i].dist_w_to_solution * trace[i].dist_w_to_solution;
      if (res < -law_tol(mag) && !rep.fejer_violation_k) rep.fejer_violation_k = trace[i].k;
    }
    rep.fejer_ok = !rep.fejer_violation_k;
    rep.summability = summability_check(trace, phi0, params);
    rep.energy = energy_check(trace, phi0, params);
  }
  BoundInputs in{*d0, lambda_floor, params, 1};
  rep.bounds = evaluate_bounds(trace, in, bound_tol);
  return rep;
}

struct ExperimentResult {
  RunResult run;
  CheckReport checks;
};

/// Runs the experiment; the trace is checked against every law and bound
/// whenever the problem has a known solution.
inline ExperimentResult execute(const Experiment& e, const StepObserver& observer = {}) {
  RunOptions opts;
  opts.lambda_floor = e.lambda_floor;
  opts.certify_tol = e.config.certify_tol;
  opts.z_star = e.problem.known_solution;
  opts.observer = observer;
  ExperimentResult out;
  out.run = run(e.problem.z0, e.instance.solver, e.params, e.config.stopping, opts);
  out.checks = check_trace(out.run.state.trace, e.params, e.d0, e.lambda_floor);
  return out;
}

inline TraceHeader trace_header(const Experiment& e) {
  return TraceHeader::from(e.params, e.lambda_floor, e.d0, std::string(to_string(e.problem.spec.kind)),
                           std::string(to_string(e.config.instance.kind)));
}

/// Offline re-verification of a recorded trace.
struct CertifyItem {
  std::string name;
  enum class Status { pass, fail, skipped } status = Status::pass;
  std::optional<long> k;
  std::string detail;
};

inline std::string_view to_string(CertifyItem::Status s) {
  switch (s) {
    case CertifyItem::Status::pass: return "pass";
    case CertifyItem::Status::fail: return "fail";
    case CertifyItem::Status::skipped: return "skipped";
  }
  return "?";
}

struct CertifyReport {
  std::vector<CertifyItem> items;
  std::vector<std::string> warnings;
  bool ok() const {
    return std::none_of(items.begin(), items.end(),
                        [](const CertifyItem& i) { return i.status == CertifyItem::Status::fail; });
  }
};

inline CertifyReport certify_trace(const std::vector<IterationRecord>& trace, const HpeParams& p,
                                   std::optional<double> d0, double lambda_floor, double tol = 1e-9) {
  using S = CertifyItem::Status;
  CertifyReport rep;
  if (trace.empty()) {
    rep.warnings.push_back("empty trace: every check passes vacuously");
    for (const char* n : {"relative_error", "update_rule", "energy_terms", "lambda_floor", "fejer",
                          "summability", "mu_descent", "energy", "recursion", "rates", "ergodic_eps"}) {
      rep.items.push_back({n, S::pass, std::nullopt, "vacuous"});
    }
    return rep;
  }
  auto first_fail = [&](const std::string& name, auto pred, const std::string& what) {
    CertifyItem it{name, S::pass, std::nullopt, ""};
    for (const auto& r : trace) {
      if (!pred(r)) {
        it.status = S::fail;
        it.k = r.k;
        it.detail = what + " fails at k = " + std::to_string(r.k);
        break;
      }
    }
    rep.items.push_back(it);
  };
  const double s2 = p.sigma * p.sigma;
  first_fail("relative_error", [&](const IterationRecord& r) {
    const double ratio = error_ratio(r.residual_sq + 2.0 * r.lambda * r.eps, s2 * r.tilde_gap_sq);
    return r.eps >= 0.0 && ratio <= 1.0 + tol;
  }, "relative-error criterion");
  first_fail("update_rule", [&](const IterationRecord& r) {
    const double lv = p.tau * r.lambda * r.norm_v;
    return std::abs(r.relax_gap_sq - lv * lv) <= 1e-9 * std::max(1.0, lv * lv);
  }, "relaxed update ||z_k - w|| = tau lambda ||v||");
  first_fail("energy_terms", [&](const IterationRecord& r) {
    const double s = std::max(p.eta * r.relax_gap_sq, (1.0 - s2) * p.tau * r.tilde_gap_sq);
    return std::abs(s - r.s_k) <= 1e-12 * std::max(1.0, s);
  }, "s_k recomputation");
  first_fail("lambda_floor", [&](const IterationRecord& r) { return r.lambda >= lambda_floor; },
             "lambda_k >= lambda_floor");
  first_fail("ergodic_eps", [&](const IterationRecord& r) { return r.eps_a >= -1e-9; },
             "eps^a >= 0");

  const bool have_dist = std::none_of(trace.begin(), trace.end(), [](const IterationRecord& r) {
    return std::isnan(r.dist_to_solution) || std::isnan(r.dist_w_to_solution);
  });
  if (!d0 || !have_dist) {
    for (const char* n : {"fejer", "summability", "mu_descent", "energy", "recursion", "rates"}) {
      rep.items.push_back({n, S::skipped, std::nullopt, "no reference solution"});
    }
    rep.warnings.push_back("no reference solution: law and rate checks skipped");
    return rep;
  }
  const CheckReport c = check_trace(trace, p, d0, lambda_floor);
  auto item = [&](const std::string& name, const std::optional<LawViolation>& v, const std::string& what) {
    rep.items.push_back(v ? CertifyItem{name, S::fail, v->k, what + " fails at k = " + std::to_string(v->k)}
                          : CertifyItem{name, S::pass, std::nullopt, ""});
  };
  rep.items.push_back(c.fejer_ok ? CertifyItem{"fejer", S::pass, std::nullopt, ""}
                                 : CertifyItem{"fejer", S::fail, c.fejer_violation_k,
                                               "Fejer descent fails at k = " + std::to_string(*c.fejer_violation_k)});
  item("summability", c.summability->partial_sum_violation, "step summability");
  if (c.summability->mu_checked) {
    const auto& s = *c.summability;
    item("mu_descent", s.mu_violation ? s.mu_violation : s.descent_violation, "mu descent");
  } else {
    rep.items.push_back({"mu_descent", S::skipped, std::nullopt, "nonconstant alpha schedule"});
  }
  item("energy", c.energy->energy_violation, "telescoped energy");
  item("recursion", c.energy->recursion_violation ? c.energy->recursion_violation
                                                  : c.energy->summation_violation,
       "phi recursion");
  rep.items.push_back(c.bounds->ok() ? CertifyItem{"rates", S::pass, std::nullopt, ""}
                                     : CertifyItem{"rates", S::fail, c.bounds->violation_k, c.bounds->violation});
  return rep;
}

}  // namespace ihpe
