#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/operators.hpp"
#include "ihpe/params.hpp"
#include "ihpe/problems.hpp"

namespace ihpe {

enum class InstanceKind { ppm, tseng_fbf, forward_backward };

inline std::string_view to_string(InstanceKind k) {
  switch (k) {
    case InstanceKind::ppm: return "ppm";
    case InstanceKind::tseng_fbf: return "tseng_fbf";
    case InstanceKind::forward_backward: return "forward_backward";
  }
  return "?";
}

inline InstanceKind instance_kind_from_string(std::string_view s) {
  if (s == "ppm") return InstanceKind::ppm;
  if (s == "tseng_fbf") return InstanceKind::tseng_fbf;
  if (s == "forward_backward") return InstanceKind::forward_backward;
  throw UsageError("unsupported instance kind '" + std::string(s) + "'");
}

/// Stepsize rule. `cap` uses the largest admissible value (sigma/L for
/// Tseng, 2 sigma^2/L for forward-backward); `cyclic` repeats `values`.
struct LambdaRule {
  enum class Kind { cap, constant, cyclic };

  Kind kind = Kind::cap;
  double value = 1.0;
  std::vector<double> values;

  static LambdaRule at_cap() { return {}; }
  static LambdaRule constant(double v) { return {Kind::constant, v, {}}; }
  static LambdaRule cyclic(std::vector<double> vs) { return {Kind::cyclic, 0.0, std::move(vs)}; }

  double at(long k, double cap) const {
    switch (kind) {
      case Kind::cap: return cap;
      case Kind::constant: return value;
      case Kind::cyclic: return values[static_cast<std::size_t>((k - 1) % static_cast<long>(values.size()))];
    }
    return value;
  }

  /// The guaranteed lower bound on every lambda_k.
  double floor(double cap) const {
    switch (kind) {
      case Kind::cap: return cap;
      case Kind::constant: return value;
      case Kind::cyclic: return *std::min_element(values.begin(), values.end());
    }
    return value;
  }

  double ceiling(double cap) const {
    switch (kind) {
      case Kind::cap: return cap;
      case Kind::constant: return value;
      case Kind::cyclic: return *std::max_element(values.begin(), values.end());
    }
    return value;
  }
};

struct InstanceConfig {
  InstanceKind kind = InstanceKind::ppm;
  LambdaRule lambda;
};

namespace detail {

// Relative slack when comparing lambda with a cap computed the same way.
constexpr double kCapSlack = 1e-12;

inline void require_lambda(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("lambda > 0", "lambda = " + fmt(lambda));
  }
}

inline void require_open_sigma(double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0)) {
    throw ParameterError("sigma in (0,1)", "sigma = " + fmt(sigma));
  }
}

}  // namespace detail

/// Largest admissible stepsize: +inf for ppm, sigma/L for Tseng, 2 sigma^2/L
/// for forward-backward (+inf when L = 0).
inline double lambda_cap(InstanceKind kind, double sigma, double L) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case InstanceKind::ppm: return inf;
    case InstanceKind::tseng_fbf: return L > 0.0 ? sigma / L : inf;
    case InstanceKind::forward_backward: return L > 0.0 ? 2.0 * sigma * sigma / L : inf;
  }
  return inf;
}

/// Exact resolvent step: z~ = (lambda B + I)^{-1} w, v = (w - z~)/lambda, eps = 0.
inline Certificate ppm_step(const ResolventOracle& B, const Vector& w, double lambda) {
  detail::require_lambda(lambda);
  ResolventPoint r = resolve(B, lambda, w);
  return Certificate{std::move(r.z_tilde), std::move(r.v), 0.0, lambda};
}

/// Forward-backward-forward step with w' = P_Omega(w).
inline Certificate tseng_step(const ForwardMap& F, const ResolventOracle& B, const Vector& w,
                              double lambda, double sigma) {
  detail::require_lambda(lambda);
  detail::require_open_sigma(sigma);
  const double cap = lambda_cap(InstanceKind::tseng_fbf, sigma, F.lipschitz());
  if (lambda > cap * (1.0 + detail::kCapSlack)) {
    throw ParameterError("lambda <= sigma/L", "lambda = " + detail::fmt(lambda) +
                                                  " exceeds sigma/L = " + detail::fmt(cap));
  }
  const Vector wp = F.project_domain(w);
  const Vector fwp = F.evaluate(wp);
  Certificate c;
  c.z_tilde = B.evaluate(lambda, w - lambda * fwp);
  c.v = F.evaluate(c.z_tilde) - fwp + (w - c.z_tilde) / lambda;
  c.eps = 0.0;
  c.lambda = lambda;
  return c;
}

/// Forward-backward step for cocoercive F: v = (w - z~)/lambda, eps = L ||z~ - w||^2 / 4.
inline Certificate fb_step(const ForwardMap& F, const ResolventOracle& B, const Vector& w,
                           double lambda, double sigma) {
  detail::require_lambda(lambda);
  detail::require_open_sigma(sigma);
  if (!F.cocoercive()) {
    throw ParameterError("F cocoercive", "forward-backward needs a cocoercive forward map");
  }
  const double L = F.lipschitz();
  const double cap = lambda_cap(InstanceKind::forward_backward, sigma, L);
  if (lambda > cap * (1.0 + detail::kCapSlack)) {
    throw ParameterError("lambda <= 2 sigma^2/L", "lambda = " + detail::fmt(lambda) +
                                                      " exceeds 2 sigma^2/L = " + detail::fmt(cap));
  }
  Certificate c;
  c.z_tilde = B.evaluate(lambda, w - lambda * F.evaluate(w));
  c.v = (w - c.z_tilde) / lambda;
  c.eps = 0.25 * L * linalg::dist_sq(c.z_tilde, w);
  c.lambda = lambda;
  return c;
}

/// Inner solver bound to a problem, with the stepsize range it will use.
struct PreparedInstance {
  InnerSolver solver;
  double lambda_floor = 0.0;
  double lambda_cap = std::numeric_limits<double>::infinity();
};

inline PreparedInstance prepare_instance(const TestProblem& problem, const InstanceConfig& cfg,
                                         double sigma) {
  const LambdaRule rule = cfg.lambda;
  if (rule.kind == LambdaRule::Kind::cyclic && rule.values.empty()) {
    throw UsageError("cyclic lambda rule needs at least one value");
  }
  PreparedInstance out;
  const double L = problem.forward.lipschitz();
  switch (cfg.kind) {
    case InstanceKind::ppm: {
      if (rule.kind == LambdaRule::Kind::cap) {
        throw ParameterError("lambda rule", "ppm has no stepsize cap; give a constant or cyclic rule");
      }
      ResolventOracle J = problem.full_resolvent();
      out.lambda_cap = std::numeric_limits<double>::infinity();
      out.solver = [J = std::move(J), rule](const Vector& w, long k) {
        return ppm_step(J, w, rule.at(k, 0.0));
      };
      break;
    }
    case InstanceKind::tseng_fbf:
    case InstanceKind::forward_backward: {
      detail::require_open_sigma(sigma);
      out.lambda_cap = lambda_cap(cfg.kind, sigma, L);
      if (rule.kind == LambdaRule::Kind::cap && std::isinf(out.lambda_cap)) {
        throw ParameterError("lambda rule", "forward map has L = 0; give a constant lambda");
      }
      if (cfg.kind == InstanceKind::forward_backward && !problem.forward.cocoercive()) {
        throw ParameterError("F cocoercive", "forward-backward needs a cocoercive forward map (problem " +
                                                 std::string(to_string(problem.spec.kind)) + ")");
      }
      const double top = rule.ceiling(out.lambda_cap);
      if (top > out.lambda_cap * (1.0 + detail::kCapSlack)) {
        const char* name = cfg.kind == InstanceKind::tseng_fbf ? "lambda <= sigma/L" : "lambda <= 2 sigma^2/L";
        throw ParameterError(name, "lambda = " + detail::fmt(top) + " exceeds the cap " +
                                       detail::fmt(out.lambda_cap));
      }
      const double cap = out.lambda_cap;
      ForwardMap F = problem.forward;
      ResolventOracle B = problem.backward;
      if (cfg.kind == InstanceKind::tseng_fbf) {
        out.solver = [F, B, rule, cap, sigma](const Vector& w, long k) {
          return tseng_step(F, B, w, rule.at(k, cap), sigma);
        };
      } else {
        out.solver = [F, B, rule, cap, sigma](const Vector& w, long k) {
          return fb_step(F, B, w, rule.at(k, cap), sigma);
        };
      }
      break;
    }
  }
  out.lambda_floor = rule.floor(out.lambda_cap);
  detail::require_lambda(out.lambda_floor);
  return out;
}

}  // namespace ihpe
