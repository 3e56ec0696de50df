#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/laws.hpp"
#include "ihpe/params.hpp"

namespace ihpe {

struct BoundInputs {
  double d0 = 0.0;
  double lambda_floor = 0.0;
  HpeParams params;
  long k = 1;
};

struct PointwiseBounds {
  double v_bound = 0.0;
  double eps_bound = 0.0;
};

struct ErgodicBounds {
  double v_a_bound = 0.0;
  double eps_a_bound = 0.0;
};

namespace detail {

inline void require_bound_inputs(const BoundInputs& in) {
  if (!(in.d0 >= 0.0) || !std::isfinite(in.d0)) {
    throw ParameterError("d0 >= 0", "d0 = " + fmt(in.d0));
  }
  if (!(in.lambda_floor > 0.0)) {
    throw ParameterError("lambda_floor > 0", "lambda_floor = " + fmt(in.lambda_floor));
  }
  if (in.k < 1) throw ParameterError("k >= 1", "k = " + std::to_string(in.k));
}

}  // namespace detail

/// Best-iterate bounds after k steps:
///   ||v_i|| <= d0 / (lambda tau sqrt(k)) * sqrt(C / eta)
///   eps_i   <= sigma d0^2 C / (2 (1 - sigma^2) lambda tau k)
inline PointwiseBounds pointwise_bounds(const BoundInputs& in) {
  detail::require_bound_inputs(in);
  const HpeParams& p = in.params;
  const double C = energy_factor(p.alpha, q_value(p.alpha, p.eta));
  const double k = static_cast<double>(in.k);
  PointwiseBounds b;
  b.v_bound = in.d0 / (in.lambda_floor * p.tau * std::sqrt(k)) * std::sqrt(C / p.eta);
  b.eps_bound = p.sigma * in.d0 * in.d0 * C /
                (2.0 * (1.0 - p.sigma * p.sigma) * in.lambda_floor * p.tau * k);
  return b;
}

/// Bounds on the averaged residual and error after k steps (constant alpha).
inline ErgodicBounds ergodic_bounds(const BoundInputs& in) {
  detail::require_bound_inputs(in);
  const HpeParams& p = in.params;
  const double C = energy_factor(p.alpha, q_value(p.alpha, p.eta));
  const double k = static_cast<double>(in.k);
  const double scale = in.lambda_floor * p.tau * k;
  ErgodicBounds b;
  b.v_a_bound = 2.0 * (1.0 + p.alpha) * in.d0 * std::sqrt(C) / scale;
  const double tail = 1.0 + p.sigma / std::sqrt((1.0 - p.sigma * p.sigma) * p.tau) +
                      std::sqrt(4.0 + (1.0 - p.tau) * (1.0 - p.tau) / (p.eta * p.tau * p.tau));
  b.eps_a_bound = 2.0 * std::sqrt(2.0) * in.d0 * in.d0 * C / scale * tail;
  return b;
}

/// Smallest k with v_bound(k) <= rho and eps_bound(k) <= eps_hat. An infinite
/// eps_hat drops the second requirement.
inline long iteration_budget(double rho, double eps_hat, const BoundInputs& in) {
  if (!(rho > 0.0)) throw ParameterError("rho > 0", "rho = " + detail::fmt(rho));
  if (!(eps_hat > 0.0)) throw ParameterError("eps_hat > 0", "eps_hat = " + detail::fmt(eps_hat));
  BoundInputs at = in;
  at.k = 1;
  const PointwiseBounds one = pointwise_bounds(at);
  // v_bound(k) = v1/sqrt(k), eps_bound(k) = e1/k.
  const double kv = std::ceil((one.v_bound / rho) * (one.v_bound / rho));
  const double ke = std::isinf(eps_hat) ? 1.0 : std::ceil(one.eps_bound / eps_hat);
  const double kd = std::max({1.0, kv, ke});
  if (kd > static_cast<double>(std::numeric_limits<long>::max() / 2)) {
    return std::numeric_limits<long>::max() / 2;
  }
  long k = static_cast<long>(kd);
  auto fits = [&](long kk) {
    at.k = kk;
    const PointwiseBounds b = pointwise_bounds(at);
    return b.v_bound <= rho && b.eps_bound <= eps_hat;
  };
  while (k > 1 && fits(k - 1)) --k;
  while (!fits(k)) ++k;
  return k;
}

/// Per-k utilization ratios (observed / bound); ratios above 1 + tol are
/// violations. Zero bounds paired with zero observations count as 0.
struct BoundReport {
  std::vector<double> v_ratio;       ///< min_{i<=k} ||v_i|| / v_bound(k)
  std::vector<double> eps_ratio;     ///< eps at the best index / eps_bound(k)
  std::vector<double> v_a_ratio;     ///< empty unless alpha is constant
  std::vector<double> eps_a_ratio;
  double worst_v = 0.0;
  double worst_eps = 0.0;
  double worst_v_a = 0.0;
  double worst_eps_a = 0.0;
  double min_eps_a = std::numeric_limits<double>::infinity();
  bool ergodic_checked = false;
  bool eps_trivial = false;          ///< every eps_k is exactly zero
  std::optional<long> violation_k;
  std::string violation;

  bool ok() const { return !violation_k; }
  double worst() const { return std::max({worst_v, worst_eps, worst_v_a, worst_eps_a}); }
};

namespace detail {

inline double utilization(double observed, double bound) {
  if (observed <= 0.0) return 0.0;
  if (bound <= 0.0) return std::numeric_limits<double>::infinity();
  return observed / bound;
}

}  // namespace detail

/// Compares a trace with every rate bound. `in.k` is ignored.
inline BoundReport evaluate_bounds(std::span<const IterationRecord> trace, const BoundInputs& in,
                                   double tol = 1e-8, double eps_a_floor = -1e-9) {
  BoundReport rep;
  BoundInputs at = in;
  at.k = 1;
  detail::require_bound_inputs(at);
  const HpeParams& p = in.params;
  const double eta = p.eta, tau = p.tau, sigma = p.sigma;
  rep.ergodic_checked = p.schedule.is_constant();
  rep.eps_trivial = std::all_of(trace.begin(), trace.end(),
                                [](const IterationRecord& r) { return r.eps == 0.0; });
  auto flag = [&](long k, const std::string& what) {
    if (!rep.violation_k) {
      rep.violation_k = k;
      rep.violation = what + " bound violated at k = " + std::to_string(k);
    }
  };

  // The proof's witness: the index minimizing max{eta tau ||lambda v||^2, (1-sigma^2)||z~ - w||^2}.
  std::size_t witness = 0;
  double witness_energy = std::numeric_limits<double>::infinity();
  double min_norm_v = std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < trace.size(); ++idx) {
    const IterationRecord& r = trace[idx];
    at.k = r.k;
    const PointwiseBounds pb = pointwise_bounds(at);
    const double lv = r.lambda * r.norm_v;
    const double e = std::max(eta * tau * lv * lv, (1.0 - sigma * sigma) * r.tilde_gap_sq);
    if (e < witness_energy) {
      witness_energy = e;
      witness = idx;
    }
    min_norm_v = std::min(min_norm_v, r.norm_v);
    const double vr = detail::utilization(min_norm_v, pb.v_bound);
    double er = detail::utilization(trace[witness].eps, pb.eps_bound);
    double wv = detail::utilization(trace[witness].norm_v, pb.v_bound);
    if (wv > 1.0 + tol || er > 1.0 + tol) {
      // Witness failed; look for any index meeting both bounds.
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i <= idx; ++i) {
        const double a = detail::utilization(trace[i].norm_v, pb.v_bound);
        const double b = detail::utilization(trace[i].eps, pb.eps_bound);
        if (std::max(a, b) < best) {
          best = std::max(a, b);
          er = b;
          wv = a;
        }
      }
    }
    rep.v_ratio.push_back(vr);
    rep.eps_ratio.push_back(er);
    rep.worst_v = std::max(rep.worst_v, vr);
    rep.worst_eps = std::max(rep.worst_eps, er);
    if (vr > 1.0 + tol) flag(r.k, "pointwise residual");
    if (wv > 1.0 + tol || er > 1.0 + tol) flag(r.k, "pointwise (residual, error) pair");

    rep.min_eps_a = std::min(rep.min_eps_a, r.eps_a);
    if (r.eps_a < eps_a_floor) flag(r.k, "ergodic error nonnegativity");
    if (rep.ergodic_checked) {
      const ErgodicBounds eb = ergodic_bounds(at);
      const double va = detail::utilization(r.norm_v_a, eb.v_a_bound);
      const double ea = detail::utilization(r.eps_a, eb.eps_a_bound);
      rep.v_a_ratio.push_back(va);
      rep.eps_a_ratio.push_back(ea);
      rep.worst_v_a = std::max(rep.worst_v_a, va);
      rep.worst_eps_a = std::max(rep.worst_eps_a, ea);
      if (va > 1.0 + tol) flag(r.k, "ergodic residual");
      if (ea > 1.0 + tol) flag(r.k, "ergodic error");
    }
  }
  return rep;
}

/// evaluate_bounds, throwing TheoremViolation on the first violated bound.
inline BoundReport assert_bounds(std::span<const IterationRecord> trace, const BoundInputs& in,
                                 double tol = 1e-8) {
  BoundReport rep = evaluate_bounds(trace, in, tol);
  if (rep.violation_k) {
    throw TheoremViolation(*rep.violation_k, rep.violation, rep.violation);
  }
  return rep;
}

}  // namespace ihpe
