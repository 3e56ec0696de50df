#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "ihpe/errors.hpp"
#include "ihpe/hpe.hpp"
#include "ihpe/linalg.hpp"
#include "ihpe/params.hpp"

// Descent and summability laws evaluated from a recorded trace. All checks
// work on trace scalars only, so they can be rerun offline.

namespace ihpe {

/// max(1e-9, 1e-12 * magnitude).
inline double law_tol(double magnitude) { return std::max(1e-9, 1e-12 * std::abs(magnitude)); }

/// Energy factor 1 + 2 alpha (1 + alpha) / ((1 - alpha)^2 q(alpha)).
inline double energy_factor(double alpha, double q_alpha) {
  if (!(q_alpha > 0.0)) throw ParameterError("q(alpha) <= 0", "q(alpha) = " + detail::fmt(q_alpha));
  return 1.0 + 2.0 * alpha * (1.0 + alpha) / ((1.0 - alpha) * (1.0 - alpha) * q_alpha);
}

namespace detail {

inline void require_distances(std::span<const IterationRecord> trace, const char* what) {
  for (const auto& r : trace) {
    if (std::isnan(r.dist_to_solution) || std::isnan(r.dist_w_to_solution)) {
      throw UsageError(std::string(what) + ": trace carries no distances to a solution");
    }
  }
}

}  // namespace detail

/// ||w_{k-1} - z*||^2 - ||z_k - z*||^2 - s_k for each k. Nonnegative for
/// certified runs.
inline std::vector<double> fejer_check(std::span<const IterationRecord> trace) {
  detail::require_distances(trace, "fejer_check");
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& r : trace) {
    out.push_back(r.dist_w_to_solution * r.dist_w_to_solution -
                  r.dist_to_solution * r.dist_to_solution - r.s_k);
  }
  return out;
}

struct LawViolation {
  long k = 0;
  double value = 0.0;  ///< signed slack, negative when violated
};

struct SummabilityReport {
  double bound = 0.0;                 ///< 2 phi_0 / ((1 - alpha) q(alpha))
  std::vector<double> partial_sums;   ///< sum_{j<=k} ||z_j - z_{j-1}||^2
  std::vector<double> mu;             ///< mu_0, mu_1, ..., mu_K
  std::vector<double> descent_slack;  ///< (mu_{k-1} - mu_k)/q(alpha) - ||z_k - z_{k-1}||^2
  std::vector<double> inertial_sums;  ///< sum_{j<=k} alpha_j ||z_j - z_{j-1}||^2
  bool mu_checked = false;            ///< mu assertions only apply for constant alpha
  std::optional<LawViolation> partial_sum_violation;
  std::optional<LawViolation> mu_violation;
  std::optional<LawViolation> descent_violation;

  bool ok() const { return !partial_sum_violation && !mu_violation && !descent_violation; }
  double worst_ratio() const {
    return partial_sums.empty() || bound <= 0.0 ? 0.0 : partial_sums.back() / bound;
  }
};

/// phi_0 = ||z_0 - z*||^2.
inline SummabilityReport summability_check(std::span<const IterationRecord> trace, double phi0,
                                           const HpeParams& params) {
  detail::require_distances(trace, "summability_check");
  const double alpha = params.alpha;
  const double eta = params.eta;
  const double q = q_value(alpha, eta);
  if (!(q > 0.0)) throw ParameterError("q(alpha) <= 0", "q(alpha) = " + detail::fmt(q));
  SummabilityReport rep;
  rep.bound = 2.0 * phi0 / ((1.0 - alpha) * q);
  rep.mu_checked = params.schedule.is_constant();
  const double tol = law_tol(std::max(phi0, rep.bound));

  linalg::CompensatedSum steps, inertial;
  rep.mu.push_back((1.0 - params.alpha_at(0)) * phi0);
  double phi_prev = phi0;
  for (const auto& r : trace) {
    const double step_sq = r.step_norm * r.step_norm;
    steps.add(step_sq);
    inertial.add(params.alpha_at(r.k) * step_sq);
    rep.partial_sums.push_back(steps.value());
    rep.inertial_sums.push_back(inertial.value());
    if (!rep.partial_sum_violation && steps.value() > rep.bound + tol) {
      rep.partial_sum_violation = LawViolation{r.k, rep.bound - steps.value()};
    }
    const double phi = r.dist_to_solution * r.dist_to_solution;
    const double ak = params.alpha_at(r.k);
    const double gamma = (1.0 - eta) * ak * ak + (1.0 + eta) * ak;
    const double mu = phi - r.alpha_prev * phi_prev + gamma * step_sq;
    const double prev_mu = rep.mu.back();
    rep.mu.push_back(mu);
    const double slack = (prev_mu - mu) / q - step_sq;
    rep.descent_slack.push_back(slack);
    if (rep.mu_checked) {
      if (!rep.mu_violation && mu > prev_mu + tol) {
        rep.mu_violation = LawViolation{r.k, prev_mu - mu};
      }
      if (!rep.descent_violation && slack < -tol / q) {
        rep.descent_violation = LawViolation{r.k, slack};
      }
    }
    phi_prev = phi;
  }
  return rep;
}

struct EnergyReport {
  double factor = 0.0;                 ///< energy factor C
  std::vector<double> energy;          ///< ||z_k - z*||^2 + sum tau max{...}
  std::vector<double> recursion_slack; ///< per-k slack in the phi recursion
  std::vector<double> summation_slack; ///< slack in phi_k + sum s_j <= phi_0 + sum delta_j/(1-alpha)
  std::optional<LawViolation> energy_violation;
  std::optional<LawViolation> recursion_violation;
  std::optional<LawViolation> summation_violation;

  bool ok() const { return !energy_violation && !recursion_violation && !summation_violation; }
  double worst_ratio(double phi0) const {
    double w = 0.0;
    for (double e : energy) w = std::max(w, e / (factor * phi0));
    return w;
  }
};

/// Telescoped energy bound, the one-step phi recursion, and its summed form,
/// with phi_k = ||z_k - z*||^2 and delta_k = alpha_{k-1}(1+alpha_{k-1})||z_{k-1} - z_{k-2}||^2.
inline EnergyReport energy_check(std::span<const IterationRecord> trace, double phi0,
                                 const HpeParams& params) {
  detail::require_distances(trace, "energy_check");
  const double sigma = params.sigma;
  const double tau = params.tau;
  const double eta = params.eta;
  EnergyReport rep;
  rep.factor = energy_factor(params.alpha, q_value(params.alpha, eta));
  const double cap = rep.factor * phi0;
  const double tol = law_tol(std::max(phi0, cap));

  linalg::CompensatedSum dissipated, s_sum, delta_sum;
  double phi_prev = phi0, phi_prev2 = phi0, step_prev_sq = 0.0;
  for (const auto& r : trace) {
    const double lv = r.lambda * r.norm_v;
    dissipated.add(tau * std::max(eta * tau * lv * lv, (1.0 - sigma * sigma) * r.tilde_gap_sq));
    const double phi = r.dist_to_solution * r.dist_to_solution;
    const double e = phi + dissipated.value();
    rep.energy.push_back(e);
    if (!rep.energy_violation && e > cap + tol) rep.energy_violation = LawViolation{r.k, cap - e};

    const double a = r.alpha_prev;
    const double delta = a * (1.0 + a) * step_prev_sq;
    const double rec = a * (phi_prev - phi_prev2) + delta - (phi - phi_prev + r.s_k);
    rep.recursion_slack.push_back(rec);
    if (!rep.recursion_violation && rec < -tol) rep.recursion_violation = LawViolation{r.k, rec};

    s_sum.add(r.s_k);
    delta_sum.add(delta);
    const double sum_slack = phi0 + delta_sum.value() / (1.0 - params.alpha) - phi - s_sum.value();
    rep.summation_slack.push_back(sum_slack);
    if (!rep.summation_violation && sum_slack < -tol) {
      rep.summation_violation = LawViolation{r.k, sum_slack};
    }
    phi_prev2 = phi_prev;
    phi_prev = phi;
    step_prev_sq = r.step_norm * r.step_norm;
  }
  return rep;
}

}  // namespace ihpe
