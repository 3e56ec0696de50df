#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ihpe/errors.hpp"

namespace ihpe {

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline void require_sigma(double sigma) {
  if (!(sigma >= 0.0 && sigma < 1.0)) {
    throw ParameterError("sigma in [0,1)", "sigma = " + fmt(sigma));
  }
}

inline void require_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw ParameterError("beta in (0,1)", "beta = " + fmt(beta));
  }
}

}  // namespace detail

/// Smallest admissible beta' for a given relative-error tolerance sigma:
/// 2(1-sigma) / (3 - sigma + sqrt(9 + 2 sigma - 7 sigma^2)). Equals 1/3 at sigma = 0.
inline double beta_prime_floor(double sigma) {
  detail::require_sigma(sigma);
  return 2.0 * (1.0 - sigma) / (3.0 - sigma + std::sqrt(9.0 + 2.0 * sigma - 7.0 * sigma * sigma));
}

inline double beta_prime(double sigma, double beta) {
  detail::require_sigma(sigma);
  detail::require_beta(beta);
  return std::max(beta, beta_prime_floor(sigma));
}

/// The scalar map beta -> 2(beta-1)^2 / (2(beta-1)^2 + 3 beta - 1). Its value at
/// beta' is (1+sigma) * tau; `inverse_map` undoes it.
inline double scaled_relaxation(double beta) {
  const double d = (beta - 1.0) * (beta - 1.0);
  return 2.0 * d / (2.0 * d + 3.0 * beta - 1.0);
}

/// Under-relaxation factor tau(sigma, beta) that pairs with the inertial bound beta.
inline double tau_of(double sigma, double beta) {
  const double bp = beta_prime(sigma, beta);
  // At the floor the exact value is 1; rounding can push it one ulp above.
  return std::min(1.0, scaled_relaxation(bp) / (1.0 + sigma));
}

inline double eta_of(double sigma, double tau) {
  detail::require_sigma(sigma);
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ParameterError("tau in (0,1]", "tau = " + detail::fmt(tau));
  }
  const double t = (1.0 + sigma) * tau;
  if (!(t < 2.0)) {
    throw ParameterError("eta > 0", "(1+sigma)*tau = " + detail::fmt(t) + " >= 2");
  }
  return 2.0 / t - 1.0;
}

/// q(a) = (eta-1) a^2 - (1+2 eta) a + eta.
inline double q_value(double alpha_prime, double eta) {
  return (eta - 1.0) * alpha_prime * alpha_prime - (1.0 + 2.0 * eta) * alpha_prime + eta;
}

/// Inverse of `scaled_relaxation` on (0, 1+sigma]:
/// t -> (4 - 2t) / (4 - t + sqrt(16 t - 7 t^2)).
inline double inverse_map(double t, double sigma) {
  detail::require_sigma(sigma);
  if (t > 1.0 + sigma && t <= (1.0 + sigma) * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) {
    t = 1.0 + sigma;
  }
  if (!(t > 0.0 && t <= 1.0 + sigma)) {
    throw ParameterError("t in (0,1+sigma]",
                         "t = " + detail::fmt(t) + ", sigma = " + detail::fmt(sigma));
  }
  return (4.0 - 2.0 * t) / (4.0 - t + std::sqrt(16.0 * t - 7.0 * t * t));
}

/// The positive root of q in [0,1): 2 eta / (2 eta + 1 + sqrt(8 eta + 1)).
inline double q_root(double eta) {
  return 2.0 * eta / (2.0 * eta + 1.0 + std::sqrt(8.0 * eta + 1.0));
}

/// Rule producing the inertial factors alpha_0, alpha_1, ... in [0, alpha].
struct AlphaSchedule {
  enum class Kind { constant, ramp };

  Kind kind = Kind::constant;
  /// For `ramp`: alpha_j = alpha * min(1, (j+1)/ramp_length).
  long ramp_length = 1;

  double at(long j, double alpha) const {
    if (kind == Kind::constant) return alpha;
    const double frac = static_cast<double>(j + 1) / static_cast<double>(std::max(1L, ramp_length));
    return alpha * std::min(1.0, frac);
  }

  bool is_constant() const { return kind == Kind::constant || ramp_length <= 1; }

  static AlphaSchedule constant() { return {}; }
  static AlphaSchedule ramp(long length) { return {Kind::ramp, length}; }
};

/// Parameter bundle for the inertial under-relaxed method. Build it with
/// `from_beta` (tau derived from the inertial target beta) or `from_tau`
/// (expert path: beta' recovered from tau), then pass it through `validate`.
struct HpeParams {
  double alpha = 0.0;
  double sigma = 0.0;
  double beta = 1.0 / 3.0;
  double beta_prime = 1.0 / 3.0;
  double tau = 1.0;
  double eta = 1.0;
  double q_alpha = 1.0;
  AlphaSchedule schedule{};

  double alpha_at(long j) const { return schedule.at(j, alpha); }

  static HpeParams from_beta(double alpha, double sigma, double beta,
                             AlphaSchedule schedule = AlphaSchedule::constant()) {
    HpeParams p;
    p.alpha = alpha;
    p.sigma = sigma;
    p.beta = beta;
    p.beta_prime = ihpe::beta_prime(sigma, beta);
    p.tau = tau_of(sigma, beta);
    p.eta = eta_of(sigma, p.tau);
    p.q_alpha = q_value(alpha, p.eta);
    p.schedule = schedule;
    return p;
  }

  static HpeParams from_tau(double alpha, double sigma, double tau,
                            AlphaSchedule schedule = AlphaSchedule::constant()) {
    HpeParams p;
    p.alpha = alpha;
    p.sigma = sigma;
    p.tau = tau;
    p.eta = eta_of(sigma, tau);
    p.beta_prime = inverse_map((1.0 + sigma) * tau, sigma);
    p.beta = p.beta_prime;
    p.q_alpha = q_value(alpha, p.eta);
    p.schedule = schedule;
    return p;
  }
};

/// Checks every consequence of the parameter assumption the convergence
/// theory uses and returns the bundle unchanged when it holds.
inline HpeParams validate(const HpeParams& p, long horizon = 100000) {
  using detail::fmt;
  if (!(p.alpha >= 0.0 && p.alpha < 1.0)) {
    throw ParameterError("alpha in [0,1)", "alpha = " + fmt(p.alpha));
  }
  detail::require_sigma(p.sigma);
  detail::require_beta(p.beta);
  const double eta = eta_of(p.sigma, p.tau);
  if (std::abs(eta - p.eta) > 1e-12 * std::max(1.0, eta)) {
    throw ParameterError("eta = 2/((1+sigma)tau) - 1", "stored eta " + fmt(p.eta) +
                                                           " != " + fmt(eta));
  }
  const double bp = beta_prime(p.sigma, p.beta);
  if (std::abs(bp - p.beta_prime) > 1e-10) {
    throw ParameterError("beta' = max(beta, floor(sigma))",
                         "stored beta' " + fmt(p.beta_prime) + " != " + fmt(bp));
  }
  const double tau = tau_of(p.sigma, p.beta);
  if (std::abs(tau - p.tau) > 1e-10 * tau) {
    throw ParameterError("tau = tau(sigma, beta)",
                         "tau " + fmt(p.tau) + " differs from closed form " + fmt(tau));
  }
  const double q = q_value(p.alpha, eta);
  if (!(q > 0.0)) {
    throw ParameterError("q(alpha) <= 0", "q(" + fmt(p.alpha) + ") = " + fmt(q));
  }
  if (!(p.alpha < p.beta)) {
    throw ParameterError("alpha >= beta",
                         "alpha = " + fmt(p.alpha) + ", beta = " + fmt(p.beta) +
                             " (need alpha < beta)");
  }
  const double q_at_root = q_value(p.beta_prime, eta);
  if (std::abs(q_at_root) > 1e-10) {
    throw ParameterError("q(beta') = 0", "q(beta') = " + fmt(q_at_root));
  }
  if (p.schedule.kind == AlphaSchedule::Kind::ramp && p.schedule.ramp_length < 1) {
    throw ParameterError("alpha schedule", "ramp length must be >= 1");
  }
  const long check = std::min(horizon, std::max(1L, p.schedule.ramp_length) + 1);
  double prev = 0.0;
  for (long j = 0; j <= check; ++j) {
    const double a = p.alpha_at(j);
    if (a < prev) {
      throw ParameterError("alpha schedule nondecreasing",
                           "alpha_" + std::to_string(j) + " = " + fmt(a) + " < " + fmt(prev));
    }
    if (a < 0.0 || a > p.alpha) {
      throw ParameterError("alpha schedule within [0,alpha]",
                           "alpha_" + std::to_string(j) + " = " + fmt(a));
    }
    prev = a;
  }
  HpeParams out = p;
  out.q_alpha = q;
  return out;
}

}  // namespace ihpe
