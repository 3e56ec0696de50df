#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ihpe/ergodic.hpp"
#include "ihpe/errors.hpp"
#include "ihpe/linalg.hpp"
#include "ihpe/params.hpp"

namespace ihpe {

/// Output of one inner solve: a triple (z_tilde, v, eps) with v in T^eps(z_tilde)
/// and the stepsize lambda used to produce it.
struct Certificate {
  Vector z_tilde;
  Vector v;
  double eps = 0.0;
  double lambda = 1.0;
};

/// w = z_curr + alpha_k (z_curr - z_prev).
inline Vector extrapolate(const Vector& z_curr, const Vector& z_prev, double alpha_k,
                          double alpha_max) {
  linalg::require_same_dim(z_curr, z_prev, "extrapolate");
  if (!(alpha_k >= 0.0 && alpha_k <= alpha_max)) {
    throw ParameterError("alpha_k in [0,alpha]", "alpha_k = " + detail::fmt(alpha_k) +
                                                     ", alpha = " + detail::fmt(alpha_max));
  }
  if (alpha_k == 0.0) return z_curr;
  return z_curr + alpha_k * (z_curr - z_prev);
}

/// Pieces of the relative-error test
///   ||lambda v + z_tilde - w||^2 + 2 lambda eps <= sigma^2 ||z_tilde - w||^2.
struct CertificateCheck {
  double residual_sq = 0.0;  ///< ||lambda v + z_tilde - w||^2, zeroed at round-off level
  double tilde_gap_sq = 0.0; ///< ||z_tilde - w||^2
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;        ///< lhs / rhs, 0 when lhs == 0
};

/// lhs/rhs with the convention 0/0 = 0 and x/0 = inf.
inline double error_ratio(double lhs, double rhs) {
  if (lhs <= 0.0) return 0.0;
  if (rhs <= 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

inline CertificateCheck evaluate_certificate(const Certificate& cert, const Vector& w,
                                             double sigma) {
  linalg::require_same_dim(cert.z_tilde, w, "certify");
  linalg::require_same_dim(cert.v, w, "certify");
  CertificateCheck c;
  const Vector lv = cert.lambda * cert.v;
  const Vector residual = lv + cert.z_tilde - w;
  c.residual_sq = linalg::norm_sq(residual);
  // A residual below the round-off of forming it is an exact zero.
  const double scale = linalg::norm(lv) + linalg::norm(cert.z_tilde) + linalg::norm(w);
  const double floor = 16.0 * std::numeric_limits<double>::epsilon() * scale;
  if (c.residual_sq <= floor * floor) c.residual_sq = 0.0;
  c.tilde_gap_sq = linalg::dist_sq(cert.z_tilde, w);
  c.lhs = c.residual_sq + 2.0 * cert.lambda * cert.eps;
  c.rhs = sigma * sigma * c.tilde_gap_sq;
  c.ratio = error_ratio(c.lhs, c.rhs);
  return c;
}

/// Returns the error ratio of `cert` at w; throws CertificationError when the
/// ratio exceeds 1 + tol or the certificate is malformed.
inline double certify(const Certificate& cert, const Vector& w, double sigma, double tol = 1e-9,
                      long iteration = -1) {
  if (!(cert.lambda > 0.0)) {
    throw CertificationError(iteration, NAN, "certificate has nonpositive lambda");
  }
  if (!(cert.eps >= 0.0)) {
    throw CertificationError(iteration, NAN, "certificate has negative eps");
  }
  const CertificateCheck c = evaluate_certificate(cert, w, sigma);
  if (!(c.ratio <= 1.0 + tol)) {
    throw CertificationError(iteration, c.ratio,
                             "relative-error criterion violated at k = " +
                                 std::to_string(iteration) + ": ratio " + detail::fmt(c.ratio));
  }
  return c.ratio;
}

/// z_k = w - tau lambda v.
inline Vector relax_update(const Vector& w, const Certificate& cert, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ParameterError("tau in (0,1]", "tau = " + detail::fmt(tau));
  }
  return w - (tau * cert.lambda) * cert.v;
}

struct StoppingRule {
  enum class Mode { pointwise, ergodic };

  Mode mode = Mode::pointwise;
  double rho = 1e-8;
  double eps_hat = 1e-10;
  long max_iter = 1000000;
};

enum class Verdict { pointwise_solution, ergodic_solution, iteration_cap };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pointwise_solution: return "pointwise_solution";
    case Verdict::ergodic_solution: return "ergodic_solution";
    case Verdict::iteration_cap: return "iteration_cap";
  }
  return "?";
}

/// Scalar record of one iteration. Distances to the solution are NaN when no
/// reference solution was supplied.
struct IterationRecord {
  long k = 0;
  double alpha_prev = 0.0;   ///< alpha_{k-1}
  double lambda = 0.0;
  double norm_v = 0.0;
  double eps = 0.0;
  double error_ratio = 0.0;
  double residual_sq = 0.0;  ///< ||lambda v + z_tilde - w||^2
  double tilde_gap_sq = 0.0; ///< ||z_tilde - w||^2
  double relax_gap_sq = 0.0; ///< ||z_k - w||^2
  double step_norm = 0.0;    ///< ||z_k - z_{k-1}||
  double s_k = 0.0;
  double dist_to_solution = NAN;   ///< ||z_k - z*||
  double dist_w_to_solution = NAN; ///< ||w_{k-1} - z*||
  double Lambda = 0.0;
  double norm_v_a = 0.0;
  double eps_a = 0.0;
};

struct SolverState {
  long k = 0;
  Vector z_curr;  ///< z_k after k steps
  Vector z_prev;  ///< z_{k-1}
  Vector w;       ///< last extrapolated point
  ErgodicState ergodic;
  std::vector<IterationRecord> trace;
};

/// Read-only view of one accepted step, handed to observers.
struct StepView {
  long k;
  double alpha_prev;
  const Vector& z_prev;  ///< z_{k-1}
  const Vector& w;       ///< w_{k-1}
  const Certificate& cert;
  const Vector& z;       ///< z_k
  const ErgodicState& ergodic;
  const IterationRecord& record;
};

/// Produces a certificate at the extrapolated point w for iteration k.
using InnerSolver = std::function<Certificate(const Vector& w, long k)>;
using StepObserver = std::function<void(const StepView&)>;

struct RunOptions {
  double lambda_floor = 0.0;
  double certify_tol = 1e-9;
  std::optional<Vector> z_star;
  bool record_trace = true;
  StepObserver observer;
};

struct RunResult {
  SolverState state;
  Verdict verdict = Verdict::iteration_cap;
};

/// The inertial under-relaxed relative-error driver. Each step extrapolates,
/// asks `inner` for a certificate, verifies it, and takes the relaxed step.
inline RunResult run(const Vector& z0, const InnerSolver& inner, const HpeParams& params,
                     const StoppingRule& stop, const RunOptions& opts = {}) {
  linalg::require_finite(z0, "run: z0");
  if (stop.max_iter < 1) throw UsageError("run: max_iter must be >= 1");
  if (opts.z_star) linalg::require_same_dim(*opts.z_star, z0, "run: z_star");
  RunResult out;
  SolverState& st = out.state;
  st.z_curr = z0;
  st.z_prev = z0;
  st.w = z0;
  const double sigma = params.sigma;
  const double tau = params.tau;
  const double eta = params.eta;

  for (long k = 1; k <= stop.max_iter; ++k) {
    const double alpha_prev = params.alpha_at(k - 1);
    st.w = extrapolate(st.z_curr, st.z_prev, alpha_prev, params.alpha);
    const Certificate cert = inner(st.w, k);
    if (!cert.z_tilde.allFinite() || !cert.v.allFinite() || !std::isfinite(cert.eps) ||
        !std::isfinite(cert.lambda)) {
      throw NumericalError(k, "non-finite certificate at k = " + std::to_string(k));
    }
    if (cert.lambda < opts.lambda_floor) {
      throw ParameterError("lambda_k >= lambda_floor",
                           "lambda_" + std::to_string(k) + " = " + detail::fmt(cert.lambda) +
                               " below floor " + detail::fmt(opts.lambda_floor));
    }
    const double ratio = certify(cert, st.w, sigma, opts.certify_tol, k);
    const CertificateCheck check = evaluate_certificate(cert, st.w, sigma);
    Vector z = relax_update(st.w, cert, tau);
    if (!z.allFinite()) throw NumericalError(k, "non-finite iterate at k = " + std::to_string(k));
    st.ergodic.update(cert.z_tilde, cert.v, cert.eps, cert.lambda);

    IterationRecord rec;
    rec.k = k;
    rec.alpha_prev = alpha_prev;
    rec.lambda = cert.lambda;
    rec.norm_v = linalg::norm(cert.v);
    rec.eps = cert.eps;
    rec.error_ratio = ratio;
    rec.residual_sq = check.residual_sq;
    rec.tilde_gap_sq = check.tilde_gap_sq;
    rec.relax_gap_sq = linalg::dist_sq(z, st.w);
    rec.step_norm = linalg::dist(z, st.z_curr);
    rec.s_k = std::max(eta * rec.relax_gap_sq, (1.0 - sigma * sigma) * tau * rec.tilde_gap_sq);
    if (opts.z_star) {
      rec.dist_to_solution = linalg::dist(z, *opts.z_star);
      rec.dist_w_to_solution = linalg::dist(st.w, *opts.z_star);
    }
    rec.Lambda = st.ergodic.Lambda();
    rec.norm_v_a = linalg::norm(st.ergodic.v_average());
    rec.eps_a = st.ergodic.eps_average();

    st.z_prev = std::move(st.z_curr);
    st.z_curr = std::move(z);
    st.k = k;
    if (opts.observer) {
      opts.observer(StepView{k, alpha_prev, st.z_prev, st.w, cert, st.z_curr, st.ergodic, rec});
    }
    const bool pointwise_done = rec.norm_v <= stop.rho && rec.eps <= stop.eps_hat;
    const bool ergodic_done = rec.norm_v_a <= stop.rho && rec.eps_a <= stop.eps_hat;
    if (opts.record_trace) st.trace.push_back(rec);
    if (stop.mode == StoppingRule::Mode::pointwise && pointwise_done) {
      out.verdict = Verdict::pointwise_solution;
      return out;
    }
    if (stop.mode == StoppingRule::Mode::ergodic && ergodic_done) {
      out.verdict = Verdict::ergodic_solution;
      return out;
    }
  }
  out.verdict = Verdict::iteration_cap;
  return out;
}

}  // namespace ihpe
