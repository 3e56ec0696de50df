#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "ihpe/errors.hpp"
#include "ihpe/linalg.hpp"

namespace ihpe {

/// Streaming lambda-weighted averages of (z_tilde_j, v_j, eps_j).
///
/// eps^a is kept through the expansion
///   eps^a = (sum lambda_j eps_j + sum lambda_j <z_tilde_j - c, v_j>) / Lambda - <z^a - c, v^a>
/// which holds for any anchor c; the first z_tilde is used as anchor to keep
/// the cancellation small.
class ErgodicState {
 public:
  void update(const Vector& z_tilde, const Vector& v, double eps, double lambda) {
    if (count_ == 0) {
      anchor_ = z_tilde;
      z_sum_ = Vector::Zero(z_tilde.size());
      v_sum_ = Vector::Zero(v.size());
    }
    linalg::require_same_dim(z_tilde, anchor_, "ErgodicState::update");
    linalg::require_same_dim(v, anchor_, "ErgodicState::update");
    const Vector shifted = z_tilde - anchor_;
    lambda_sum_.add(lambda);
    z_sum_ += lambda * shifted;
    v_sum_ += lambda * v;
    eps_sum_.add(lambda * eps);
    cross_sum_.add(lambda * linalg::inner(shifted, v));
    ++count_;
  }

  long count() const { return count_; }
  double Lambda() const { return lambda_sum_.value(); }

  Vector z_average() const { return anchor_ + z_sum_ / Lambda(); }
  Vector v_average() const { return v_sum_ / Lambda(); }

  /// Raw aggregated error; nonnegative up to round-off.
  double eps_average() const {
    const double L = Lambda();
    const Vector z_shift = z_sum_ / L;
    return (eps_sum_.value() + cross_sum_.value()) / L - linalg::inner(z_shift, v_sum_ / L);
  }

  /// eps^a clamped to zero when it sits within `tol` below zero.
  double eps_average_reported(double tol = 1e-9) const {
    const double e = eps_average();
    return (e < 0.0 && e >= -tol) ? 0.0 : e;
  }

 private:
  long count_ = 0;
  Vector anchor_;
  Vector z_sum_;
  Vector v_sum_;
  linalg::CompensatedSum lambda_sum_;
  linalg::CompensatedSum eps_sum_;
  linalg::CompensatedSum cross_sum_;
};

inline ErgodicState ergodic_update(ErgodicState state, const Vector& z_tilde, const Vector& v,
                                   double eps, double lambda) {
  state.update(z_tilde, v, eps, lambda);
  return state;
}

struct EnlargementPoint {
  Vector z_tilde;
  Vector v;
  double eps = 0.0;
};

/// Transportation formula: the weighted average of points v_l in T^{eps_l}(z_l)
/// lies in T^{eps^a}(z^a) with
///   eps^a = sum a_l (eps_l + <z_l - z^a, v_l - v^a>) >= 0.
inline EnlargementPoint transport(std::span<const EnlargementPoint> points,
                                  std::span<const double> weights) {
  if (points.empty() || points.size() != weights.size()) {
    throw UsageError("transport: need one weight per point");
  }
  double total = 0.0;
  for (double a : weights) {
    if (!(a >= 0.0)) throw UsageError("transport: weights must be nonnegative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw UsageError("transport: weights must sum to 1");
  }
  const Index n = points.front().z_tilde.size();
  EnlargementPoint out{Vector::Zero(n), Vector::Zero(n), 0.0};
  for (std::size_t l = 0; l < points.size(); ++l) {
    linalg::require_same_dim(points[l].z_tilde, out.z_tilde, "transport");
    linalg::require_same_dim(points[l].v, out.v, "transport");
    out.z_tilde += weights[l] * points[l].z_tilde;
    out.v += weights[l] * points[l].v;
  }
  linalg::CompensatedSum eps;
  for (std::size_t l = 0; l < points.size(); ++l) {
    eps.add(weights[l] * (points[l].eps + linalg::inner(points[l].z_tilde - out.z_tilde,
                                                        points[l].v - out.v)));
  }
  out.eps = eps.value();
  return out;
}

}  // namespace ihpe
