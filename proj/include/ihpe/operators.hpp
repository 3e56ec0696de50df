#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <variant>

#include "ihpe/errors.hpp"
#include "ihpe/linalg.hpp"

namespace ihpe {

/// z -> A z + b. Monotone when the symmetric part of A is positive semidefinite.
struct AffineOperator {
  Matrix A;
  Vector b;

  AffineOperator() = default;
  AffineOperator(Matrix a, Vector offset) : A(std::move(a)), b(std::move(offset)) {
    if (A.rows() != A.cols() || A.rows() != b.size()) {
      throw UsageError("AffineOperator: matrix must be square and match the offset");
    }
  }

  Index dim() const { return b.size(); }

  Vector apply(const Vector& z) const {
    if (z.size() != dim()) throw UsageError("AffineOperator::apply: dimension mismatch");
    return A * z + b;
  }

  Matrix symmetric_part() const { return 0.5 * (A + A.transpose()); }

  double min_symmetric_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetric_part(), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }

  bool is_monotone(double tol = 1e-10) const {
    return min_symmetric_eigenvalue() >= -tol * std::max(1.0, A.norm());
  }

  bool is_symmetric(double tol = 1e-12) const {
    return (A - A.transpose()).norm() <= tol * std::max(1.0, A.norm());
  }
};

/// The zero operator on R^n.
struct ZeroOperator {
  Index n = 0;
};

/// Normal cone of the box [lower, upper]; its resolvent is the projection.
struct BoxNormalCone {
  Vector lower;
  Vector upper;

  BoxNormalCone() = default;
  BoxNormalCone(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
    if (lower.size() != upper.size()) throw UsageError("BoxNormalCone: bound size mismatch");
    if ((lower.array() > upper.array()).any()) throw UsageError("BoxNormalCone: lower > upper");
  }

  Index dim() const { return lower.size(); }

  Vector project(const Vector& w) const {
    if (w.size() != dim()) throw UsageError("BoxNormalCone::project: dimension mismatch");
    return w.cwiseMax(lower).cwiseMin(upper);
  }
};

/// Subdifferential of weight * ||.||_1; its resolvent is soft-thresholding.
struct L1Subdifferential {
  Index n = 0;
  double weight = 0.0;
};

/// (z_tilde, v) with z_tilde = (lambda B + I)^{-1} w and v = (w - z_tilde)/lambda in B(z_tilde).
struct ResolventPoint {
  Vector z_tilde;
  Vector v;
};

/// Resolvent oracle for a maximal monotone operator B with a closed-form or
/// linear-solve resolvent. Copies share the factorization cache; evaluation
/// is safe to call concurrently.
class ResolventOracle {
 public:
  using Kind = std::variant<ZeroOperator, AffineOperator, BoxNormalCone, L1Subdifferential>;

  ResolventOracle() : ResolventOracle(ZeroOperator{0}) {}
  explicit ResolventOracle(Kind op) : op_(std::move(op)), cache_(std::make_shared<Cache>()) {}

  static ResolventOracle zero(Index n) { return ResolventOracle(ZeroOperator{n}); }
  static ResolventOracle affine(AffineOperator op) { return ResolventOracle(std::move(op)); }
  static ResolventOracle box(Vector lo, Vector hi) {
    return ResolventOracle(BoxNormalCone(std::move(lo), std::move(hi)));
  }
  static ResolventOracle l1(Index n, double weight) {
    if (!(weight >= 0.0)) throw UsageError("l1 weight must be nonnegative");
    return ResolventOracle(L1Subdifferential{n, weight});
  }

  Index domain_dim() const {
    return std::visit(
        [](const auto& op) -> Index {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ZeroOperator> || std::is_same_v<T, L1Subdifferential>) {
            return op.n;
          } else {
            return op.dim();
          }
        },
        op_);
  }

  const Kind& kind() const { return op_; }
  const AffineOperator* affine_part() const { return std::get_if<AffineOperator>(&op_); }
  const BoxNormalCone* box_part() const { return std::get_if<BoxNormalCone>(&op_); }
  bool is_zero() const { return std::holds_alternative<ZeroOperator>(op_); }

  /// (lambda B + I)^{-1} w.
  Vector evaluate(double lambda, const Vector& w) const {
    if (!(lambda > 0.0)) throw UsageError("resolvent: lambda must be positive");
    if (w.size() != domain_dim()) throw UsageError("resolvent: dimension mismatch");
    return std::visit(
        [&](const auto& op) -> Vector {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ZeroOperator>) {
            return w;
          } else if constexpr (std::is_same_v<T, BoxNormalCone>) {
            return op.project(w);
          } else if constexpr (std::is_same_v<T, L1Subdifferential>) {
            const double t = lambda * op.weight;
            Vector out(w.size());
            for (Index i = 0; i < w.size(); ++i) {
              const double a = std::abs(w[i]) - t;
              out[i] = a > 0.0 ? std::copysign(a, w[i]) : 0.0;
            }
            return out;
          } else {
            return solve_affine(op, lambda, w);
          }
        },
        op_);
  }

  /// v in B(z), up to `tol`.
  bool contains(const Vector& z, const Vector& v, double tol = 1e-9) const {
    if (z.size() != domain_dim() || v.size() != domain_dim()) return false;
    return std::visit(
        [&](const auto& op) -> bool {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, ZeroOperator>) {
            return linalg::norm(v) <= tol;
          } else if constexpr (std::is_same_v<T, AffineOperator>) {
            return linalg::norm(v - op.apply(z)) <= tol * (1.0 + linalg::norm(v));
          } else if constexpr (std::is_same_v<T, BoxNormalCone>) {
            for (Index i = 0; i < z.size(); ++i) {
              const double lo = op.lower[i];
              const double hi = op.upper[i];
              if (z[i] < lo - tol || z[i] > hi + tol) return false;
              const bool at_lo = z[i] <= lo + tol;
              const bool at_hi = z[i] >= hi - tol;
              if (at_lo && at_hi) continue;
              if (at_lo && v[i] > tol) return false;
              if (at_hi && v[i] < -tol) return false;
              if (!at_lo && !at_hi && std::abs(v[i]) > tol) return false;
            }
            return true;
          } else {
            for (Index i = 0; i < z.size(); ++i) {
              if (std::abs(z[i]) > tol) {
                if (std::abs(v[i] - std::copysign(op.weight, z[i])) > tol) return false;
              } else if (std::abs(v[i]) > op.weight + tol) {
                return false;
              }
            }
            return true;
          }
        },
        op_);
  }

 private:
  struct Cache {
    std::mutex mutex;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::shared_ptr<const Eigen::PartialPivLU<Matrix>> lu;
  };

  Vector solve_affine(const AffineOperator& op, double lambda, const Vector& w) const {
    std::shared_ptr<const Eigen::PartialPivLU<Matrix>> lu;
    {
      std::lock_guard<std::mutex> lock(cache_->mutex);
      if (cache_->lambda == lambda && cache_->lu) {
        lu = cache_->lu;
      } else {
        const Matrix sys = lambda * op.A + Matrix::Identity(op.dim(), op.dim());
        auto fresh = std::make_shared<Eigen::PartialPivLU<Matrix>>(sys);
        if (!(std::abs(fresh->determinant()) > 0.0) || !fresh->matrixLU().allFinite()) {
          throw OracleError("resolvent: singular system (lambda A + I)");
        }
        cache_->lambda = lambda;
        cache_->lu = fresh;
        lu = std::move(fresh);
      }
    }
    Vector z = lu->solve(w - lambda * op.b);
    if (!z.allFinite()) throw OracleError("resolvent: non-finite solve");
    return z;
  }

  Kind op_;
  std::shared_ptr<Cache> cache_;
};

inline ResolventPoint resolve(const ResolventOracle& B, double lambda, const Vector& w) {
  ResolventPoint out;
  out.z_tilde = B.evaluate(lambda, w);
  out.v = (w - out.z_tilde) / lambda;
  return out;
}

/// Point-to-point monotone map F with Lipschitz (or cocoercivity) constant L
/// and the projection onto its domain set Omega (identity when Omega = H).
class ForwardMap {
 public:
  ForwardMap() = default;

  static ForwardMap zero(Index n) {
    ForwardMap f;
    f.n_ = n;
    f.eval_ = [n](const Vector&) { return Vector::Zero(n); };
    f.lipschitz_ = 0.0;
    f.cocoercive_ = false;
    f.affine_ = AffineOperator(Matrix::Zero(n, n), Vector::Zero(n));
    return f;
  }

  /// Affine F. With `cocoercive` the matrix must be symmetric PSD and L is its
  /// largest eigenvalue; otherwise L is the spectral norm.
  static ForwardMap affine(AffineOperator op, bool cocoercive,
                           std::optional<BoxNormalCone> domain = std::nullopt) {
    if (!op.is_monotone()) throw OracleError("ForwardMap: affine map is not monotone");
    ForwardMap f;
    f.n_ = op.dim();
    if (cocoercive) {
      if (!op.is_symmetric()) {
        throw OracleError("ForwardMap: cocoercive affine map needs a symmetric matrix");
      }
      Eigen::SelfAdjointEigenSolver<Matrix> eig(op.symmetric_part(), Eigen::EigenvaluesOnly);
      f.lipschitz_ = std::max(0.0, eig.eigenvalues().maxCoeff());
    } else {
      f.lipschitz_ = linalg::spectral_norm(op.A);
    }
    f.cocoercive_ = cocoercive;
    f.domain_ = std::move(domain);
    auto shared = std::make_shared<const AffineOperator>(op);
    f.eval_ = [shared](const Vector& z) { return shared->apply(z); };
    f.affine_ = std::move(op);
    return f;
  }

  static ForwardMap general(Index n, std::function<Vector(const Vector&)> eval, double lipschitz,
                            bool cocoercive, std::optional<BoxNormalCone> domain = std::nullopt) {
    ForwardMap f;
    f.n_ = n;
    f.eval_ = std::move(eval);
    f.lipschitz_ = lipschitz;
    f.cocoercive_ = cocoercive;
    f.domain_ = std::move(domain);
    return f;
  }

  Index dim() const { return n_; }
  double lipschitz() const { return lipschitz_; }
  bool cocoercive() const { return cocoercive_; }
  const std::optional<AffineOperator>& affine_part() const { return affine_; }
  const std::optional<BoxNormalCone>& domain() const { return domain_; }

  Vector evaluate(const Vector& z) const {
    if (z.size() != n_) throw UsageError("ForwardMap: dimension mismatch");
    return eval_(z);
  }

  /// P_Omega(w).
  Vector project_domain(const Vector& w) const { return domain_ ? domain_->project(w) : w; }

 private:
  Index n_ = 0;
  std::function<Vector(const Vector&)> eval_;
  double lipschitz_ = 0.0;
  bool cocoercive_ = false;
  std::optional<BoxNormalCone> domain_;
  std::optional<AffineOperator> affine_;
};

/// inf over z' of <z - z', v - (A z' + b)>, in closed form. With d = z - z'
/// and r = v - (A z + b) the objective is d^T S d + <d, r>, S = (A + A^T)/2;
/// the stationarity system 2 S d = -r is solved in the eigenbasis of S. When r
/// has a component in ker S the infimum is -infinity.
struct EnlargementGap {
  double infimum = 0.0;
  bool bounded = true;
};

inline EnlargementGap enlargement_infimum(const AffineOperator& T, const Vector& z,
                                          const Vector& v) {
  linalg::require_same_dim(z, v, "enlargement_infimum");
  if (z.size() != T.dim()) throw UsageError("enlargement_infimum: dimension mismatch");
  const Vector tz = T.apply(z);
  const Vector r = v - tz;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(T.symmetric_part());
  const Vector& s = eig.eigenvalues();
  const Vector c = eig.eigenvectors().transpose() * r;
  const double s_max = std::max(0.0, s.maxCoeff());
  const double s_floor = 1e-12 * std::max(1.0, s_max);
  const double null_tol = 1e-9 * (1.0 + linalg::norm(v) + linalg::norm(tz));
  EnlargementGap gap;
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s[i] > s_floor) {
      acc += c[i] * c[i] / s[i];
    } else if (std::abs(c[i]) > null_tol) {
      gap.bounded = false;
      gap.infimum = -std::numeric_limits<double>::infinity();
      return gap;
    }
  }
  gap.infimum = -0.25 * acc;
  return gap;
}

/// v in T^eps(z) for affine T.
inline bool enlargement_member(const AffineOperator& T, const Vector& z, const Vector& v,
                               double eps, double tol = 1e-9) {
  if (!(eps >= 0.0)) throw UsageError("enlargement_member: eps must be nonnegative");
  const EnlargementGap gap = enlargement_infimum(T, z, v);
  return gap.bounded && gap.infimum >= -eps - tol;
}

/// v_f + v_b in (F + B)^{eps}(z), certified by v_f in F^{eps}(z) (affine F)
/// and v_b in B(z).
inline bool decomposed_member(const AffineOperator& F, const ResolventOracle& B, const Vector& z,
                              const Vector& v_f, const Vector& v_b, double eps,
                              double tol = 1e-9) {
  return enlargement_member(F, z, v_f, eps, tol) && B.contains(z, v_b, tol);
}

}  // namespace ihpe
