#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "ihpe/errors.hpp"

namespace ihpe {

/// A point of the model Hilbert space: a dense real vector.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

namespace linalg {

/// Dimension above which inner products switch to compensated summation.
inline constexpr Index kCompensatedThreshold = 10000;

inline void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  if (a.size() != b.size()) {
    throw UsageError(std::string(what) + ": dimension mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double inner(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "inner");
  if (a.size() <= kCompensatedThreshold) {
    return a.dot(b);
  }
  CompensatedSum acc;
  for (Index i = 0; i < a.size(); ++i) {
    acc.add(a[i] * b[i]);
  }
  return acc.value();
}

inline double norm_sq(const Vector& a) { return inner(a, a); }
inline double norm(const Vector& a) { return std::sqrt(norm_sq(a)); }

inline double dist_sq(const Vector& a, const Vector& b) {
  require_same_dim(a, b, "dist_sq");
  return norm_sq(a - b);
}
inline double dist(const Vector& a, const Vector& b) { return std::sqrt(dist_sq(a, b)); }

/// p*w + (1-p)*z for any real p.
inline Vector convex_combine(double p, const Vector& w, const Vector& z) {
  require_same_dim(w, z, "convex_combine");
  return p * w + (1.0 - p) * z;
}

inline bool all_finite(const Vector& a) { return a.allFinite(); }

inline void require_finite(const Vector& a, const char* what) {
  if (!a.allFinite()) {
    throw UsageError(std::string(what) + ": non-finite coordinate");
  }
}

/// Largest singular value.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  const Matrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

}  // namespace linalg
}  // namespace ihpe
