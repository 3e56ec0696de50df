#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>

#include "ihpe/errors.hpp"
#include "ihpe/linalg.hpp"
#include "ihpe/operators.hpp"

namespace ihpe {

enum class ProblemKind { affine_inclusion, box_constrained_quadratic, bilinear_saddle, l1_composite };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::affine_inclusion: return "affine_inclusion";
    case ProblemKind::box_constrained_quadratic: return "box_constrained_quadratic";
    case ProblemKind::bilinear_saddle: return "bilinear_saddle";
    case ProblemKind::l1_composite: return "l1_composite";
  }
  return "?";
}

inline ProblemKind problem_kind_from_string(std::string_view s) {
  if (s == "affine_inclusion") return ProblemKind::affine_inclusion;
  if (s == "box_constrained_quadratic") return ProblemKind::box_constrained_quadratic;
  if (s == "bilinear_saddle") return ProblemKind::bilinear_saddle;
  if (s == "l1_composite") return ProblemKind::l1_composite;
  throw UsageError("unsupported problem kind '" + std::string(s) + "'");
}

/// Everything needed to rebuild a problem instance. Explicit operator data
/// overrides the seeded generator where given.
struct ProblemSpec {
  ProblemKind kind = ProblemKind::affine_inclusion;
  Index dimension = 2;
  std::uint64_t seed = 0;
  /// affine_inclusion only: drop the skew part so F is cocoercive.
  bool symmetric = false;
  /// l1_composite only.
  double l1_weight = 0.1;
  std::optional<Matrix> matrix;
  std::optional<Vector> offset;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
  std::optional<Vector> z0;
};

/// A problem 0 in F(z) + B(z) (or 0 in T(z) when `affine_T` is set, in which
/// case F = T and B = 0) plus its starting point and, when known, the
/// solution closest to z0.
struct TestProblem {
  ProblemSpec spec;
  ForwardMap forward;
  ResolventOracle backward;
  std::optional<AffineOperator> affine_T;
  Vector z0;
  std::optional<Vector> known_solution;
  std::optional<double> known_d0;

  Index dim() const { return z0.size(); }

  /// Resolvent of the whole operator T, available for affine problems.
  ResolventOracle full_resolvent() const {
    if (!affine_T) {
      throw OracleError(std::string("problem kind ") + std::string(to_string(spec.kind)) +
                        " has no closed-form resolvent for the full operator");
    }
    return ResolventOracle::affine(*affine_T);
  }

  /// ||z - J_B(z - F(z))||, zero exactly at solutions.
  double inclusion_residual(const Vector& z) const {
    if (affine_T) return linalg::norm(affine_T->apply(z));
    return linalg::norm(z - backward.evaluate(1.0, z - forward.evaluate(z)));
  }
};

namespace detail {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Matrix normal_matrix(Index r, Index c) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

  Matrix orthogonal(Index n) {
    Eigen::HouseholderQR<Matrix> qr(normal_matrix(n, n));
    return qr.householderQ() * Matrix::Identity(n, n);
  }

  /// Symmetric positive definite matrix with spectrum drawn from [lo, hi].
  Matrix spd(Index n, double lo, double hi) {
    const Matrix q = orthogonal(n);
    Vector s(n);
    for (Index i = 0; i < n; ++i) s[i] = uniform(lo, hi);
    return q * s.asDiagonal() * q.transpose();
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace detail

/// Solution of A z + b = 0 closest to `anchor`, or nullopt if inconsistent.
inline std::optional<Vector> nearest_affine_zero(const AffineOperator& T, const Vector& anchor) {
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(T.A);
  const Vector d = cod.solve(T.apply(anchor));
  Vector z = anchor - d;
  const double res = linalg::norm(T.apply(z));
  if (!(res <= 1e-10 * (1.0 + T.b.norm() + T.A.norm() * anchor.norm()))) return std::nullopt;
  return z;
}

namespace detail {

inline void attach_affine_solution(TestProblem& p) {
  if (auto z = nearest_affine_zero(*p.affine_T, p.z0)) {
    p.known_solution = *z;
    p.known_d0 = linalg::dist(p.z0, *z);
  }
}

inline void set_affine_T(TestProblem& p, AffineOperator T, bool cocoercive) {
  const Index n = T.dim();
  p.forward = ForwardMap::affine(T, cocoercive);
  p.backward = ResolventOracle::zero(n);
  p.affine_T = std::move(T);
}

}  // namespace detail

inline TestProblem make_problem(const ProblemSpec& spec) {
  if (spec.dimension < 1 && !spec.matrix) throw UsageError("make_problem: dimension must be >= 1");
  detail::Sampler rng(spec.seed);
  TestProblem p;
  p.spec = spec;
  Index n = spec.matrix ? spec.matrix->rows() : spec.dimension;
  p.spec.dimension = n;

  switch (spec.kind) {
    case ProblemKind::affine_inclusion: {
      Matrix A;
      if (spec.matrix) {
        A = *spec.matrix;
      } else {
        A = rng.spd(n, 0.5, 2.0);
        if (!spec.symmetric) {
          const Matrix g = rng.normal_matrix(n, n);
          A += 0.5 * (g - g.transpose()) / std::sqrt(static_cast<double>(n));
        }
      }
      Vector b = spec.offset ? *spec.offset : rng.normal_vector(n);
      AffineOperator T(std::move(A), std::move(b));
      if (!T.is_monotone()) throw UsageError("affine_inclusion: matrix is not monotone");
      p.z0 = spec.z0 ? *spec.z0 : rng.normal_vector(n);
      const bool cocoercive = spec.symmetric || (spec.matrix && T.is_symmetric());
      detail::set_affine_T(p, std::move(T), cocoercive);
      detail::attach_affine_solution(p);
      break;
    }
    case ProblemKind::bilinear_saddle: {
      Matrix M;
      if (spec.matrix) {
        M = *spec.matrix;
        if ((M + M.transpose()).norm() > 1e-12 * std::max(1.0, M.norm())) {
          throw UsageError("bilinear_saddle: matrix must be skew-symmetric");
        }
      } else {
        const Index rows = (n + 1) / 2;
        const Index cols = n - rows;
        M = Matrix::Zero(n, n);
        if (cols > 0) {
          const Matrix u = rng.orthogonal(rows);
          const Matrix v = rng.orthogonal(cols);
          Matrix s = Matrix::Zero(rows, cols);
          for (Index i = 0; i < cols; ++i) s(i, i) = rng.uniform(0.5, 1.5);
          const Matrix K = u * s * v.transpose();
          M.topRightCorner(rows, cols) = K;
          M.bottomLeftCorner(cols, rows) = -K.transpose();
        }
      }
      Vector b = spec.offset ? *spec.offset : Vector::Zero(n);
      p.z0 = spec.z0 ? *spec.z0 : rng.normal_vector(n);
      detail::set_affine_T(p, AffineOperator(std::move(M), std::move(b)), false);
      detail::attach_affine_solution(p);
      break;
    }
    case ProblemKind::box_constrained_quadratic: {
      const Vector lo = spec.lower ? *spec.lower : Vector::Zero(n);
      const Vector hi = spec.upper ? *spec.upper : Vector::Ones(n);
      if (lo.size() != n || hi.size() != n) throw UsageError("box bounds must match the dimension");
      const Matrix Q = spec.matrix ? *spec.matrix : rng.spd(n, 0.5, 2.0);
      // Plant a solution with a mix of active and inactive bounds, strictly complementary.
      Vector zs(n), g(n);
      for (Index i = 0; i < n; ++i) {
        const double width = hi[i] - lo[i];
        switch (rng.pick(3)) {
          case 0: zs[i] = lo[i]; g[i] = rng.uniform(0.1, 1.0); break;
          case 1: zs[i] = hi[i]; g[i] = -rng.uniform(0.1, 1.0); break;
          default: zs[i] = lo[i] + width * rng.uniform(0.2, 0.8); g[i] = 0.0; break;
        }
        if (width == 0.0) g[i] = 0.0;
      }
      Vector c = spec.offset ? *spec.offset : Vector(g - Q * zs);
      BoxNormalCone box(lo, hi);
      p.forward = ForwardMap::affine(AffineOperator(Q, c), true, box);
      p.backward = ResolventOracle(box);
      p.z0 = spec.z0 ? *spec.z0 : Vector(rng.normal_vector(n) + Vector::Constant(n, 0.5));
      if (!spec.offset) {
        p.known_solution = zs;
        p.known_d0 = linalg::dist(p.z0, zs);
      }
      break;
    }
    case ProblemKind::l1_composite: {
      const Index m = 2 * n;
      const double mu = spec.l1_weight;
      if (!(mu > 0.0)) throw UsageError("l1_composite: weight must be positive");
      const Matrix D = spec.matrix ? *spec.matrix
                                   : Matrix(rng.normal_matrix(m, n) / std::sqrt(static_cast<double>(m)));
      const Matrix G = D.transpose() * D;
      Vector rhs;  // D^T y
      std::optional<Vector> planted;
      if (spec.offset) {
        rhs = *spec.offset;
      } else {
        Vector zs(n), g(n);
        for (Index i = 0; i < n; ++i) {
          if (rng.uniform(0.0, 1.0) < 0.4) {
            const double sign = rng.pick(2) == 0 ? -1.0 : 1.0;
            zs[i] = sign * rng.uniform(0.5, 1.5);
            g[i] = mu * sign;
          } else {
            zs[i] = 0.0;
            g[i] = mu * rng.uniform(-0.8, 0.8);
          }
        }
        // Optimality: D^T(y - D zs) = g, so D^T y = G zs + g.
        rhs = G * zs + g;
        planted = zs;
      }
      p.forward = ForwardMap::affine(AffineOperator(G, -rhs), true);
      p.backward = ResolventOracle::l1(n, mu);
      p.z0 = spec.z0 ? *spec.z0 : rng.normal_vector(n);
      if (planted) {
        p.known_solution = *planted;
        p.known_d0 = linalg::dist(p.z0, *planted);
      }
      break;
    }
  }
  if (p.z0.size() != n) throw UsageError("z0 must match the problem dimension");
  return p;
}

inline TestProblem make_problem(ProblemKind kind, Index dimension, std::uint64_t seed) {
  ProblemSpec spec;
  spec.kind = kind;
  spec.dimension = dimension;
  spec.seed = seed;
  return make_problem(spec);
}

}  // namespace ihpe
