#include <gtest/gtest.h>

#include "harness.hpp"
#include "ihpe/ihpe.hpp"

using namespace ihpe;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

double max_abs(const Vector& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(PpmStep, ZeroOperator) {
  const Certificate c = ppm_step(ResolventOracle::zero(2), vec({3, -1}), 0.7);
  EXPECT_EQ(c.z_tilde, vec({3, -1}));
  EXPECT_EQ(c.v, vec({0, 0}));
  EXPECT_EQ(c.eps, 0.0);
}

TEST(PpmStep, AffineIdentity) {
  const ResolventOracle B = ResolventOracle::affine(AffineOperator(Matrix::Identity(2, 2), Vector::Zero(2)));
  const Certificate c = ppm_step(B, vec({2, 4}), 1.0);
  EXPECT_LE(max_abs(c.z_tilde - vec({1, 2})), 1e-15);
  EXPECT_LE(max_abs(c.v - vec({1, 2})), 1e-15);
  EXPECT_EQ(c.eps, 0.0);
  EXPECT_EQ(certify(c, vec({2, 4}), 0.0), 0.0);
}

TEST(PpmStep, BoxDisplacement) {
  const ResolventOracle B = ResolventOracle::box(Vector::Zero(2), Vector::Ones(2));
  const Certificate c = ppm_step(B, vec({2, -1}), 2.0);
  EXPECT_EQ(c.z_tilde, vec({1, 0}));
  EXPECT_LE(max_abs(c.v - vec({0.5, -0.5})), 1e-15);
  EXPECT_TRUE(B.contains(c.z_tilde, c.v));
}

TEST(PpmStep, RejectsBadLambda) {
  EXPECT_THROW(ppm_step(ResolventOracle::zero(1), vec({1}), 0.0), ParameterError);
  EXPECT_THROW(ppm_step(ResolventOracle::zero(1), vec({1}), NAN), ParameterError);
}

TEST(TsengStep, ZeroForwardMapIsProximal) {
  const ResolventOracle B = ResolventOracle::l1(3, 0.5);
  const Vector w = vec({2, -0.1, -3});
  const Certificate a = tseng_step(ForwardMap::zero(3), B, w, 1.5, 0.5);
  const Certificate b = ppm_step(B, w, 1.5);
  EXPECT_EQ(a.z_tilde, b.z_tilde);
  EXPECT_LE(max_abs(a.v - b.v), 1e-15);
  EXPECT_EQ(a.eps, 0.0);
}

TEST(TsengStep, BilinearRatiosStayBelowOne) {
  const HpeParams p = validate(HpeParams::from_beta(0.2, 0.6, 0.4));
  const auto s = harness::seeded_run(ProblemKind::bilinear_saddle, InstanceKind::tseng_fbf, 8, 3, p,
                                     LambdaRule::at_cap(), harness::cap_only(500));
  EXPECT_NEAR(s.instance.lambda_cap, 0.6 / s.problem.forward.lipschitz(), 1e-15);
  for (const auto& r : s.result.state.trace) EXPECT_LE(r.error_ratio, 1.0 + 1e-9);
}

TEST(TsengStep, FixedPoint) {
  const TestProblem prob = make_problem(ProblemKind::l1_composite, 5, 2);
  const Vector& zs = *prob.known_solution;
  const double lam = 0.5 / prob.forward.lipschitz();
  const Certificate c = tseng_step(prob.forward, prob.backward, zs, lam, 0.5);
  EXPECT_LE(max_abs(c.v), 1e-9);
  EXPECT_LE(certify(c, zs, 0.5), 1.0);
}

TEST(TsengStep, InclusionIsExact) {
  for (ProblemKind k : {ProblemKind::l1_composite, ProblemKind::box_constrained_quadratic}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TestProblem prob = make_problem(k, 6, seed);
      const double lam = 0.8 / prob.forward.lipschitz();
      const Vector w = prob.z0 * 1.7;
      const Certificate c = tseng_step(prob.forward, prob.backward, w, lam, 0.8);
      EXPECT_TRUE(prob.backward.contains(c.z_tilde, c.v - prob.forward.evaluate(c.z_tilde), 1e-10))
          << to_string(k) << " seed " << seed;
      EXPECT_LE(certify(c, w, 0.8), 1.0 + 1e-9);
    }
  }
}

TEST(TsengStep, CapAndSigmaErrors) {
  const TestProblem prob = make_problem(ProblemKind::bilinear_saddle, 4, 1);
  const double L = prob.forward.lipschitz();
  EXPECT_NO_THROW(tseng_step(prob.forward, prob.backward, prob.z0, 0.5 / L, 0.5));
  try {
    tseng_step(prob.forward, prob.backward, prob.z0, 0.51 / L, 0.5);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("sigma/L"), std::string::npos);
  }
  EXPECT_THROW(tseng_step(prob.forward, prob.backward, prob.z0, 0.1 / L, 0.0), ParameterError);
  EXPECT_THROW(tseng_step(prob.forward, prob.backward, prob.z0, 0.1 / L, 1.0), ParameterError);
}

TEST(FbStep, FixedPoint) {
  const TestProblem prob = make_problem(ProblemKind::l1_composite, 5, 3);
  const Vector& zs = *prob.known_solution;
  const double lam = lambda_cap(InstanceKind::forward_backward, 0.9, prob.forward.lipschitz());
  const Certificate c = fb_step(prob.forward, prob.backward, zs, lam, 0.9);
  EXPECT_LE(max_abs(c.z_tilde - zs), 1e-9);
  EXPECT_LE(max_abs(c.v), 1e-8);
  EXPECT_LE(c.eps, 1e-16);
}

TEST(FbStep, BoundaryAtTheCap) {
  for (ProblemKind k : {ProblemKind::l1_composite, ProblemKind::box_constrained_quadratic}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const TestProblem prob = make_problem(k, 7, seed);
      const double sigma = 0.99;
      const double lam = lambda_cap(InstanceKind::forward_backward, sigma, prob.forward.lipschitz());
      const Certificate c = fb_step(prob.forward, prob.backward, prob.z0, lam, sigma);
      const CertificateCheck chk = evaluate_certificate(c, prob.z0, sigma);
      EXPECT_EQ(chk.residual_sq, 0.0);
      EXPECT_GE(chk.ratio, 1.0 - 1e-12);
      EXPECT_LE(chk.ratio, 1.0 + 1e-12);
      // below the cap the ratio scales linearly with lambda
      const Certificate h = fb_step(prob.forward, prob.backward, prob.z0, 0.5 * lam, sigma);
      EXPECT_NEAR(evaluate_certificate(h, prob.z0, sigma).ratio, 0.5, 1e-12);
    }
  }
}

TEST(FbStep, CocoercivityEnlargementCertificate) {
  for (ProblemKind k : {ProblemKind::l1_composite, ProblemKind::box_constrained_quadratic}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const TestProblem prob = make_problem(k, 5, seed);
      const AffineOperator& F = *prob.forward.affine_part();
      const double lam = lambda_cap(InstanceKind::forward_backward, 0.7, prob.forward.lipschitz());
      const Vector w = 2.0 * prob.z0;
      const Certificate c = fb_step(prob.forward, prob.backward, w, lam, 0.7);
      const Vector fw = prob.forward.evaluate(w);
      EXPECT_TRUE(enlargement_member(F, c.z_tilde, fw, c.eps)) << to_string(k) << " seed " << seed;
      EXPECT_TRUE(decomposed_member(F, prob.backward, c.z_tilde, fw, c.v - fw, c.eps));
    }
  }
}

TEST(FbStep, Errors) {
  const TestProblem bil = make_problem(ProblemKind::bilinear_saddle, 4, 1);
  EXPECT_THROW(fb_step(bil.forward, bil.backward, bil.z0, 1e-3, 0.5), ParameterError);
  const TestProblem l1 = make_problem(ProblemKind::l1_composite, 4, 1);
  const double cap = lambda_cap(InstanceKind::forward_backward, 0.5, l1.forward.lipschitz());
  EXPECT_NO_THROW(fb_step(l1.forward, l1.backward, l1.z0, cap, 0.5));
  try {
    fb_step(l1.forward, l1.backward, l1.z0, cap * 1.01, 0.5);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("2 sigma^2/L"), std::string::npos);
  }
}

TEST(LambdaRule, Values) {
  const LambdaRule c = LambdaRule::cyclic({0.5, 2.0, 1.0});
  EXPECT_EQ(c.at(1, 9.0), 0.5);
  EXPECT_EQ(c.at(2, 9.0), 2.0);
  EXPECT_EQ(c.at(4, 9.0), 0.5);
  EXPECT_EQ(c.floor(9.0), 0.5);
  EXPECT_EQ(c.ceiling(9.0), 2.0);
  EXPECT_EQ(LambdaRule::at_cap().at(3, 0.25), 0.25);
  EXPECT_EQ(LambdaRule::constant(0.1).floor(7.0), 0.1);
  EXPECT_EQ(lambda_cap(InstanceKind::tseng_fbf, 0.5, 2.0), 0.25);
  EXPECT_EQ(lambda_cap(InstanceKind::forward_backward, 0.5, 2.0), 0.25);
  EXPECT_TRUE(std::isinf(lambda_cap(InstanceKind::ppm, 0.5, 2.0)));
}

TEST(PrepareInstance, Validation) {
  const TestProblem aff = make_problem(ProblemKind::affine_inclusion, 4, 1);
  EXPECT_THROW(prepare_instance(aff, {InstanceKind::ppm, LambdaRule::at_cap()}, 0.0), ParameterError);
  EXPECT_THROW(prepare_instance(aff, {InstanceKind::ppm, LambdaRule::cyclic({})}, 0.0), UsageError);
  EXPECT_THROW(prepare_instance(aff, {InstanceKind::forward_backward, LambdaRule::at_cap()}, 0.5),
               ParameterError);  // skew part: not cocoercive
  const TestProblem bil = make_problem(ProblemKind::bilinear_saddle, 4, 1);
  const TestProblem box = make_problem(ProblemKind::box_constrained_quadratic, 4, 1);
  EXPECT_THROW(prepare_instance(box, {InstanceKind::ppm, LambdaRule::constant(1.0)}, 0.0), OracleError);
  const double cap = 0.5 / bil.forward.lipschitz();
  EXPECT_THROW(prepare_instance(bil, {InstanceKind::tseng_fbf, LambdaRule::cyclic({cap, 2 * cap})}, 0.5),
               ParameterError);
  const PreparedInstance ok = prepare_instance(bil, {InstanceKind::tseng_fbf, LambdaRule::cyclic({cap / 2, cap})}, 0.5);
  EXPECT_EQ(ok.lambda_floor, cap / 2);
  EXPECT_EQ(instance_kind_from_string("forward_backward"), InstanceKind::forward_backward);
  EXPECT_THROW(instance_kind_from_string("newton"), UsageError);
}

// alpha = 0, tau = 1 reductions to the classical iterations.

TEST(Reduction, ExactProximalPoint) {
  const TestProblem prob = make_problem(ProblemKind::affine_inclusion, 6, 4);
  const HpeParams p = validate(HpeParams::from_beta(0.0, 0.0, 1.0 / 3.0));
  ASSERT_EQ(p.tau, 1.0);
  const ResolventOracle J = prob.full_resolvent();
  const double lam = 0.3;
  Vector z = prob.z0;
  double worst = 0.0;
  RunOptions o;
  o.observer = [&](const StepView& sv) {
    z = J.evaluate(lam, z);
    worst = std::max(worst, max_abs(sv.z - z));
  };
  run(prob.z0, [&](const Vector& w, long) { return ppm_step(J, w, lam); }, p, harness::cap_only(1000, 0.0), o);
  EXPECT_LE(worst, 1e-12);
}

TEST(Reduction, ClassicalForwardBackward) {
  const TestProblem prob = make_problem(ProblemKind::l1_composite, 8, 6);
  const double sigma = 0.9;
  const HpeParams p = validate(HpeParams::from_tau(0.0, sigma, 1.0));
  const double lam = lambda_cap(InstanceKind::forward_backward, sigma, prob.forward.lipschitz());
  Vector z = prob.z0;
  double worst = 0.0;
  RunOptions o;
  o.observer = [&](const StepView& sv) {
    z = prob.backward.evaluate(lam, z - lam * prob.forward.evaluate(z));
    worst = std::max(worst, max_abs(sv.z - z));
  };
  run(prob.z0, [&](const Vector& w, long) { return fb_step(prob.forward, prob.backward, w, lam, sigma); }, p,
      harness::cap_only(1000, 0.0), o);
  EXPECT_LE(worst, 1e-12);
}

TEST(Reduction, ClassicalTseng) {
  const TestProblem prob = make_problem(ProblemKind::bilinear_saddle, 6, 6);
  const double sigma = 0.7;
  const HpeParams p = validate(HpeParams::from_tau(0.0, sigma, 1.0));
  const double lam = sigma / prob.forward.lipschitz();
  Vector z = prob.z0;
  double worst = 0.0;
  RunOptions o;
  o.observer = [&](const StepView& sv) {
    const Vector fz = prob.forward.evaluate(z);
    const Vector zt = prob.backward.evaluate(lam, z - lam * fz);
    z = zt - lam * (prob.forward.evaluate(zt) - fz);
    worst = std::max(worst, max_abs(sv.z - z));
  };
  run(prob.z0, [&](const Vector& w, long) { return tseng_step(prob.forward, prob.backward, w, lam, sigma); }, p,
      harness::cap_only(1000, 0.0), o);
  EXPECT_LE(worst, 1e-12);
}

TEST(Instances, L1ForwardBackwardConvergesToEnumeratedSolution) {
  const HpeParams p = validate(HpeParams::from_beta(0.2, 0.99, 0.4));
  const auto s = harness::seeded_run(ProblemKind::l1_composite, InstanceKind::forward_backward, 6, 12, p,
                                     LambdaRule::at_cap(), harness::cap_only(200000, 1e-10, 1e-12));
  EXPECT_EQ(s.result.verdict, Verdict::pointwise_solution);
  EXPECT_LE((s.result.state.z_curr - *s.problem.known_solution).norm(), 1e-6);
}
