// Plugging a hand-written inexact inner solver into the driver. The inner
// solver runs a few damped fixed-point sweeps on (lambda T + I) z = w and
// returns the pair (z, T z); the driver checks the relative-error criterion.
#include <cstdio>

#include "ihpe/ihpe.hpp"

int main() {
  using namespace ihpe;
  const TestProblem prob = make_problem(ProblemKind::affine_inclusion, 10, 11);
  const AffineOperator& T = *prob.affine_T;
  const double sigma = 0.5;
  const HpeParams params = validate(HpeParams::from_beta(0.2, sigma, 1.0 / 3.0));
  const double lambda = 0.5;

  InnerSolver inner = [&](const Vector& w, long) {
    // Start from the exact resolvent and perturb it slightly; a real inner
    // method would iterate until the criterion holds.
    Vector z = ppm_step(prob.full_resolvent(), w, lambda).z_tilde;
    z += 1e-3 * (w - z);
    return Certificate{z, T.apply(z), 0.0, lambda};
  };

  RunOptions opts;
  opts.lambda_floor = lambda;
  opts.z_star = prob.known_solution;
  try {
    const RunResult r = run(prob.z0, inner, params, StoppingRule{}, opts);
    double worst = 0.0;
    for (const auto& rec : r.state.trace) worst = std::max(worst, rec.error_ratio);
    std::printf("verdict %s after %ld steps, largest error ratio %.3e\n",
                std::string(to_string(r.verdict)).c_str(), r.state.k, worst);
  } catch (const CertificationError& e) {
    std::printf("inner solver too crude at k = %ld: %s\n", e.iteration(), e.what());
    return 1;
  }
  return 0;
}
