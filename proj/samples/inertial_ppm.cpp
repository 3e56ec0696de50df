// Inertial relaxed proximal point on a random monotone affine inclusion,
// followed by the rate-bound check.
#include <cstdio>

#include "ihpe/ihpe.hpp"

int main() {
  using namespace ihpe;
  const TestProblem prob = make_problem(ProblemKind::affine_inclusion, 20, 3);
  const HpeParams params = validate(HpeParams::from_beta(0.3, 0.0, 1.0 / 3.0));

  const ResolventOracle J = prob.full_resolvent();
  const double lambda = 1.0;
  InnerSolver inner = [&](const Vector& w, long) { return ppm_step(J, w, lambda); };

  RunOptions opts;
  opts.lambda_floor = lambda;
  opts.z_star = prob.known_solution;
  const RunResult r = run(prob.z0, inner, params, StoppingRule{}, opts);

  const BoundReport b = assert_bounds(r.state.trace, BoundInputs{*prob.known_d0, lambda, params, 1});
  std::printf("verdict %s after %ld steps, ||v|| = %.3e, worst bound use %.3f\n",
              std::string(to_string(r.verdict)).c_str(), r.state.k, r.state.trace.back().norm_v,
              b.worst());
  return 0;
}
