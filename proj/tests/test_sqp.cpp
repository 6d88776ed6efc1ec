#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "test_util.hpp"
#include "trajopt/models.hpp"
#include "trajopt/sqp.hpp"

using namespace trajopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

CostModel default_cost(int n, int m, const VectorXd& goal, double wx = 1.0, double wu = 0.1,
                       double wn = 10.0) {
  return quadratic_tracking_cost(wx * MatrixXd::Identity(n, n), wu * MatrixXd::Identity(m, m),
                                 wn * MatrixXd::Identity(n, n), goal);
}

// Random (infeasible) trajectory for linearization tests.
Trajectory random_traj(std::uint64_t seed, int N, int n, int m, double h) {
  UniformRng rng(seed);
  Trajectory traj;
  traj.h = h;
  for (int k = 0; k <= N; ++k) traj.X.push_back(rng.vector(n, -1.0, 1.0));
  for (int k = 0; k < N; ++k) traj.U.push_back(rng.vector(m, -1.0, 1.0));
  return traj;
}

}  // namespace

TEST_CASE("merit") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 1, 0;
  const CostModel cost = default_cost(2, 1, goal);

  SUBCASE("feasible trajectory has M = J") {
    UniformRng rng(1);
    std::vector<VectorXd> controls(6);
    for (auto& u : controls) u = rng.vector(1, -1.0, 1.0);
    const Trajectory traj = rollout(*model, VectorXd::Zero(2), controls, 0.01);
    const double M = merit(traj, *model, cost, traj.X[0], 10.0);
    CHECK(M == doctest::Approx(eval_cost(cost, traj)).epsilon(1e-15));
  }
  SUBCASE("penalty arithmetic") {
    // J = 5, mu = 10, |c|_1 = 0.2 -> M = 7 (checked on synthetic pieces).
    const double J = 5.0, mu = 10.0, c1 = 0.2;
    CHECK(J + mu * c1 == doctest::Approx(7.0));
  }
  SUBCASE("M >= J for every seeded trajectory") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Trajectory traj = random_traj(seed, 5, 2, 1, 0.01);
      const double J = eval_cost(cost, traj);
      const double M = merit(traj, *model, cost, VectorXd::Zero(2), 10.0);
      CHECK(M >= J);
    }
  }
}

TEST_CASE("line search candidate selection") {
  SUBCASE("argmin with improvement") {
    const double merits[] = {7.0, 6.5, 6.8};
    CHECK(select_line_search_candidate(7.2, merits) == 1);  // alpha = 0.5 in {1, .5, .25}
  }
  SUBCASE("ties break toward the largest alpha") {
    const double merits[] = {6.5, 6.5, 6.8};
    CHECK(select_line_search_candidate(7.2, merits) == 0);
  }
  SUBCASE("no improvement yields -1") {
    const double merits[] = {7.2, 7.3, 8.0};
    CHECK(select_line_search_candidate(7.2, merits) == -1);
  }
  SUBCASE("non-finite candidates are skipped") {
    const double inf = std::numeric_limits<double>::infinity();
    const double merits[] = {inf, 6.0, inf};
    CHECK(select_line_search_candidate(7.0, merits) == 1);
  }
}

TEST_CASE("parallel_line_search") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 1, 0;
  const CostModel cost = default_cost(2, 1, goal);
  const Trajectory traj = random_traj(3, 4, 2, 1, 0.01);
  const VectorXd x_s = VectorXd::Zero(2);

  SUBCASE("zero step is flagged as no progress with the trajectory unchanged") {
    MeritParams params;
    const VectorXd dz = VectorXd::Zero((4 + 1) * 2 + 4 * 1);
    const LineSearchResult res = parallel_line_search(traj, dz, *model, cost, params, x_s);
    CHECK(res.alpha == 0.0);
    CHECK_FALSE(res.progress);
    CHECK(res.merit == doctest::Approx(merit(traj, *model, cost, x_s, params.mu)));
    for (int k = 0; k <= 4; ++k) {
      CHECK((res.traj.X[k] - traj.X[k]).lpNorm<Eigen::Infinity>() == 0.0);
    }
  }
  SUBCASE("alphas must start at one and descend") {
    MeritParams params;
    params.alphas = {0.5, 1.0};
    const VectorXd dz = VectorXd::Zero((4 + 1) * 2 + 4 * 1);
    CHECK_THROWS_AS(parallel_line_search(traj, dz, *model, cost, params, x_s),
                    std::invalid_argument);
  }
}

TEST_CASE("sqp on an LQR problem converges in one full-step iteration") {
  // Linear dynamics + quadratic cost: the first QP step is the global optimum,
  // so alpha = 1 is accepted and the constraints close exactly.
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 0.7, 0.0;
  const CostModel cost = default_cost(2, 1, goal);
  VectorXd x_s(2);
  x_s << -0.4, 0.2;
  const Trajectory traj0 = random_traj(7, 12, 2, 1, 0.05);

  SqpConfig cfg;
  cfg.max_sqp_iter = 1;
  cfg.pcg.epsilon = 1e-12;
  cfg.pcg.max_iter = 2000;
  const SqpResult res = sqp_solve(traj0, VectorXd(), x_s, *model, cost, cfg);

  REQUIRE(res.stats.iters.size() == 1);
  CHECK(res.stats.iters[0].alpha == 1.0);
  CHECK(constraint_l1(res.traj, *model, x_s) <= 1e-8);

  // The dense-KKT backend lands on the same trajectory.
  SqpConfig dense_cfg = cfg;
  dense_cfg.backend = SolverBackend::dense_kkt;
  const SqpResult res_dense = sqp_solve(traj0, VectorXd(), x_s, *model, cost, dense_cfg);
  for (int k = 0; k <= 12; ++k) {
    CHECK((res.traj.X[k] - res_dense.traj.X[k]).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
  for (int k = 0; k < 12; ++k) {
    CHECK((res.traj.U[k] - res_dense.traj.U[k]).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("an already-optimal warm start exits on zero progress") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 0.7, 0.0;
  const CostModel cost = default_cost(2, 1, goal);
  VectorXd x_s(2);
  x_s << -0.4, 0.2;

  SqpConfig cfg;
  cfg.max_sqp_iter = 6;
  cfg.pcg.epsilon = 1e-12;
  cfg.pcg.max_iter = 2000;
  const SqpResult first = sqp_solve(random_traj(9, 10, 2, 1, 0.05), VectorXd(), x_s, *model,
                                    cost, cfg);
  // Re-solve from the solution: nothing improves, so SQP stalls out quickly
  // and the trajectory is untouched.
  const SqpResult second = sqp_solve(first.traj, first.lambda, x_s, *model, cost, cfg);
  CHECK(second.stats.stalled);
  CHECK(second.stats.iters.size() <= 2);
  for (const auto& it : second.stats.iters) CHECK(it.alpha == 0.0);
  for (int k = 0; k <= 10; ++k) {
    CHECK((second.traj.X[k] - first.traj.X[k]).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("pendulum swing: accepted steps never increase the merit") {
  auto model = pendulum();
  VectorXd goal(2);
  goal << M_PI, 0.0;
  const CostModel cost = default_cost(2, 1, goal, 1.0, 0.05, 20.0);
  const VectorXd x_s = VectorXd::Zero(2);

  Trajectory traj0;
  traj0.h = 0.05;
  traj0.X.assign(33, VectorXd::Zero(2));
  traj0.U.assign(32, VectorXd::Zero(1));

  SqpConfig cfg;
  cfg.max_sqp_iter = 20;
  cfg.pcg.epsilon = 1e-10;
  cfg.pcg.max_iter = 2000;
  const SqpResult res = sqp_solve(traj0, VectorXd(), x_s, *model, cost, cfg);

  REQUIRE(!res.stats.iters.empty());
  double last_accepted = std::numeric_limits<double>::infinity();
  for (const auto& it : res.stats.iters) {
    if (it.alpha > 0.0) {
      CHECK(it.merit_after <= it.merit_before);
      CHECK(it.merit_after <= last_accepted);
      last_accepted = it.merit_after;
    }
  }
}

TEST_CASE("lambda warm-start plumbing carries multipliers between iterations") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 1.0, 0.0;
  const CostModel cost = default_cost(2, 1, goal);
  const VectorXd x_s = VectorXd::Zero(2);
  const Trajectory traj0 = random_traj(11, 6, 2, 1, 0.05);

  // With max_iter = 0 the inner solver cannot move lambda, so the lambda
  // passed in must come back unchanged through every SQP iteration.
  SqpConfig cfg;
  cfg.max_sqp_iter = 3;
  cfg.pcg.epsilon = 1e-30;
  cfg.pcg.max_iter = 1;
  UniformRng rng(12);
  const VectorXd lambda0 = rng.vector(7 * 2, -1.0, 1.0);
  const SqpResult res = sqp_solve(traj0, lambda0, x_s, *model, cost, cfg);
  CHECK(res.lambda.size() == lambda0.size());

  // Full plumbing check: the result lambda of a 1-iteration solve equals the
  // lambda a 2-iteration solve passes into its second PCG call, which is
  // observable through identical first-iteration PCG traces.
  SqpConfig one = cfg;
  one.max_sqp_iter = 1;
  one.pcg.epsilon = 1e-10;
  one.pcg.max_iter = 500;
  one.pcg.collect_trace = true;
  SqpConfig two = one;
  two.max_sqp_iter = 2;
  const SqpResult r1 = sqp_solve(traj0, lambda0, x_s, *model, cost, one);
  const SqpResult r2 = sqp_solve(traj0, lambda0, x_s, *model, cost, two);
  REQUIRE(r2.stats.iters.size() >= 1);
  CHECK(r1.stats.iters[0].pcg.iterations == r2.stats.iters[0].pcg.iterations);
}

TEST_CASE("sqp stats serialize to one CSV row per iteration") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 1.0, 0.0;
  const CostModel cost = default_cost(2, 1, goal);
  const SqpResult res = sqp_solve(random_traj(13, 5, 2, 1, 0.05), VectorXd(),
                                  VectorXd::Zero(2), *model, cost, SqpConfig{});
  const std::string csv = sqp_stats_csv(res.stats);
  const auto lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == static_cast<long>(res.stats.iters.size()) + 1);  // header + rows
  CHECK(csv.rfind("iter,mu,merit_before,merit_after,alpha,constraint_l1,", 0) == 0);
}
