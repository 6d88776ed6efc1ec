#include <doctest.h>

#include <Eigen/Dense>

#include "test_util.hpp"
#include "trajopt/kkt.hpp"
#include "trajopt/models.hpp"
#include "trajopt/random_problem.hpp"

using namespace trajopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Residual of the full saddle-point system for a candidate (dz, lambda).
double kkt_residual(const KKTSystem& kkt, const VectorXd& dz, const VectorXd& lambda) {
  const MatrixXd G = kkt.dense_G();
  const MatrixXd C = kkt.dense_C();
  const VectorXd g = kkt.dense_g();
  const VectorXd c = kkt.constraint_rhs();
  const double stationarity = (G * dz + g + C.transpose() * lambda).lpNorm<Eigen::Infinity>();
  const double primal = (C * dz - c).lpNorm<Eigen::Infinity>();
  const double scale = std::max({1.0, g.lpNorm<Eigen::Infinity>(), c.lpNorm<Eigen::Infinity>()});
  return std::max(stationarity, primal) / scale;
}

}  // namespace

TEST_CASE("assemble_kkt: defects vanish on a feasible fixed-point trajectory") {
  auto model = double_integrator();
  const CostModel cost = quadratic_tracking_cost(
      MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Identity(2, 2),
      VectorXd::Zero(2));
  Trajectory traj;
  traj.h = 0.01;
  traj.X.assign(5, VectorXd::Zero(2));
  traj.U.assign(4, VectorXd::Zero(1));
  const KKTSystem kkt = assemble_kkt(traj, *model, cost, VectorXd::Zero(2));
  for (int k = 0; k < kkt.N; ++k) {
    CHECK(kkt.knots[k].e.lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK(kkt.constraint_rhs().lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("assemble_kkt: pendulum defects match an independent recomputation") {
  auto model = pendulum();
  const CostModel cost = quadratic_tracking_cost(
      MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Identity(2, 2),
      VectorXd::Zero(2));
  UniformRng rng(3);
  Trajectory traj;
  traj.h = 0.05;
  for (int k = 0; k <= 3; ++k) traj.X.push_back(rng.vector(2, -1.0, 1.0));
  for (int k = 0; k < 3; ++k) traj.U.push_back(rng.vector(1, -1.0, 1.0));
  const KKTSystem kkt = assemble_kkt(traj, *model, cost, traj.X[0]);
  for (int k = 0; k < 3; ++k) {
    const VectorXd want = traj.X[k + 1] - model->step(traj.X[k], traj.U[k], traj.h);
    CHECK((kkt.knots[k].e - want).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("assemble_kkt: tracking gradient is x_k minus goal under identity weights") {
  auto model = double_integrator();
  VectorXd goal(2);
  goal << 0.5, -0.25;
  const CostModel cost = quadratic_tracking_cost(
      MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Identity(2, 2), goal);
  UniformRng rng(4);
  Trajectory traj;
  traj.h = 0.01;
  for (int k = 0; k <= 2; ++k) traj.X.push_back(rng.vector(2, -1.0, 1.0));
  for (int k = 0; k < 2; ++k) traj.U.push_back(rng.vector(1, -1.0, 1.0));
  const KKTSystem kkt = assemble_kkt(traj, *model, cost, traj.X[0]);
  for (int k = 0; k <= 2; ++k) {
    CHECK((kkt.knots[k].q - (traj.X[k] - goal)).lpNorm<Eigen::Infinity>() <= 1e-15);
  }
}

TEST_CASE("dense_kkt_solve") {
  SUBCASE("zero data gives the zero solution") {
    KKTSystem kkt = random_kkt(17, 2, 1, 1);
    for (auto& kd : kkt.knots) {
      kd.q.setZero();
      if (kd.r.size() > 0) kd.r.setZero();
      if (kd.e.size() > 0) kd.e.setZero();
    }
    kkt.x_s.setZero();
    const PrimalDual pd = dense_kkt_solve(kkt);
    CHECK(pd.dz.lpNorm<Eigen::Infinity>() <= 1e-14);
    CHECK(pd.lambda.lpNorm<Eigen::Infinity>() <= 1e-14);
  }
  SUBCASE("random instance satisfies both KKT rows") {
    const KKTSystem kkt = random_kkt(21, 2, 1, 1);
    const PrimalDual pd = dense_kkt_solve(kkt);
    CHECK(kkt_residual(kkt, pd.dz, pd.lambda) <= 1e-10);
  }
}

TEST_CASE("reconstruct_primal") {
  SUBCASE("zero multipliers and identity G give dz = -g") {
    KKTSystem kkt = random_kkt(31, 3, 2, 1);
    for (auto& kd : kkt.knots) {
      kd.Q = MatrixXd::Identity(2, 2);
      if (kd.R.size() > 0) kd.R = MatrixXd::Identity(1, 1);
    }
    const VectorXd dz = reconstruct_primal(kkt, VectorXd::Zero(kkt.dual_dim()));
    CHECK((dz + kkt.dense_g()).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
  SUBCASE("matches the dense oracle's primal") {
    const KKTSystem kkt = random_kkt(32, 4, 3, 2);
    const PrimalDual pd = dense_kkt_solve(kkt);
    const VectorXd dz = reconstruct_primal(kkt, pd.lambda);
    CHECK((dz - pd.dz).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
  SUBCASE("degenerate single-knot horizon") {
    KKTSystem kkt;
    kkt.N = 0;
    kkt.n = 3;
    kkt.m = 0;
    kkt.knots.resize(1);
    kkt.knots[0].Q = MatrixXd::Identity(3, 3);
    kkt.knots[0].q = VectorXd::Ones(3);
    kkt.x_s = VectorXd::Zero(3);
    kkt.x0 = VectorXd::Zero(3);
    const VectorXd dz = reconstruct_primal(kkt, VectorXd::Zero(3));
    CHECK((dz + VectorXd::Ones(3)).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("exact dual solve closes both KKT rows") {
  for (const auto& spec : test::standard_batch(10)) {
    const KKTSystem kkt = random_kkt(spec.seed, spec.N, spec.n, spec.m);
    const MatrixXd S = test::dense_schur_matrix(kkt);
    const VectorXd gamma = test::dense_schur_rhs(kkt);
    const VectorXd lambda = S.ldlt().solve(gamma);
    const VectorXd dz = reconstruct_primal(kkt, lambda);
    CHECK(kkt_residual(kkt, dz, lambda) <= 1e-8);
    // Constraint row on its own.
    CHECK((kkt.dense_C() * dz - kkt.constraint_rhs()).lpNorm<Eigen::Infinity>() <= 1e-8);
  }
}

TEST_CASE("assemble_kkt flags non-finite states with the knot index") {
  auto model = double_integrator();
  const CostModel cost = quadratic_tracking_cost(
      MatrixXd::Identity(2, 2), MatrixXd::Identity(1, 1), MatrixXd::Identity(2, 2),
      VectorXd::Zero(2));
  Trajectory traj;
  traj.h = 0.01;
  traj.X.assign(3, VectorXd::Zero(2));
  traj.U.assign(2, VectorXd::Zero(1));
  traj.X[1][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(assemble_kkt(traj, *model, cost, VectorXd::Zero(2)),
                       doctest::Contains("knot"), std::runtime_error);
}
