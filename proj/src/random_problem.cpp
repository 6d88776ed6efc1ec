#include "trajopt/random_problem.hpp"

namespace trajopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

KKTSystem generate(std::uint64_t seed, int N, int n, int m, double diag_floor, double coupling) {
  UniformRng rng(seed);
  KKTSystem kkt;
  kkt.N = N;
  kkt.n = n;
  kkt.m = m;
  kkt.knots.resize(N + 1);

  for (int k = 0; k < N; ++k) {
    KnotData& kd = kkt.knots[k];
    const MatrixXd L = rng.matrix(n, n, -1.0, 1.0);
    kd.Q = L * L.transpose() + diag_floor * MatrixXd::Identity(n, n);
    const MatrixXd Lr = rng.matrix(m, m, -1.0, 1.0);
    kd.R = Lr * Lr.transpose() + diag_floor * MatrixXd::Identity(m, m);
    kd.A = rng.matrix(n, n, -1.0, 1.0) * (coupling / n);
    kd.B = rng.matrix(n, m, -1.0, 1.0) * (coupling / n);
    kd.q = rng.vector(n, -1.0, 1.0);
    kd.r = rng.vector(m, -1.0, 1.0);
    kd.e = rng.vector(n, -1.0, 1.0);
  }
  KnotData& last = kkt.knots[N];
  const MatrixXd Ln = rng.matrix(n, n, -1.0, 1.0);
  last.Q = Ln * Ln.transpose() + diag_floor * MatrixXd::Identity(n, n);
  last.q = rng.vector(n, -1.0, 1.0);

  kkt.x_s = rng.vector(n, -1.0, 1.0);
  kkt.x0 = VectorXd::Zero(n);
  return kkt;
}

}  // namespace

KKTSystem random_kkt(std::uint64_t seed, int N, int n, int m) {
  return generate(seed, N, n, m, 0.1, 1.0);
}

KKTSystem random_kkt_scaled(std::uint64_t seed, int N, int n, int m, double diag_floor,
                            double coupling) {
  return generate(seed, N, n, m, diag_floor, coupling);
}

KKTSystem random_trajectory_kkt(std::uint64_t seed, int N, int n, int m) {
  constexpr double kCostScale = 2e-4;
  UniformRng rng(seed);
  KKTSystem kkt;
  kkt.N = N;
  kkt.n = n;
  kkt.m = m;
  kkt.knots.resize(N + 1);

  const MatrixXd In = MatrixXd::Identity(n, n);
  for (int k = 0; k < N; ++k) {
    KnotData& kd = kkt.knots[k];
    const MatrixXd L = rng.matrix(n, n, -1.0, 1.0);
    kd.Q = kCostScale * (0.3 * L * L.transpose() + In);
    const MatrixXd Lr = rng.matrix(m, m, -1.0, 1.0);
    kd.R = kCostScale * (0.3 * Lr * Lr.transpose() + MatrixXd::Identity(m, m));
    kd.A = 0.1 * In + rng.matrix(n, n, -1.0, 1.0) * (0.02 / n);
    kd.B = rng.matrix(n, m, -1.0, 1.0) * (1.0 / n);
    kd.q = rng.vector(n, -1.0, 1.0);
    kd.r = rng.vector(m, -1.0, 1.0);
    kd.e = rng.vector(n, -1.0, 1.0);
  }
  const MatrixXd Ln = rng.matrix(n, n, -1.0, 1.0);
  kkt.knots[N].Q = kCostScale * (0.3 * Ln * Ln.transpose() + In);
  kkt.knots[N].q = rng.vector(n, -1.0, 1.0);

  kkt.x_s = rng.vector(n, -1.0, 1.0);
  kkt.x0 = VectorXd::Zero(n);
  return kkt;
}

}  // namespace trajopt
