#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>

#include "trajopt/kkt.hpp"

namespace trajopt {

/// Seeded uniform draws with a fixed mt19937_64 -> [0,1) mapping, so generated
/// instances are identical across platforms and standard-library versions.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    const double u01 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u01;
  }

  Eigen::MatrixXd matrix(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) M(i, j) = uniform(lo, hi);
    return M;
  }

  Eigen::VectorXd vector(int size, double lo, double hi) {
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

/// Random SPD trajectory-QP instance:
///   Q = L L' + 0.1 I and R likewise, L entries uniform in [-1, 1];
///   A, B entries uniform in [-1, 1] scaled by 1/n;
///   q, r, e, x_s entries uniform in [-1, 1]; x0 = 0.
/// Draw order per knot k = 0..N-1: L, L_R, A, B, q, r, e; then the terminal
/// L_N and q_N; then x_s.
KKTSystem random_kkt(std::uint64_t seed, int N, int n, int m);

/// Same distribution with an SPD floor of `diag_floor` instead of 0.1 and
/// off-diagonal factors scaled by `coupling`; used to reach prescribed
/// conditioning in tests.
KKTSystem random_kkt_scaled(std::uint64_t seed, int N, int n, int m, double diag_floor,
                            double coupling);

/// Trajectory-like QP instance: strongly contractive dynamics Jacobians
///   A = 0.1 I + (0.02/n) U[-1,1],  B = (1/n) U[-1,1],
/// weak well-conditioned costs
///   Q = s (0.3 L L' + I),  R = s (0.3 L_R L_R' + I),  s = 2e-4,
/// gradients q, r and defects e, x_s uniform in [-1, 1]; x0 = 0.
/// The contraction bounds the Schur complement's condition number uniformly
/// in N and keeps its smallest eigenvalue large (> 500 across the standard
/// batch), so dual errors stay small at absolute PCG exit tolerances and the
/// structurally nonsymmetric plain-stair preconditioner remains CG-stable.
KKTSystem random_trajectory_kkt(std::uint64_t seed, int N, int n, int m);

}  // namespace trajopt
