#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trajopt/models.hpp"
#include "trajopt/trajectory.hpp"

namespace trajopt {

/// Per-knot cost quadratic plus dynamics linearization. R, r, A, B, e are
/// present at knots 0..N-1 only; the terminal knot carries Q, q alone.
struct KnotData {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  Eigen::MatrixXd R;
  Eigen::VectorXd r;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd e;  // defect x_{k+1} - f(x_k, u_k)
};

/// Equality-constrained QP data in per-knot form. Implicitly
///   G = blockdiag(Q_0, R_0, ..., Q_N),  g = [q_0 r_0 ... q_N],
///   C row blocks [I] and [-A_k -B_k I],
/// under the convention C dz = c with
///   c_0 = x_s - x_0 and c_{k+1} = -e_k,
/// so that a full step restores the linearized constraints exactly.
struct KKTSystem {
  int N = 0;  // horizon: N+1 state knots, N control knots
  int n = 0;
  int m = 0;
  std::vector<KnotData> knots;  // N+1
  Eigen::VectorXd x_s;          // measured initial state
  Eigen::VectorXd x0;           // first state of the linearization trajectory

  int primal_dim() const { return (N + 1) * n + N * m; }
  int dual_dim() const { return (N + 1) * n; }

  Eigen::VectorXd constraint_rhs() const;

  // Dense realizations (oracle bridges; small instances only).
  Eigen::MatrixXd dense_G() const;
  Eigen::VectorXd dense_g() const;
  Eigen::MatrixXd dense_C() const;
};

/// Primal update dz = [dx_0 du_0 ... dx_N] and multipliers lambda.
struct PrimalDual {
  Eigen::VectorXd dz;
  Eigen::VectorXd lambda;
};

/// Linearizes dynamics and cost around traj. Q/R blocks with minimum
/// eigenvalue below 1e-8 get ridge regularization rho*I, rho = 1e-6.
KKTSystem assemble_kkt(const Trajectory& traj, const DynamicsModel& model,
                       const CostModel& cost, const Eigen::VectorXd& x_s);

/// Direct dense solve of [G C'; C 0][dz; lambda] = [-g; c].
/// Test/benchmark oracle; not part of the fast path.
PrimalDual dense_kkt_solve(const KKTSystem& kkt);

/// Blockwise primal recovery dz = -G^{-1}(g + C' lambda):
///   dx_k = -Q_k^{-1}(q_k + lambda_k - A_k' lambda_{k+1})
///   du_k = -R_k^{-1}(r_k - B_k' lambda_{k+1})
///   dx_N = -Q_N^{-1}(q_N + lambda_N)
Eigen::VectorXd reconstruct_primal(const KKTSystem& kkt, const Eigen::VectorXd& lambda);

}  // namespace trajopt
