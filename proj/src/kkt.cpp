#include "trajopt/kkt.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <stdexcept>
#include <string>

#include "trajopt/parallel.hpp"

namespace trajopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kEigFloor = 1e-8;
constexpr double kRidge = 1e-6;

void regularize_spd(MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < kEigFloor) {
    W += kRidge * MatrixXd::Identity(W.rows(), W.cols());
  }
}

bool all_finite(const MatrixXd& M) { return M.allFinite(); }
bool all_finite(const VectorXd& v) { return v.allFinite(); }

}  // namespace

VectorXd KKTSystem::constraint_rhs() const {
  VectorXd c(dual_dim());
  c.head(n) = x_s - x0;
  for (int k = 0; k < N; ++k) {
    c.segment(static_cast<Eigen::Index>(k + 1) * n, n) = -knots[k].e;
  }
  return c;
}

MatrixXd KKTSystem::dense_G() const {
  MatrixXd G = MatrixXd::Zero(primal_dim(), primal_dim());
  int off = 0;
  for (int k = 0; k <= N; ++k) {
    G.block(off, off, n, n) = knots[k].Q;
    off += n;
    if (k < N) {
      G.block(off, off, m, m) = knots[k].R;
      off += m;
    }
  }
  return G;
}

VectorXd KKTSystem::dense_g() const {
  VectorXd g(primal_dim());
  int off = 0;
  for (int k = 0; k <= N; ++k) {
    g.segment(off, n) = knots[k].q;
    off += n;
    if (k < N) {
      g.segment(off, m) = knots[k].r;
      off += m;
    }
  }
  return g;
}

MatrixXd KKTSystem::dense_C() const {
  MatrixXd C = MatrixXd::Zero(dual_dim(), primal_dim());
  C.block(0, 0, n, n) = MatrixXd::Identity(n, n);
  const int stride = n + m;
  for (int k = 0; k < N; ++k) {
    const int row = (k + 1) * n;
    const int col = k * stride;
    C.block(row, col, n, n) = -knots[k].A;
    C.block(row, col + n, n, m) = -knots[k].B;
    C.block(row, col + stride, n, n) = MatrixXd::Identity(n, n);
  }
  return C;
}

KKTSystem assemble_kkt(const Trajectory& traj, const DynamicsModel& model,
                       const CostModel& cost, const VectorXd& x_s) {
  const int N = traj.horizon();
  const int n = model.state_dim();
  const int m = model.control_dim();
  if (static_cast<int>(traj.X.size()) != N + 1) {
    throw std::invalid_argument("assemble_kkt: trajectory needs N+1 states, got " +
                                std::to_string(traj.X.size()) + " for N = " + std::to_string(N));
  }

  KKTSystem kkt;
  kkt.N = N;
  kkt.n = n;
  kkt.m = m;
  kkt.x_s = x_s;
  kkt.x0 = traj.X[0];
  kkt.knots.resize(N + 1);

  // Each knot is independent; defects read the neighbor state but write only
  // their own entry.
  parallel_for(0, N + 1, [&](int k) {
    KnotData& kd = kkt.knots[k];
    const bool terminal = (k == N);
    kd.Q = terminal ? cost.WN : cost.Wx;
    kd.q = kd.Q * (traj.X[k] - cost.goal(k));
    regularize_spd(kd.Q);
    if (!terminal) {
      kd.R = cost.Wu;
      kd.r = kd.R * traj.U[k];
      regularize_spd(kd.R);
      model.jacobians(traj.X[k], traj.U[k], traj.h, kd.A, kd.B);
      kd.e = traj.X[k + 1] - model.step(traj.X[k], traj.U[k], traj.h);
      if (!all_finite(kd.A) || !all_finite(kd.B) || !all_finite(kd.e) ||
          !all_finite(kd.R) || !all_finite(kd.r)) {
        throw std::runtime_error("assemble_kkt: non-finite linearization at knot " +
                                 std::to_string(k));
      }
    }
    if (!all_finite(kd.Q) || !all_finite(kd.q)) {
      throw std::runtime_error("assemble_kkt: non-finite cost expansion at knot " +
                               std::to_string(k));
    }
  });
  return kkt;
}

PrimalDual dense_kkt_solve(const KKTSystem& kkt) {
  const int np = kkt.primal_dim();
  const int nd = kkt.dual_dim();
  MatrixXd K = MatrixXd::Zero(np + nd, np + nd);
  K.topLeftCorner(np, np) = kkt.dense_G();
  const MatrixXd C = kkt.dense_C();
  K.topRightCorner(np, nd) = C.transpose();
  K.bottomLeftCorner(nd, np) = C;

  VectorXd rhs(np + nd);
  rhs.head(np) = -kkt.dense_g();
  rhs.tail(nd) = kkt.constraint_rhs();

  Eigen::FullPivLU<MatrixXd> lu(K);
  if (!lu.isInvertible()) {
    throw std::runtime_error("dense_kkt_solve: singular KKT matrix");
  }
  const VectorXd sol = lu.solve(rhs);
  PrimalDual out;
  out.dz = sol.head(np);
  out.lambda = sol.tail(nd);
  return out;
}

VectorXd reconstruct_primal(const KKTSystem& kkt, const VectorXd& lambda) {
  if (lambda.size() != kkt.dual_dim()) {
    throw std::invalid_argument("reconstruct_primal: expected lambda of length " +
                                std::to_string(kkt.dual_dim()) + ", got " +
                                std::to_string(lambda.size()));
  }
  const int N = kkt.N;
  const int n = kkt.n;
  const int m = kkt.m;
  VectorXd dz(kkt.primal_dim());
  const int stride = n + m;

  parallel_for(0, N + 1, [&](int k) {
    if (k < N) {
      const KnotData& kd = kkt.knots[k];
      const auto lam_k = lambda.segment(static_cast<Eigen::Index>(k) * n, n);
      const auto lam_k1 = lambda.segment(static_cast<Eigen::Index>(k + 1) * n, n);
      dz.segment(static_cast<Eigen::Index>(k) * stride, n) =
          kd.Q.ldlt().solve(-(kd.q + lam_k - kd.A.transpose() * lam_k1));
      dz.segment(static_cast<Eigen::Index>(k) * stride + n, m) =
          kd.R.ldlt().solve(-(kd.r - kd.B.transpose() * lam_k1));
    } else {
      const KnotData& kd = kkt.knots[N];
      const auto lam_N = lambda.segment(static_cast<Eigen::Index>(N) * n, n);
      dz.segment(static_cast<Eigen::Index>(N) * stride, n) = kd.Q.ldlt().solve(-(kd.q + lam_N));
    }
  });
  return dz;
}

}  // namespace trajopt
