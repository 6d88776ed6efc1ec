#include "trajopt/schur.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "trajopt/parallel.hpp"

namespace trajopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd spd_inverse(const MatrixXd& W, int knot, const char* what) {
  Eigen::LLT<MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(std::string("build_schur: ") + what + " at knot " +
                             std::to_string(knot) + " is not positive definite");
  }
  MatrixXd inv = llt.solve(MatrixXd::Identity(W.rows(), W.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

std::string precond_name(PrecondKind kind, int order) {
  switch (kind) {
    case PrecondKind::identity: return "identity";
    case PrecondKind::block_jacobi: return "jacobi";
    case PrecondKind::stair: return "stair";
    case PrecondKind::symmetric_stair: return "symstair";
    case PrecondKind::poly_split: return "poly:" + std::to_string(order);
  }
  return "unknown";
}

SchurSystem build_schur(const KKTSystem& kkt) {
  const int N = kkt.N;
  const int n = kkt.n;
  const VectorXd c = kkt.constraint_rhs();

  SchurSystem out;
  out.n = n;
  out.S = BlockTriMatrix(N + 1, n);
  out.gamma.resize((N + 1) * n);
  out.theta_inv.resize(N + 1);

  // Each block-row recomputes the cross-knot inverses it needs (Q_k^{-1} and
  // Q_{k+1}^{-1}) instead of sharing them, so rows stay independent. Only the
  // finished theta_inv values are shared, after the join below.
  parallel_for(0, N + 1, [&](int b) {
    if (b == 0) {
      const MatrixXd q0_inv = spd_inverse(kkt.knots[0].Q, 0, "Q");
      out.S.set_diag(0, q0_inv);
      out.theta_inv[0] = 0.5 * (kkt.knots[0].Q + kkt.knots[0].Q.transpose());
      out.gamma.head(n) = -(c.head(n) + q0_inv * kkt.knots[0].q);
    } else {
      const int k = b - 1;
      const KnotData& kd = kkt.knots[k];
      const MatrixXd qk_inv = spd_inverse(kd.Q, k, "Q");
      const MatrixXd rk_inv = spd_inverse(kd.R, k, "R");
      const MatrixXd qk1_inv = spd_inverse(kkt.knots[k + 1].Q, k + 1, "Q");

      const MatrixXd theta_raw =
          kd.A * qk_inv * kd.A.transpose() + kd.B * rk_inv * kd.B.transpose() + qk1_inv;
      const MatrixXd theta = 0.5 * (theta_raw + theta_raw.transpose());
      const MatrixXd phi = -kd.A * qk_inv;
      const VectorXd zeta =
          -kd.A * (qk_inv * kd.q) - kd.B * (rk_inv * kd.r) + qk1_inv * kkt.knots[k + 1].q;

      out.S.set_diag(b, theta);
      out.S.set_left(b, phi);
      out.S.set_right(b - 1, phi.transpose());
      out.theta_inv[b] = spd_inverse(theta, k, "theta");
      out.gamma.segment(static_cast<Eigen::Index>(b) * n, n) =
          -(c.segment(static_cast<Eigen::Index>(b) * n, n) + zeta);
    }
  });
  out.S.structurally_symmetric = true;
  return out;
}

BlockTriMatrix stair_matrix(const BlockTriMatrix& S) {
  BlockTriMatrix psi(S.block_rows(), S.block_dim());
  for (int row = 0; row < S.block_rows(); ++row) {
    psi.set_diag(row, S.diag(row));
    if (row % 2 == 1) {
      psi.set_left(row, S.left(row));
      if (row + 1 < S.block_rows()) psi.set_right(row, S.right(row));
    }
  }
  return psi;
}

Preconditioner build_identity() { return Preconditioner{}; }

Preconditioner build_block_jacobi(const SchurSystem& schur) {
  Preconditioner P;
  P.kind = PrecondKind::block_jacobi;
  P.phi_inv = BlockTriMatrix(schur.S.block_rows(), schur.n);
  for (int row = 0; row < schur.S.block_rows(); ++row) {
    P.phi_inv.set_diag(row, schur.theta_inv[row]);
  }
  P.phi_inv.structurally_symmetric = true;
  return P;
}

Preconditioner build_stair(const SchurSystem& schur) {
  Preconditioner P;
  P.kind = PrecondKind::stair;
  const int rows = schur.S.block_rows();
  P.phi_inv = BlockTriMatrix(rows, schur.n);
  // Analytic stair inverse: diagonal blocks D_i^{-1}; odd rows additionally
  // carry -D_i^{-1} L_i D_{i-1}^{-1} and -D_i^{-1} R_i D_{i+1}^{-1}.
  parallel_for(0, rows, [&](int row) {
    P.phi_inv.set_diag(row, schur.theta_inv[row]);
    if (row % 2 == 1) {
      P.phi_inv.set_left(row, -schur.theta_inv[row] * schur.S.left(row) * schur.theta_inv[row - 1]);
      if (row + 1 < rows) {
        P.phi_inv.set_right(row,
                            -schur.theta_inv[row] * schur.S.right(row) * schur.theta_inv[row + 1]);
      }
    }
  });
  return P;
}

Preconditioner build_symmetric_stair(const SchurSystem& schur) {
  Preconditioner P = build_stair(schur);
  P.kind = PrecondKind::symmetric_stair;
  const int rows = P.phi_inv.block_rows();
  // Mirror each odd row's off-diagonal blocks across the diagonal.
  for (int row = 1; row < rows; row += 2) {
    P.phi_inv.set_right(row - 1, P.phi_inv.left(row).transpose());
    if (row + 1 < rows) {
      P.phi_inv.set_left(row + 1, P.phi_inv.right(row).transpose());
    }
  }
  P.phi_inv.structurally_symmetric = true;
  return P;
}

Preconditioner build_poly_split(const SchurSystem& schur, int order) {
  if (order < 1) {
    throw std::invalid_argument("build_poly_split: order must be >= 1, got " +
                                std::to_string(order));
  }
  Preconditioner P = build_stair(schur);
  P.kind = PrecondKind::poly_split;
  P.order = order;
  P.stair_psi = stair_matrix(schur.S);

  // E = Psi - S: odd rows vanish, even rows keep the negated off-diagonals.
  const int rows = schur.S.block_rows();
  P.remainder = BlockTriMatrix(rows, schur.n);
  for (int row = 0; row < rows; row += 2) {
    if (row > 0) P.remainder.set_left(row, -schur.S.left(row));
    if (row + 1 < rows) P.remainder.set_right(row, -schur.S.right(row));
  }
  return P;
}

Preconditioner build_preconditioner(const SchurSystem& schur, PrecondKind kind, int order) {
  switch (kind) {
    case PrecondKind::identity: return build_identity();
    case PrecondKind::block_jacobi: return build_block_jacobi(schur);
    case PrecondKind::stair: return build_stair(schur);
    case PrecondKind::symmetric_stair: return build_symmetric_stair(schur);
    case PrecondKind::poly_split: return build_poly_split(schur, order);
  }
  throw std::invalid_argument("build_preconditioner: unknown kind");
}

VectorXd apply_preconditioner(const Preconditioner& P, const Eigen::Ref<const VectorXd>& r) {
  if (P.kind == PrecondKind::identity) {
    return r;
  }
  if (r.size() != P.phi_inv.dim()) {
    throw std::invalid_argument("apply_preconditioner: expected vector of length " +
                                std::to_string(P.phi_inv.dim()) + ", got " +
                                std::to_string(r.size()));
  }
  if (P.kind != PrecondKind::poly_split) {
    return P.phi_inv.matvec(r);
  }
  VectorXd term = P.phi_inv.matvec(r);
  VectorXd acc = term;
  for (int j = 0; j < P.order; ++j) {
    term = P.phi_inv.matvec(P.remainder.matvec(term));
    acc += term;
  }
  return acc;
}

}  // namespace trajopt
