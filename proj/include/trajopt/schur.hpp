#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "trajopt/block_tri.hpp"
#include "trajopt/kkt.hpp"

namespace trajopt {

/// Schur complement system S lambda = gamma with
///   S = C G^{-1} C' (block-tridiagonal, SPD)
/// assembled blockwise:
///   diag blocks  [Q_0^{-1}, theta_0, ..., theta_{N-1}]
///   sub-diagonal [phi_0, ..., phi_{N-1}] (super-diagonal their transposes)
///   theta_k = A_k Q_k^{-1} A_k' + B_k R_k^{-1} B_k' + Q_{k+1}^{-1}
///   phi_k   = -A_k Q_k^{-1}
struct SchurSystem {
  BlockTriMatrix S;                      // N+1 block rows, block dim n
  Eigen::VectorXd gamma;                 // -(c + C G^{-1} g)
  std::vector<Eigen::MatrixXd> theta_inv;  // inverses of S's diagonal blocks
  int n = 0;
};

enum class PrecondKind { identity, block_jacobi, stair, symmetric_stair, poly_split };

/// Canonical short name, also used in CSV output: identity | jacobi | stair |
/// symstair | poly:<order>.
std::string precond_name(PrecondKind kind, int order = 0);

struct Preconditioner {
  PrecondKind kind = PrecondKind::identity;
  int order = 0;             // poly_split series order, >= 1
  BlockTriMatrix phi_inv;    // empty for identity; diagonal-only for block_jacobi
  BlockTriMatrix stair_psi;  // poly_split only: the stair matrix Psi
  BlockTriMatrix remainder;  // poly_split only: E = Psi - S
};

SchurSystem build_schur(const KKTSystem& kkt);

/// Stair part of a block-tridiagonal matrix: even block-rows keep only their
/// diagonal block, odd block-rows are copied whole. Row 0 counts as even.
BlockTriMatrix stair_matrix(const BlockTriMatrix& S);

Preconditioner build_identity();
Preconditioner build_block_jacobi(const SchurSystem& schur);
Preconditioner build_stair(const SchurSystem& schur);
Preconditioner build_symmetric_stair(const SchurSystem& schur);
Preconditioner build_poly_split(const SchurSystem& schur, int order);
Preconditioner build_preconditioner(const SchurSystem& schur, PrecondKind kind, int order = 1);

/// r_tilde = Phi^{-1} r. poly_split evaluates the truncated splitting series
/// sum_{j=0..order} (Psi^{-1} E)^j Psi^{-1} r as repeated matvecs; the product
/// matrix is never formed.
Eigen::VectorXd apply_preconditioner(const Preconditioner& P, const Eigen::Ref<const Eigen::VectorXd>& r);

}  // namespace trajopt
