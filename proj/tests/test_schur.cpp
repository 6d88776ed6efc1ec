#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "test_util.hpp"
#include "trajopt/random_problem.hpp"
#include "trajopt/schur.hpp"

using namespace trajopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Wraps a hand-built S into a SchurSystem (diagonal-block inverses cached the
// same way build_schur does it).
SchurSystem wrap(BlockTriMatrix S) {
  SchurSystem out;
  out.n = S.block_dim();
  out.gamma = VectorXd::Zero(S.dim());
  for (int row = 0; row < S.block_rows(); ++row) {
    const MatrixXd inv = MatrixXd(S.diag(row)).inverse();
    out.theta_inv.push_back(0.5 * (inv + inv.transpose()));
  }
  out.S = std::move(S);
  return out;
}

BlockTriMatrix scalar_spd_2block() {
  BlockTriMatrix S(2, 1);
  S.set_diag(0, 2.0 * MatrixXd::Identity(1, 1));
  S.set_diag(1, 2.0 * MatrixXd::Identity(1, 1));
  S.set_right(0, MatrixXd::Identity(1, 1));
  S.set_left(1, MatrixXd::Identity(1, 1));
  return S;
}

}  // namespace

TEST_CASE("build_schur scalar blocks by hand") {
  // n = m = 1, A = B = 1, Q = R = Q_{k+1} = 1 -> theta = 3, phi = -1.
  KKTSystem kkt;
  kkt.N = 1;
  kkt.n = 1;
  kkt.m = 1;
  kkt.knots.resize(2);
  kkt.knots[0].Q = MatrixXd::Identity(1, 1);
  kkt.knots[0].R = MatrixXd::Identity(1, 1);
  kkt.knots[0].A = MatrixXd::Identity(1, 1);
  kkt.knots[0].B = MatrixXd::Identity(1, 1);
  kkt.knots[0].q = VectorXd::Zero(1);
  kkt.knots[0].r = VectorXd::Zero(1);
  kkt.knots[0].e = VectorXd::Zero(1);
  kkt.knots[1].Q = MatrixXd::Identity(1, 1);
  kkt.knots[1].q = VectorXd::Zero(1);
  kkt.x_s = VectorXd::Zero(1);
  kkt.x0 = VectorXd::Zero(1);

  const SchurSystem schur = build_schur(kkt);
  CHECK(schur.S.diag(1)(0, 0) == doctest::Approx(3.0));
  CHECK(schur.S.left(1)(0, 0) == doctest::Approx(-1.0));
  CHECK(schur.S.right(0)(0, 0) == doctest::Approx(-1.0));
  // Zero gradients and defects -> zeta = 0 -> gamma = 0.
  CHECK(schur.gamma.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("build_schur matches the dense-formula oracle") {
  const KKTSystem kkt = random_kkt(42, 8, 3, 2);
  const SchurSystem schur = build_schur(kkt);
  const MatrixXd S_dense = test::dense_schur_matrix(kkt);
  const VectorXd gamma_dense = test::dense_schur_rhs(kkt);
  CHECK((schur.S.to_dense() - S_dense).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((schur.gamma - gamma_dense).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("assembled S is SPD and structurally symmetric") {
  for (const auto& spec : test::standard_batch(12)) {
    const KKTSystem kkt = random_kkt(spec.seed, spec.N, spec.n, spec.m);
    const SchurSystem schur = build_schur(kkt);
    CHECK(schur.S.max_asymmetry() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(schur.S.to_dense(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("block-Jacobi preconditioner") {
  SUBCASE("identity diagonal blocks invert to identity") {
    BlockTriMatrix S(3, 2);
    for (int i = 0; i < 3; ++i) S.set_diag(i, MatrixXd::Identity(2, 2));
    const Preconditioner P = build_block_jacobi(wrap(std::move(S)));
    CHECK((P.phi_inv.to_dense() - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("scalar diagonal [2, 4] inverts to [0.5, 0.25]") {
    BlockTriMatrix S(2, 1);
    S.set_diag(0, 2.0 * MatrixXd::Identity(1, 1));
    S.set_diag(1, 4.0 * MatrixXd::Identity(1, 1));
    const Preconditioner P = build_block_jacobi(wrap(std::move(S)));
    CHECK(P.phi_inv.diag(0)(0, 0) == doctest::Approx(0.5));
    CHECK(P.phi_inv.diag(1)(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("multiply-back against the diagonal blocks") {
    const KKTSystem kkt = random_kkt(51, 6, 3, 2);
    const SchurSystem schur = build_schur(kkt);
    const Preconditioner P = build_block_jacobi(schur);
    for (int row = 0; row < schur.S.block_rows(); ++row) {
      const MatrixXd prod = P.phi_inv.diag(row) * schur.S.diag(row);
      CHECK((prod - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("stair preconditioner") {
  SUBCASE("2-block scalar case by hand") {
    const SchurSystem schur = wrap(scalar_spd_2block());
    const BlockTriMatrix psi = stair_matrix(schur.S);
    MatrixXd psi_want(2, 2);
    psi_want << 2, 0, 1, 2;
    CHECK((psi.to_dense() - psi_want).cwiseAbs().maxCoeff() == 0.0);

    const Preconditioner P = build_stair(schur);
    MatrixXd phi_want(2, 2);
    phi_want << 0.5, 0, -0.25, 0.5;
    CHECK((P.phi_inv.to_dense() - phi_want).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("block-diagonal S degenerates to block-Jacobi") {
    BlockTriMatrix S(4, 2);
    UniformRng rng(8);
    for (int i = 0; i < 4; ++i) {
      const MatrixXd L = rng.matrix(2, 2, -1.0, 1.0);
      S.set_diag(i, L * L.transpose() + 0.5 * MatrixXd::Identity(2, 2));
    }
    const SchurSystem schur = wrap(std::move(S));
    const Preconditioner stair = build_stair(schur);
    const Preconditioner jacobi = build_block_jacobi(schur);
    CHECK((stair.phi_inv.to_dense() - jacobi.phi_inv.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("analytic inverse matches the dense inverse of Psi") {
    const KKTSystem kkt = random_kkt(61, 8, 2, 1);  // 9 block rows, nb = 2
    const SchurSystem schur = build_schur(kkt);
    const Preconditioner P = build_stair(schur);
    const MatrixXd psi = stair_matrix(schur.S).to_dense();
    CHECK((psi.inverse() - P.phi_inv.to_dense()).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("symmetric stair preconditioner") {
  SUBCASE("2-block scalar case mirrors the stair inverse") {
    const SchurSystem schur = wrap(scalar_spd_2block());
    const Preconditioner P = build_symmetric_stair(schur);
    MatrixXd want(2, 2);
    want << 0.5, -0.25, -0.25, 0.5;
    CHECK((P.phi_inv.to_dense() - want).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("block-diagonal S gives exactly the block-Jacobi output") {
    BlockTriMatrix S(5, 1);
    for (int i = 0; i < 5; ++i) S.set_diag(i, (i + 1.0) * MatrixXd::Identity(1, 1));
    const SchurSystem schur = wrap(std::move(S));
    const Preconditioner sym = build_symmetric_stair(schur);
    const Preconditioner jacobi = build_block_jacobi(schur);
    CHECK((sym.phi_inv.to_dense() - jacobi.phi_inv.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("output is symmetric on assembled systems") {
    const KKTSystem kkt = random_kkt(62, 10, 3, 2);
    const SchurSystem schur = build_schur(kkt);
    const Preconditioner P = build_symmetric_stair(schur);
    CHECK(P.phi_inv.max_asymmetry() <= 1e-12);
    const MatrixXd dense = P.phi_inv.to_dense();
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("apply_preconditioner") {
  SUBCASE("identity returns the input unchanged") {
    const Preconditioner P = build_identity();
    UniformRng rng(9);
    const VectorXd r = rng.vector(7, -1.0, 1.0);
    CHECK((apply_preconditioner(P, r) - r).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("block-Jacobi scalar example") {
    BlockTriMatrix S(2, 1);
    S.set_diag(0, 2.0 * MatrixXd::Identity(1, 1));
    S.set_diag(1, 4.0 * MatrixXd::Identity(1, 1));
    const Preconditioner P = build_block_jacobi(wrap(std::move(S)));
    VectorXd r(2);
    r << 2, 4;
    const VectorXd out = apply_preconditioner(P, r);
    CHECK(out(0) == doctest::Approx(1.0));
    CHECK(out(1) == doctest::Approx(1.0));
  }
  SUBCASE("poly order 1 equals the dense expansion (I + WE)W r") {
    const KKTSystem kkt = random_kkt(63, 6, 2, 1);
    const SchurSystem schur = build_schur(kkt);
    const Preconditioner P = build_poly_split(schur, 1);
    const MatrixXd W = build_stair(schur).phi_inv.to_dense();
    const MatrixXd E = stair_matrix(schur.S).to_dense() - schur.S.to_dense();
    UniformRng rng(64);
    const VectorXd r = rng.vector(schur.S.dim(), -1.0, 1.0);
    const VectorXd want = (MatrixXd::Identity(W.rows(), W.cols()) + W * E) * (W * r);
    CHECK((apply_preconditioner(P, r) - want).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  SUBCASE("order must be at least one") {
    const KKTSystem kkt = random_kkt(65, 3, 2, 1);
    const SchurSystem schur = build_schur(kkt);
    CHECK_THROWS_AS(build_poly_split(schur, 0), std::invalid_argument);
  }
}

TEST_CASE("property: preconditioner application is linear") {
  const KKTSystem kkt = random_kkt(71, 7, 3, 2);
  const SchurSystem schur = build_schur(kkt);
  UniformRng rng(72);
  const VectorXd x = rng.vector(schur.S.dim(), -1.0, 1.0);
  const VectorXd y = rng.vector(schur.S.dim(), -1.0, 1.0);
  const double a = 1.3, b = -0.7;
  for (PrecondKind kind : {PrecondKind::identity, PrecondKind::block_jacobi, PrecondKind::stair,
                           PrecondKind::symmetric_stair, PrecondKind::poly_split}) {
    const Preconditioner P = build_preconditioner(schur, kind, 2);
    const VectorXd lhs = apply_preconditioner(P, a * x + b * y);
    const VectorXd rhs = a * apply_preconditioner(P, x) + b * apply_preconditioner(P, y);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("property: stair inverse is exact across the seeded size sweep") {
  std::uint64_t seed = 80;
  for (int N : {1, 2, 4, 9, 16, 32}) {  // 2..33 block rows
    for (int n : {1, 2, 3, 4}) {
      const KKTSystem kkt = random_kkt(seed++, N, n, 1);
      const SchurSystem schur = build_schur(kkt);
      const Preconditioner P = build_stair(schur);
      const MatrixXd prod = stair_matrix(schur.S).to_dense() * P.phi_inv.to_dense();
      CHECK((prod - MatrixXd::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
}
