#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "trajopt/block_tri.hpp"
#include "trajopt/schur.hpp"

namespace trajopt {

enum class PcgVariant { sequential, block_parallel };

struct PcgConfig {
  /// Exit tolerance on eta' = r' Phi^{-1} r (preconditioner-scaled, as in the
  /// algorithm listing; not a 2-norm bound).
  double epsilon = 1e-4;
  /// Iteration cap; 0 means dim(S), the exact-arithmetic termination bound.
  int max_iter = 0;
  /// Fixed-order pairwise-tree scalar reductions in the block-parallel
  /// variant, so traces are reproducible and comparable across runs.
  bool deterministic_reductions = false;
  PcgVariant variant = PcgVariant::sequential;
  /// Record eta' per iteration in SolveReport::trace.
  bool collect_trace = false;
  /// Recompute gamma - S*lambda each iteration and track the worst relative
  /// disagreement with the recurrence residual (sequential variant only).
  bool check_residual_drift = false;
};

struct SolveReport {
  int iterations = 0;
  double exit_eta = 0.0;
  bool converged = false;
  std::vector<double> trace;        // per-iteration eta' when collect_trace
  double wall_time = 0.0;           // seconds
  double max_residual_drift = 0.0;  // only meaningful with check_residual_drift
};

struct PcgResult {
  Eigen::VectorXd lambda;
  SolveReport report;
};

/// Signals p'Sp <= 0 during CG, i.e. loss of positive definiteness (or a
/// singular preconditioner producing a zero search direction).
class PcgBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sequential preconditioned conjugate gradient on S lambda = gamma:
///   r = gamma - S lambda; r~,p = Phi\r; eta = r'r~
///   loop: alpha = eta/(p'Sp); r -= alpha Sp; lambda += alpha p;
///         r~ = Phi\r; eta' = r'r~; exit if eta' < eps;
///         beta = eta'/eta; p = r~ + beta p; eta = eta'
PcgResult pcg_solve(const BlockTriMatrix& S, const Preconditioner& P,
                    const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda0,
                    const PcgConfig& cfg);

/// Same recurrence organized over N+1 logical block workers with halo loads of
/// the neighbor p/r blocks and barrier-synchronized scalar reductions.
PcgResult pcg_solve_block_parallel(const BlockTriMatrix& S, const Preconditioner& P,
                                   const Eigen::VectorXd& gamma,
                                   const Eigen::VectorXd& lambda0, const PcgConfig& cfg);

/// Dispatch on cfg.variant.
PcgResult pcg_solve_auto(const BlockTriMatrix& S, const Preconditioner& P,
                         const Eigen::VectorXd& gamma, const Eigen::VectorXd& lambda0,
                         const PcgConfig& cfg);

}  // namespace trajopt
