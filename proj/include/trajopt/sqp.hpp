#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "trajopt/kkt.hpp"
#include "trajopt/models.hpp"
#include "trajopt/pcg.hpp"
#include "trajopt/schur.hpp"
#include "trajopt/trajectory.hpp"

namespace trajopt {

struct MeritParams {
  enum class MuRule { fixed, multiplier_max };

  double mu = 10.0;
  /// Candidate step set, strictly descending, first element 1.
  std::vector<double> alphas = {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
  MuRule mu_rule = MuRule::fixed;
};

enum class SolverBackend { schur_pcg, dense_kkt };

struct SqpConfig {
  int max_sqp_iter = 10;
  PcgConfig pcg;
  MeritParams merit;
  PrecondKind precond = PrecondKind::symmetric_stair;
  int poly_order = 1;
  /// Wall-clock budget in seconds (NMPC mode). A started iteration always
  /// completes; 0 disables the budget.
  double time_budget = 0.0;
  SolverBackend backend = SolverBackend::schur_pcg;
};

struct LineSearchResult {
  double alpha = 0.0;
  Trajectory traj;
  double merit = 0.0;
  bool progress = false;
};

struct SqpIterStats {
  int iter = 0;
  double mu = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double alpha = 0.0;
  double constraint_l1 = 0.0;  // |c|_1 at the linearization point
  SolveReport pcg;
};

struct SqpStats {
  std::vector<SqpIterStats> iters;
  double wall_time = 0.0;
  bool hit_budget = false;
  bool stalled = false;  // two consecutive zero-progress line searches
};

struct SqpResult {
  Trajectory traj;
  Eigen::VectorXd lambda;
  SqpStats stats;
};

/// L1 merit M = J + mu * |c|_1 where |c|_1 sums the initial-condition residual
/// |x_s - x_0| and every defect |x_{k+1} - f(x_k, u_k)|.
double merit(const Trajectory& traj, const DynamicsModel& model, const CostModel& cost,
             const Eigen::VectorXd& x_s, double mu);

double constraint_l1(const Trajectory& traj, const DynamicsModel& model,
                     const Eigen::VectorXd& x_s);

/// Index of the winning candidate: lowest merit, ties broken toward the
/// largest alpha (lowest index), -1 when nothing improves on current_merit.
int select_line_search_candidate(double current_merit, std::span<const double> candidate_merits);

/// Evaluates M(traj + alpha dz) for every alpha concurrently and keeps the
/// best strictly-improving candidate; alpha = 0 with progress = false when
/// no candidate improves.
LineSearchResult parallel_line_search(const Trajectory& traj, const Eigen::VectorXd& dz,
                                      const DynamicsModel& model, const CostModel& cost,
                                      const MeritParams& params, const Eigen::VectorXd& x_s);

/// traj + alpha * dz, knot by knot.
Trajectory apply_step(const Trajectory& traj, const Eigen::VectorXd& dz, double alpha);

/// Outer loop: linearize -> Schur/PCG (lambda warm-started) -> reconstruct ->
/// parallel line search, until max_sqp_iter, budget exhaustion, or two
/// consecutive zero-progress line searches.
SqpResult sqp_solve(const Trajectory& traj0, const Eigen::VectorXd& lambda0,
                    const Eigen::VectorXd& x_s, const DynamicsModel& model,
                    const CostModel& cost, const SqpConfig& cfg);

/// One CSV row per SQP iteration (header included).
std::string sqp_stats_csv(const SqpStats& stats);

}  // namespace trajopt
