#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trajopt/models.hpp"
#include "trajopt/sqp.hpp"
#include "trajopt/trajectory.hpp"

namespace trajopt {

struct TimedGoal {
  double t = 0.0;  // activation time, seconds
  Eigen::VectorXd state;
};

struct NmpcConfig {
  double control_rate = 100.0;  // Hz
  double sim_duration = 10.0;   // seconds
  int N = 32;                   // horizon: N+1 state knots
  double h = 0.01;              // planner timestep
  Eigen::VectorXd x0;           // initial plant state (zero if empty)
  std::vector<TimedGoal> goals;
  SqpConfig solver;
  int sim_substeps = 4;  // plant Euler substeps per control period
  /// Carry shifted multipliers into the next solve; false re-solves from
  /// lambda = 0 every step (the cold-start baseline).
  bool warm_start_lambda = true;
  /// Iteration-cap-only budgeting plus zeroed timing columns, so repeated
  /// runs are byte-identical.
  bool deterministic = false;
};

struct NmpcStepRecord {
  int step = 0;
  double time_s = 0.0;
  double solve_us = 0.0;
  int sqp_iters = 0;
  long pcg_iters_total = 0;
  double tracking_err = 0.0;
  bool overrun = false;
};

struct NmpcStats {
  std::vector<NmpcStepRecord> steps;
  std::vector<SqpStats> sqp_traces;          // one per control step
  std::vector<Eigen::VectorXd> plant_trace;  // plant state at each control step
  /// Mean tracking error over the last quarter of each goal segment.
  std::vector<double> segment_errors;
  double mean_solve_us = 0.0;
  double median_solve_us = 0.0;
  double p95_solve_us = 0.0;
  double max_solve_us = 0.0;
  int overruns = 0;
  bool deterministic = false;
};

/// Shift states, controls, and multipliers one knot earlier; the vacated last
/// knot duplicates the previous last knot.
Trajectory shift_warm_start(const Trajectory& traj);

/// Receding-horizon loop: measure plant state, run the budgeted SQP solve,
/// apply the first control for one period (zero-order hold, sim_substeps
/// Euler substeps), shift-warm-start, repeat. The plant and planner share the
/// same dynamics model.
NmpcStats run_nmpc(const NmpcConfig& cfg, const DynamicsModel& model, const CostModel& cost);

}  // namespace trajopt
