#include "trajopt/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace trajopt {

namespace {

using Eigen::VectorXd;

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * (static_cast<double>(values.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

const VectorXd& active_goal(const std::vector<TimedGoal>& goals, double t) {
  const VectorXd* current = &goals.front().state;
  for (const auto& g : goals) {
    if (g.t <= t) current = &g.state;
  }
  return *current;
}

}  // namespace

Trajectory shift_warm_start(const Trajectory& traj) {
  const int N = traj.horizon();
  Trajectory out = traj;
  for (int k = 0; k < N; ++k) out.X[k] = traj.X[k + 1];
  // out.X[N] keeps traj.X[N]: the vacated knot duplicates its predecessor.
  for (int k = 0; k + 1 < N; ++k) out.U[k] = traj.U[k + 1];
  if (traj.lambda.size() > 0) {
    const int n = static_cast<int>(traj.X[0].size());
    for (int k = 0; k < N; ++k) {
      out.lambda.segment(static_cast<Eigen::Index>(k) * n, n) =
          traj.lambda.segment(static_cast<Eigen::Index>(k + 1) * n, n);
    }
  }
  return out;
}

NmpcStats run_nmpc(const NmpcConfig& cfg, const DynamicsModel& model, const CostModel& cost) {
  if (cfg.control_rate <= 0.0) throw std::invalid_argument("run_nmpc: control_rate must be > 0");
  if (cfg.N < 2) throw std::invalid_argument("run_nmpc: N must be >= 2");
  if (cfg.goals.empty()) throw std::invalid_argument("run_nmpc: goal sequence is empty");
  if (cfg.sim_substeps < 1) throw std::invalid_argument("run_nmpc: sim_substeps must be >= 1");

  const int n = model.state_dim();
  const int m = model.control_dim();
  const double period = 1.0 / cfg.control_rate;
  const int steps = static_cast<int>(std::llround(cfg.control_rate * cfg.sim_duration));

  SqpConfig solver = cfg.solver;
  solver.time_budget = cfg.deterministic ? 0.0 : period;

  VectorXd plant = cfg.x0.size() > 0 ? cfg.x0 : VectorXd::Zero(n);

  Trajectory traj;
  traj.h = cfg.h;
  traj.X.assign(cfg.N + 1, plant);
  traj.U.assign(cfg.N, VectorXd::Zero(m));
  traj.lambda = VectorXd::Zero(static_cast<Eigen::Index>(cfg.N + 1) * n);

  CostModel step_cost = cost;
  const int pos_dims = std::max(1, n / 2);

  NmpcStats stats;
  stats.deterministic = cfg.deterministic;
  stats.steps.reserve(steps);

  for (int step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * period;
    const VectorXd& goal = active_goal(cfg.goals, t);
    step_cost.goals = {goal};

    const VectorXd x_s = plant;  // measured state
    if (step > 0) traj = shift_warm_start(traj);
    const VectorXd lambda0 = cfg.warm_start_lambda
                                 ? traj.lambda
                                 : VectorXd::Zero(static_cast<Eigen::Index>(cfg.N + 1) * n);

    SqpResult solve = sqp_solve(traj, lambda0, x_s, model, step_cost, solver);
    traj = std::move(solve.traj);

    NmpcStepRecord rec;
    rec.step = step;
    rec.time_s = t;
    rec.solve_us = solve.stats.wall_time * 1e6;
    rec.sqp_iters = static_cast<int>(solve.stats.iters.size());
    for (const auto& it : solve.stats.iters) rec.pcg_iters_total += it.pcg.iterations;
    rec.tracking_err = (plant - goal).head(pos_dims).norm();
    rec.overrun = solve.stats.wall_time > period;
    if (rec.overrun) ++stats.overruns;

    stats.plant_trace.push_back(plant);
    stats.steps.push_back(rec);
    stats.sqp_traces.push_back(std::move(solve.stats));

    // Zero-order hold on the plan's first control for one period.
    const VectorXd u = traj.U[0];
    const double dt = period / cfg.sim_substeps;
    for (int s = 0; s < cfg.sim_substeps; ++s) {
      plant = model.step(plant, u, dt);
    }
  }

  // Aggregates.
  std::vector<double> times;
  times.reserve(stats.steps.size());
  for (const auto& rec : stats.steps) times.push_back(rec.solve_us);
  if (!times.empty()) {
    double sum = 0.0;
    for (double v : times) sum += v;
    stats.mean_solve_us = sum / static_cast<double>(times.size());
    stats.median_solve_us = percentile(times, 0.5);
    stats.p95_solve_us = percentile(times, 0.95);
    stats.max_solve_us = *std::max_element(times.begin(), times.end());
  }

  // Steady-state tracking error: mean over the last quarter of each goal
  // segment's control steps.
  for (std::size_t g = 0; g < cfg.goals.size(); ++g) {
    const double t_begin = cfg.goals[g].t;
    const double t_end =
        g + 1 < cfg.goals.size() ? cfg.goals[g + 1].t : cfg.sim_duration;
    std::vector<double> seg;
    for (const auto& rec : stats.steps) {
      if (rec.time_s >= t_begin && rec.time_s < t_end) seg.push_back(rec.tracking_err);
    }
    if (seg.empty()) {
      stats.segment_errors.push_back(0.0);
      continue;
    }
    const std::size_t tail = std::max<std::size_t>(1, seg.size() / 4);
    double sum = 0.0;
    for (std::size_t i = seg.size() - tail; i < seg.size(); ++i) sum += seg[i];
    stats.segment_errors.push_back(sum / static_cast<double>(tail));
  }
  return stats;
}

}  // namespace trajopt
