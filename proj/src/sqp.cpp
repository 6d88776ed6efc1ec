#include "trajopt/sqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "trajopt/format.hpp"
#include "trajopt/parallel.hpp"

namespace trajopt {

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::VectorXd;

void validate_merit_params(const MeritParams& params) {
  if (params.mu <= 0.0) {
    throw std::invalid_argument("merit: mu must be positive");
  }
  const auto& a = params.alphas;
  if (a.empty() || a.front() != 1.0) {
    throw std::invalid_argument("line search: alpha set must start at 1");
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] <= 0.0 || a[i] > 1.0 || (i > 0 && a[i] >= a[i - 1])) {
      throw std::invalid_argument("line search: alphas must be strictly descending in (0, 1]");
    }
  }
}

}  // namespace

double constraint_l1(const Trajectory& traj, const DynamicsModel& model, const VectorXd& x_s) {
  double total = (x_s - traj.X[0]).lpNorm<1>();
  for (int k = 0; k < traj.horizon(); ++k) {
    total += (traj.X[k + 1] - model.step(traj.X[k], traj.U[k], traj.h)).lpNorm<1>();
  }
  return total;
}

double merit(const Trajectory& traj, const DynamicsModel& model, const CostModel& cost,
             const VectorXd& x_s, double mu) {
  return eval_cost(cost, traj) + mu * constraint_l1(traj, model, x_s);
}

int select_line_search_candidate(double current_merit, std::span<const double> candidate_merits) {
  int best = -1;
  double best_merit = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidate_merits.size(); ++i) {
    if (std::isfinite(candidate_merits[i]) && candidate_merits[i] < best_merit) {
      best_merit = candidate_merits[i];
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || best_merit >= current_merit) return -1;
  return best;
}

Trajectory apply_step(const Trajectory& traj, const VectorXd& dz, double alpha) {
  const int N = traj.horizon();
  const int n = static_cast<int>(traj.X[0].size());
  const int m = N > 0 ? static_cast<int>(traj.U[0].size()) : 0;
  if (dz.size() != static_cast<Eigen::Index>(N + 1) * n + static_cast<Eigen::Index>(N) * m) {
    throw std::invalid_argument("apply_step: expected dz of length " +
                                std::to_string((N + 1) * n + N * m) + ", got " +
                                std::to_string(dz.size()));
  }
  Trajectory out = traj;
  const int stride = n + m;
  for (int k = 0; k <= N; ++k) {
    out.X[k] += alpha * dz.segment(static_cast<Eigen::Index>(k) * stride, n);
    if (k < N) out.U[k] += alpha * dz.segment(static_cast<Eigen::Index>(k) * stride + n, m);
  }
  return out;
}

LineSearchResult parallel_line_search(const Trajectory& traj, const VectorXd& dz,
                                      const DynamicsModel& model, const CostModel& cost,
                                      const MeritParams& params, const VectorXd& x_s) {
  validate_merit_params(params);
  const double current = merit(traj, model, cost, x_s, params.mu);

  const int count = static_cast<int>(params.alphas.size());
  std::vector<double> merits(count, std::numeric_limits<double>::infinity());
  std::vector<Trajectory> candidates(count);
  // Candidates are independent; traj and dz are shared read-only.
  parallel_for(
      0, count,
      [&](int i) {
        candidates[i] = apply_step(traj, dz, params.alphas[i]);
        const double m = merit(candidates[i], model, cost, x_s, params.mu);
        if (std::isfinite(m)) merits[i] = m;
      },
      /*grain=*/1);

  const bool any_finite =
      std::any_of(merits.begin(), merits.end(), [](double m) { return std::isfinite(m); });
  if (!any_finite) {
    throw std::runtime_error("line search: merit is non-finite at every candidate step");
  }

  const int best = select_line_search_candidate(current, merits);
  LineSearchResult out;
  if (best < 0) {
    out.alpha = 0.0;
    out.traj = traj;
    out.merit = current;
    out.progress = false;
  } else {
    out.alpha = params.alphas[best];
    out.traj = std::move(candidates[best]);
    out.merit = merits[best];
    out.progress = true;
  }
  return out;
}

SqpResult sqp_solve(const Trajectory& traj0, const VectorXd& lambda0, const VectorXd& x_s,
                    const DynamicsModel& model, const CostModel& cost, const SqpConfig& cfg) {
  if (cfg.max_sqp_iter < 1) {
    throw std::invalid_argument("sqp_solve: max_sqp_iter must be >= 1");
  }
  validate_merit_params(cfg.merit);
  const auto start = Clock::now();

  const int n = model.state_dim();
  const int dual_dim = (traj0.horizon() + 1) * n;
  Trajectory traj = traj0;
  VectorXd lambda = lambda0.size() > 0 ? lambda0 : VectorXd::Zero(dual_dim);
  if (lambda.size() != dual_dim) {
    throw std::invalid_argument("sqp_solve: expected lambda0 of length " +
                                std::to_string(dual_dim) + ", got " +
                                std::to_string(lambda0.size()));
  }

  SqpResult result;
  int zero_progress = 0;

  for (int it = 1; it <= cfg.max_sqp_iter; ++it) {
    if (cfg.time_budget > 0.0 && it > 1) {
      const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
      if (elapsed >= cfg.time_budget) {
        result.stats.hit_budget = true;
        break;
      }
    }

    KKTSystem kkt = assemble_kkt(traj, model, cost, x_s);

    double mu = cfg.merit.mu;
    if (cfg.merit.mu_rule == MeritParams::MuRule::multiplier_max) {
      mu = std::max(lambda.lpNorm<Eigen::Infinity>() * 1.1, cfg.merit.mu);
    }

    SqpIterStats iter_stats;
    iter_stats.iter = it;
    iter_stats.mu = mu;
    iter_stats.constraint_l1 = constraint_l1(traj, model, x_s);
    iter_stats.merit_before = eval_cost(cost, traj) + mu * iter_stats.constraint_l1;

    VectorXd dz;
    if (cfg.backend == SolverBackend::dense_kkt) {
      PrimalDual pd = dense_kkt_solve(kkt);
      lambda = pd.lambda;
      dz = pd.dz;
    } else {
      SchurSystem schur = build_schur(kkt);
      Preconditioner P = build_preconditioner(schur, cfg.precond, cfg.poly_order);
      PcgResult res = pcg_solve_auto(schur.S, P, schur.gamma, lambda, cfg.pcg);
      lambda = res.lambda;
      iter_stats.pcg = res.report;
      dz = reconstruct_primal(kkt, lambda);
    }

    MeritParams ls_params = cfg.merit;
    ls_params.mu = mu;
    ls_params.mu_rule = MeritParams::MuRule::fixed;
    LineSearchResult ls = parallel_line_search(traj, dz, model, cost, ls_params, x_s);

    iter_stats.alpha = ls.alpha;
    iter_stats.merit_after = ls.merit;
    result.stats.iters.push_back(std::move(iter_stats));

    if (!ls.progress) {
      if (++zero_progress >= 2) {
        result.stats.stalled = true;
        break;
      }
    } else {
      zero_progress = 0;
      traj = std::move(ls.traj);
    }
  }

  result.stats.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  traj.lambda = lambda;
  result.traj = std::move(traj);
  result.lambda = std::move(lambda);
  return result;
}

std::string sqp_stats_csv(const SqpStats& stats) {
  std::ostringstream out;
  out << "iter,mu,merit_before,merit_after,alpha,constraint_l1,pcg_iterations,pcg_exit_eta,"
         "pcg_converged,pcg_wall_us\n";
  for (const auto& it : stats.iters) {
    out << it.iter << ',' << format9(it.mu) << ',' << format9(it.merit_before) << ','
        << format9(it.merit_after) << ',' << format9(it.alpha) << ','
        << format9(it.constraint_l1) << ',' << it.pcg.iterations << ','
        << format9(it.pcg.exit_eta) << ',' << (it.pcg.converged ? "true" : "false") << ','
        << static_cast<long long>(it.pcg.wall_time * 1e6) << '\n';
  }
  return out.str();
}

}  // namespace trajopt
