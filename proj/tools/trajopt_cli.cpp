#include <CLI11.hpp>
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajopt/format.hpp"
#include "trajopt/models.hpp"
#include "trajopt/nmpc.hpp"
#include "trajopt/parallel.hpp"
#include "trajopt/pcg.hpp"
#include "trajopt/problem_io.hpp"
#include "trajopt/random_problem.hpp"
#include "trajopt/schur.hpp"
#include "trajopt/sqp.hpp"

namespace {

using namespace trajopt;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitBreakdown = 3;
constexpr int kExitOracle = 4;

struct PrecondChoice {
  PrecondKind kind = PrecondKind::symmetric_stair;
  int order = 1;
};

PrecondChoice parse_precond(const std::string& name) {
  if (name == "identity") return {PrecondKind::identity, 0};
  if (name == "jacobi") return {PrecondKind::block_jacobi, 0};
  if (name == "stair") return {PrecondKind::stair, 0};
  if (name == "symstair") return {PrecondKind::symmetric_stair, 0};
  if (name.rfind("poly:", 0) == 0) {
    const int order = std::stoi(name.substr(5));
    if (order < 1) throw InputError("poly preconditioner order must be >= 1: " + name);
    return {PrecondKind::poly_split, order};
  }
  throw InputError("unknown preconditioner \"" + name +
                   "\" (expected identity|jacobi|stair|symstair|poly:<order>)");
}

PcgVariant parse_variant(const std::string& name) {
  if (name == "sequential") return PcgVariant::sequential;
  if (name == "parallel" || name == "block_parallel") return PcgVariant::block_parallel;
  throw InputError("unknown variant \"" + name + "\" (expected sequential|parallel)");
}

std::string variant_name(PcgVariant v) {
  return v == PcgVariant::block_parallel ? "block_parallel" : "sequential";
}

VectorXd vector_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw InputError("run-nmpc config: " + what + " must be a list");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

MatrixXd weight_matrix(const json& j, int dim, const std::string& what) {
  if (j.is_number()) {
    return j.get<double>() * MatrixXd::Identity(dim, dim);
  }
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != dim) {
      throw InputError("run-nmpc config: " + what + " diagonal needs " + std::to_string(dim) +
                       " entries, got " + std::to_string(j.size()));
    }
    MatrixXd W = MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) W(i, i) = j[i].get<double>();
    return W;
  }
  throw InputError("run-nmpc config: " + what + " must be a scalar or diagonal list");
}

int cmd_solve_qp(const std::string& path, const std::string& precond_name, double eps,
                 const std::string& variant, int max_iter, bool oracle, std::uint64_t seed,
                 bool deterministic, const std::string& out_path) {
  const ProblemFile pf = load_problem(path);
  const KKTSystem kkt = problem_to_kkt(pf);
  const SchurSystem schur = build_schur(kkt);
  const PrecondChoice pc = parse_precond(precond_name);
  const Preconditioner P = build_preconditioner(schur, pc.kind, pc.order);

  PcgConfig cfg;
  cfg.epsilon = eps;
  cfg.max_iter = max_iter;
  cfg.variant = parse_variant(variant);
  cfg.deterministic_reductions = deterministic;
  const PcgResult res =
      pcg_solve_auto(schur.S, P, schur.gamma, VectorXd::Zero(schur.S.dim()), cfg);

  std::ostringstream out;
  out << result_row_header() << '\n'
      << result_row("solve_qp", kkt.N + 1, kkt.n, kkt.m, precond_name, eps,
                    variant_name(cfg.variant), res.report, seed, deterministic)
      << '\n';
  if (out_path.empty()) {
    std::cout << out.str();
  } else {
    write_text_file(out_path, out.str());
  }

  if (oracle) {
    const PrimalDual pd = dense_kkt_solve(kkt);
    const double err = (res.lambda - pd.lambda).lpNorm<Eigen::Infinity>();
    if (err > 1e-5) {
      std::cerr << "oracle mismatch: |lambda_pcg - lambda_dense|_inf = " << format9(err) << "\n";
      return kExitOracle;
    }
    std::cerr << "oracle agreement: |lambda_pcg - lambda_dense|_inf = " << format9(err) << "\n";
  }
  return kExitOk;
}

int cmd_bench_pcg(const std::vector<int>& knots_list, int state_dim, int ctrl_dim,
                  const std::vector<std::string>& precond_names,
                  const std::vector<double>& eps_list, int trials, const std::string& variant,
                  std::uint64_t seed, bool deterministic, std::string out_path) {
  if (out_path.empty()) out_path = "bench_pcg.csv";
  for (const auto& p : precond_names) parse_precond(p);  // validate before running
  const PcgVariant var = parse_variant(variant);

  struct Instance {
    int knots;
    std::uint64_t seed;
    std::string rows;
  };
  std::vector<Instance> instances;
  for (std::size_t g = 0; g < knots_list.size(); ++g) {
    for (int t = 0; t < trials; ++t) {
      // Keyed by (knot grid index, trial) so every preconditioner and epsilon
      // solves the same system.
      instances.push_back({knots_list[g],
                           seed + 1000003ULL * static_cast<std::uint64_t>(g) +
                               static_cast<std::uint64_t>(t),
                           ""});
    }
  }

  // Trials run concurrently over disjoint instances; rows are buffered and
  // written in (config, trial) order below.
  parallel_for(0, static_cast<int>(instances.size()), [&](int idx) {
    Instance& inst = instances[idx];
    const int N = inst.knots - 1;
    const KKTSystem kkt = random_kkt(inst.seed, N, state_dim, ctrl_dim);
    const SchurSystem schur = build_schur(kkt);
    std::ostringstream rows;

    // Direct-solver baseline: block-tridiagonal Cholesky (the sparse-direct
    // analog), timed like the iterative rows.
    const auto t0 = std::chrono::steady_clock::now();
    const VectorXd lam_direct = schur.S.cholesky_solve(schur.gamma);
    SolveReport dense_report;
    dense_report.converged = true;
    dense_report.exit_eta = (schur.gamma - schur.S.matvec(lam_direct)).squaredNorm();
    dense_report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows << result_row("bench_pcg", inst.knots, state_dim, ctrl_dim, "dense_baseline", 0.0,
                       "direct", dense_report, inst.seed, deterministic)
         << '\n';

    for (const auto& pname : precond_names) {
      const PrecondChoice pc = parse_precond(pname);
      const Preconditioner P = build_preconditioner(schur, pc.kind, pc.order);
      for (double eps : eps_list) {
        PcgConfig cfg;
        cfg.epsilon = eps;
        cfg.variant = var;
        cfg.deterministic_reductions = deterministic;
        const PcgResult res =
            pcg_solve_auto(schur.S, P, schur.gamma, VectorXd::Zero(schur.S.dim()), cfg);
        rows << result_row("bench_pcg", inst.knots, state_dim, ctrl_dim, pname, eps,
                           variant_name(var), res.report, inst.seed, deterministic)
             << '\n';
      }
    }
    inst.rows = rows.str();
  });

  std::ostringstream csv;
  csv << result_row_header() << '\n';
  for (const auto& inst : instances) csv << inst.rows;
  write_text_file(out_path, csv.str());

  for (int knots : knots_list) {
    std::cout << "bench-pcg: knots=" << knots << " n=" << state_dim << " m=" << ctrl_dim
              << " lambda_dim=" << knots * state_dim << " trials=" << trials << "\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

struct NmpcFileConfig {
  std::vector<double> rates;
  std::vector<int> horizons;
  NmpcConfig base;
  std::string model_name = "double_integrator";
  json cost_json;
};

NmpcFileConfig load_nmpc_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw InputError("malformed JSON in " + path + ": " + e.what());
  }

  try {
    NmpcFileConfig out;
    out.model_name = doc.value("model", std::string("double_integrator"));
    if (doc.contains("control_rate") && doc["control_rate"].is_array()) {
      for (const auto& r : doc["control_rate"]) out.rates.push_back(r.get<double>());
    } else {
      out.rates.push_back(doc.value("control_rate", 100.0));
    }
    if (doc.contains("N") && doc["N"].is_array()) {
      for (const auto& v : doc["N"]) out.horizons.push_back(v.get<int>());
    } else {
      out.horizons.push_back(doc.value("N", 32));
    }
    out.base.sim_duration = doc.value("sim_duration", 10.0);
    out.base.h = doc.value("h", 0.01);
    out.base.sim_substeps = doc.value("sim_substeps", 4);
    out.base.warm_start_lambda = doc.value("warm_start", true);
    if (doc.contains("x0")) out.base.x0 = vector_from(doc["x0"], "x0");
    if (doc.contains("goals")) {
      for (const auto& gj : doc["goals"]) {
        out.base.goals.push_back({gj.value("t", 0.0), vector_from(gj.at("state"), "goal state")});
      }
    }
    out.base.solver.max_sqp_iter = 5;
    out.base.solver.pcg.epsilon = 1e-4;
    out.base.solver.merit.mu_rule = MeritParams::MuRule::multiplier_max;
    if (doc.contains("solver")) {
      const json& s = doc["solver"];
      out.base.solver.max_sqp_iter = s.value("max_sqp_iter", 5);
      out.base.solver.pcg.epsilon = s.value("eps", 1e-4);
      out.base.solver.pcg.max_iter = s.value("max_pcg_iter", 0);
      const PrecondChoice pc = parse_precond(s.value("precond", std::string("symstair")));
      out.base.solver.precond = pc.kind;
      out.base.solver.poly_order = pc.order;
      out.base.solver.pcg.variant = parse_variant(s.value("variant", std::string("sequential")));
      out.base.solver.merit.mu = s.value("mu", 10.0);
      const std::string rule = s.value("mu_rule", std::string("multiplier_max"));
      out.base.solver.merit.mu_rule =
          rule == "fixed" ? MeritParams::MuRule::fixed : MeritParams::MuRule::multiplier_max;
    }
    out.cost_json = doc.value("cost", json::object());
    return out;
  } catch (const json::exception& e) {
    throw InputError("run-nmpc config " + path + ": " + e.what());
  }
}

CostModel cost_from_json(const json& cj, int n, int m) {
  // Defaults: positions weighted 1000, velocities 100, controls 1, terminal
  // 1e5. The scale keeps the primal image of the eps = 1e-4 dual exit well
  // below the tracking tolerances.
  MatrixXd Wx = 100.0 * MatrixXd::Identity(n, n);
  for (int i = 0; i < n / 2; ++i) Wx(i, i) = 1000.0;
  MatrixXd Wu = MatrixXd::Identity(m, m);
  MatrixXd WN = 1e5 * MatrixXd::Identity(n, n);
  if (cj.contains("wx")) Wx = weight_matrix(cj["wx"], n, "cost.wx");
  if (cj.contains("wu")) Wu = weight_matrix(cj["wu"], m, "cost.wu");
  if (cj.contains("wn")) WN = weight_matrix(cj["wn"], n, "cost.wn");
  return quadratic_tracking_cost(Wx, Wu, WN, VectorXd::Zero(n));
}

int cmd_run_nmpc(const std::string& config_path, bool deterministic, std::string out_dir) {
  if (out_dir.empty()) out_dir = ".";
  const NmpcFileConfig fc = load_nmpc_config(config_path);
  auto model = make_model(fc.model_name);
  const int n = model->state_dim();
  const int m = model->control_dim();
  if (fc.base.goals.empty()) throw InputError("run-nmpc config: goals must be nonempty");
  for (const auto& g : fc.base.goals) {
    if (g.state.size() != n) {
      throw InputError("run-nmpc config: goal state dimension " + std::to_string(g.state.size()) +
                       " does not match model state dimension " + std::to_string(n));
    }
  }
  const CostModel cost = cost_from_json(fc.cost_json, n, m);

  const bool grid = fc.rates.size() > 1 || fc.horizons.size() > 1;
  if (!grid) {
    NmpcConfig cfg = fc.base;
    cfg.control_rate = fc.rates[0];
    cfg.N = fc.horizons[0];
    cfg.deterministic = deterministic;
    const NmpcStats stats = run_nmpc(cfg, *model, cost);
    write_steps_csv(stats, out_dir + "/steps.csv");
    write_cdf_csv(stats, out_dir + "/cdf.csv");
    write_nmpc_summary_json(stats, out_dir + "/summary.json");
    std::cout << "wrote " << out_dir << "/steps.csv, cdf.csv, summary.json ("
              << stats.steps.size() << " control steps)\n";
    return kExitOk;
  }

  std::ostringstream heat;
  heat << "control_rate,knots,avg_sqp_iters\n";
  for (double rate : fc.rates) {
    for (int N : fc.horizons) {
      NmpcConfig cfg = fc.base;
      cfg.control_rate = rate;
      cfg.N = N;
      cfg.deterministic = deterministic;
      const NmpcStats stats = run_nmpc(cfg, *model, cost);
      double avg = 0.0;
      for (const auto& rec : stats.steps) avg += rec.sqp_iters;
      if (!stats.steps.empty()) avg /= static_cast<double>(stats.steps.size());
      heat << format9(rate) << ',' << N << ',' << format9(avg) << '\n';
    }
  }
  write_text_file(out_dir + "/heatmap.csv", heat.str());
  std::cout << "wrote " << out_dir << "/heatmap.csv (" << fc.rates.size() * fc.horizons.size()
            << " grid points)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-tridiagonal Schur-complement trajectory optimization toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  bool deterministic = false;
  std::string out_path;
  app.add_option("--seed", seed, "Seed for generated instances");
  app.add_flag("--deterministic", deterministic,
               "Fixed-order reductions, iteration-cap budgeting, zeroed timing columns");
  app.add_option("--out", out_path, "Output path (file or directory by subcommand)");

  auto* solve = app.add_subcommand("solve-qp", "Solve one problem file via Schur complement + PCG");
  std::string problem_path;
  std::string precond = "symstair";
  std::string variant = "sequential";
  double eps = 1e-8;
  int max_iter = 0;
  bool oracle = false;
  solve->add_option("problem", problem_path, "Problem JSON file")->required();
  solve->add_option("--precond", precond, "identity|jacobi|stair|symstair|poly:<order>");
  solve->add_option("--eps", eps, "PCG exit tolerance on eta'");
  solve->add_option("--variant", variant, "sequential|parallel");
  solve->add_option("--max-iter", max_iter, "PCG iteration cap (0 = dimension)");
  solve->add_flag("--oracle", oracle, "Cross-check lambda against the dense KKT solve");

  auto* bench = app.add_subcommand("bench-pcg", "Seeded random-instance PCG benchmark grid");
  std::vector<int> knots_list{32};
  int state_dim = 4;
  int ctrl_dim = 2;
  std::vector<std::string> precond_list{"symstair"};
  std::vector<double> eps_list{1e-4};
  int trials = 10;
  std::string bench_variant = "sequential";
  bench->add_option("--knots", knots_list, "Knot-point counts (lambda block counts)")
      ->delimiter(',');
  bench->add_option("--state-dim", state_dim, "State dimension n");
  bench->add_option("--ctrl-dim", ctrl_dim, "Control dimension m");
  bench->add_option("--precond", precond_list, "Preconditioners to sweep")->delimiter(',');
  bench->add_option("--eps", eps_list, "Exit tolerances to sweep")->delimiter(',');
  bench->add_option("--trials", trials, "Instances per knot count");
  bench->add_option("--variant", bench_variant, "sequential|parallel");

  auto* nmpc = app.add_subcommand("run-nmpc", "Receding-horizon run or control-rate/knots grid");
  std::string nmpc_config;
  nmpc->add_option("config", nmpc_config, "NMPC config JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*solve) {
      return cmd_solve_qp(problem_path, precond, eps, variant, max_iter, oracle, seed,
                          deterministic, out_path);
    }
    if (*bench) {
      return cmd_bench_pcg(knots_list, state_dim, ctrl_dim, precond_list, eps_list, trials,
                           bench_variant, seed, deterministic, out_path);
    }
    if (*nmpc) {
      return cmd_run_nmpc(nmpc_config, deterministic, out_path);
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const PcgBreakdown& e) {
    std::cerr << "solver breakdown: " << e.what() << "\n";
    return kExitBreakdown;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitBreakdown;
  }
  return kExitOk;
}
