#include "trajopt/problem_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trajopt/format.hpp"
#include "trajopt/models.hpp"
#include "trajopt/random_problem.hpp"

namespace trajopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

MatrixXd matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw InputError("problem file: " + what + " must be a nested list (row-major)");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw InputError("problem file: ragged rows in " + what);
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = j[i][c].get<double>();
  }
  return M;
}

VectorXd vector_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) {
    throw InputError("problem file: " + what + " must be a list");
  }
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1;
  int col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError("cannot open problem file: " + path);
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw InputError("malformed JSON in " + path + " at line " + std::to_string(line) +
                     ", column " + std::to_string(col) + ": " + e.what());
  }

  try {
    ProblemFile pf;
    pf.n = doc.at("n").get<int>();
    pf.m = doc.at("m").get<int>();
    pf.N = doc.at("N").get<int>();
    pf.h = doc.value("h", 0.01);
    pf.model = doc.value("model", std::string("explicit"));
    pf.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("x_s")) pf.x_s = vector_from_json(doc["x_s"], "x_s");
    if (doc.contains("x0")) pf.x0 = vector_from_json(doc["x0"], "x0");
    if (doc.contains("cost")) {
      const json& c = doc["cost"];
      pf.wx = c.value("wx", 1.0);
      pf.wu = c.value("wu", 0.1);
      pf.wn = c.value("wn", 10.0);
      if (c.contains("goal")) pf.goal = vector_from_json(c["goal"], "cost.goal");
    }
    if (doc.contains("knots")) {
      const json& knots = doc["knots"];
      pf.knots.resize(knots.size());
      for (std::size_t k = 0; k < knots.size(); ++k) {
        const json& kj = knots[k];
        KnotData& kd = pf.knots[k];
        kd.Q = matrix_from_json(kj.at("Q"), "knots.Q");
        kd.q = vector_from_json(kj.at("q"), "knots.q");
        if (kj.contains("R")) {
          kd.R = matrix_from_json(kj["R"], "knots.R");
          kd.r = vector_from_json(kj.at("r"), "knots.r");
          kd.A = matrix_from_json(kj.at("A"), "knots.A");
          kd.B = matrix_from_json(kj.at("B"), "knots.B");
          kd.e = vector_from_json(kj.at("e"), "knots.e");
        }
      }
    }
    if (pf.n < 1 || pf.m < 0 || pf.N < 0) {
      throw InputError("problem file: invalid dimensions n=" + std::to_string(pf.n) +
                       " m=" + std::to_string(pf.m) + " N=" + std::to_string(pf.N));
    }
    if (pf.model == "explicit" && static_cast<int>(pf.knots.size()) != pf.N + 1) {
      throw InputError("problem file: explicit model needs N+1 knots, got " +
                       std::to_string(pf.knots.size()) + " for N = " + std::to_string(pf.N));
    }
    return pf;
  } catch (const json::exception& e) {
    throw InputError("problem file " + path + ": " + e.what());
  }
}

std::string problem_to_json(const ProblemFile& pf) {
  json doc;
  doc["n"] = pf.n;
  doc["m"] = pf.m;
  doc["N"] = pf.N;
  doc["h"] = pf.h;
  doc["model"] = pf.model;
  doc["seed"] = pf.seed;
  if (pf.x_s.size() > 0) doc["x_s"] = vector_to_json(pf.x_s);
  if (pf.x0.size() > 0) doc["x0"] = vector_to_json(pf.x0);
  if (pf.model != "explicit") {
    doc["cost"] = {{"wx", pf.wx}, {"wu", pf.wu}, {"wn", pf.wn}};
    if (pf.goal.size() > 0) doc["cost"]["goal"] = vector_to_json(pf.goal);
  }
  if (!pf.knots.empty()) {
    json knots = json::array();
    for (std::size_t k = 0; k < pf.knots.size(); ++k) {
      const KnotData& kd = pf.knots[k];
      json kj;
      kj["Q"] = matrix_to_json(kd.Q);
      kj["q"] = vector_to_json(kd.q);
      if (kd.R.size() > 0) {
        kj["R"] = matrix_to_json(kd.R);
        kj["r"] = vector_to_json(kd.r);
        kj["A"] = matrix_to_json(kd.A);
        kj["B"] = matrix_to_json(kd.B);
        kj["e"] = vector_to_json(kd.e);
      }
      knots.push_back(std::move(kj));
    }
    doc["knots"] = std::move(knots);
  }
  return doc.dump(2) + "\n";
}

void save_problem(const ProblemFile& pf, const std::string& path) {
  write_text_file(path, problem_to_json(pf));
}

KKTSystem problem_to_kkt(const ProblemFile& pf) {
  if (pf.model == "explicit") {
    KKTSystem kkt;
    kkt.N = pf.N;
    kkt.n = pf.n;
    kkt.m = pf.m;
    kkt.knots = pf.knots;
    kkt.x_s = pf.x_s.size() > 0 ? pf.x_s : VectorXd::Zero(pf.n);
    kkt.x0 = pf.x0.size() > 0 ? pf.x0 : VectorXd::Zero(pf.n);
    return kkt;
  }

  auto model = make_model(pf.model);
  if (model->state_dim() != pf.n || model->control_dim() != pf.m) {
    throw InputError("problem file: model " + pf.model + " has dims n=" +
                     std::to_string(model->state_dim()) + " m=" +
                     std::to_string(model->control_dim()) + ", file says n=" +
                     std::to_string(pf.n) + " m=" + std::to_string(pf.m));
  }
  const VectorXd x_start = pf.x_s.size() > 0 ? pf.x_s : VectorXd::Zero(pf.n);
  const VectorXd goal = pf.goal.size() > 0 ? pf.goal : VectorXd::Zero(pf.n);
  CostModel cost = quadratic_tracking_cost(pf.wx * MatrixXd::Identity(pf.n, pf.n),
                                           pf.wu * MatrixXd::Identity(pf.m, pf.m),
                                           pf.wn * MatrixXd::Identity(pf.n, pf.n), goal);

  // Nominal trajectory: rollout from x_s; seed 0 uses zero controls, any other
  // seed draws controls uniform in [-0.1, 0.1].
  std::vector<VectorXd> controls(pf.N, VectorXd::Zero(pf.m));
  if (pf.seed != 0) {
    UniformRng rng(pf.seed);
    for (auto& u : controls) u = rng.vector(pf.m, -0.1, 0.1);
  }
  const Trajectory traj = rollout(*model, x_start, controls, pf.h);
  return assemble_kkt(traj, *model, cost, x_start);
}

ProblemFile problem_from_kkt(const KKTSystem& kkt, std::uint64_t seed) {
  ProblemFile pf;
  pf.n = kkt.n;
  pf.m = kkt.m;
  pf.N = kkt.N;
  pf.model = "explicit";
  pf.seed = seed;
  pf.x_s = kkt.x_s;
  pf.x0 = kkt.x0;
  pf.knots = kkt.knots;
  return pf;
}

std::string result_row_header() {
  return "experiment,N,n,m,preconditioner,epsilon,variant,iterations,exit_eta,converged,"
         "wall_time_us,seed";
}

std::string result_row(const std::string& experiment, int knot_points, int n, int m,
                       const std::string& preconditioner, double epsilon,
                       const std::string& variant, const SolveReport& report, std::uint64_t seed,
                       bool zero_times) {
  std::ostringstream out;
  const long long wall_us = zero_times ? 0 : static_cast<long long>(report.wall_time * 1e6);
  out << experiment << ',' << knot_points << ',' << n << ',' << m << ',' << preconditioner << ','
      << format9(epsilon) << ',' << variant << ',' << report.iterations << ','
      << format9(report.exit_eta) << ',' << (report.converged ? "true" : "false") << ','
      << wall_us << ',' << seed;
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << content;
}

void write_steps_csv(const NmpcStats& stats, const std::string& path) {
  std::ostringstream out;
  out << "step,time_s,solve_us,sqp_iters,pcg_iters_total,tracking_err\n";
  for (const auto& rec : stats.steps) {
    const double solve_us = stats.deterministic ? 0.0 : rec.solve_us;
    out << rec.step << ',' << format9(rec.time_s) << ',' << format9(solve_us) << ','
        << rec.sqp_iters << ',' << rec.pcg_iters_total << ',' << format9(rec.tracking_err)
        << '\n';
  }
  write_text_file(path, out.str());
}

void write_cdf_csv(const NmpcStats& stats, const std::string& path) {
  std::vector<double> times;
  times.reserve(stats.steps.size());
  for (const auto& rec : stats.steps) {
    times.push_back(stats.deterministic ? 0.0 : rec.solve_us);
  }
  std::sort(times.begin(), times.end());
  std::ostringstream out;
  out << "solve_us,cumulative_fraction\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double frac = static_cast<double>(i + 1) / static_cast<double>(times.size());
    out << format9(times[i]) << ',' << format9(frac) << '\n';
  }
  write_text_file(path, out.str());
}

void write_nmpc_summary_json(const NmpcStats& stats, const std::string& path) {
  json doc;
  doc["steps"] = stats.steps.size();
  doc["mean_solve_us"] = stats.deterministic ? 0.0 : stats.mean_solve_us;
  doc["median_solve_us"] = stats.deterministic ? 0.0 : stats.median_solve_us;
  doc["p95_solve_us"] = stats.deterministic ? 0.0 : stats.p95_solve_us;
  doc["max_solve_us"] = stats.deterministic ? 0.0 : stats.max_solve_us;
  doc["overruns"] = stats.deterministic ? 0 : stats.overruns;
  doc["segment_errors"] = stats.segment_errors;
  double mean_track = 0.0;
  for (const auto& rec : stats.steps) mean_track += rec.tracking_err;
  if (!stats.steps.empty()) mean_track /= static_cast<double>(stats.steps.size());
  doc["mean_tracking_err"] = mean_track;
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace trajopt
