#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "trajopt/kkt.hpp"
#include "trajopt/nmpc.hpp"
#include "trajopt/pcg.hpp"

namespace trajopt {

/// JSON problem document. model == "explicit" carries per-knot Q,R,q,r,A,B,e
/// arrays (row-major nested lists); a named model carries a cost recipe and is
/// linearized around a seeded nominal rollout from x_s.
struct ProblemFile {
  int n = 0;
  int m = 0;
  int N = 0;
  double h = 0.01;
  std::string model = "explicit";
  std::uint64_t seed = 0;
  Eigen::VectorXd x_s;
  Eigen::VectorXd x0;  // empty means zero
  // Named-model cost recipe (scalar weights times identity).
  double wx = 1.0;
  double wu = 0.1;
  double wn = 10.0;
  Eigen::VectorXd goal;  // empty means zero
  // Explicit per-knot data (N+1 knots; the last holds Q, q only).
  std::vector<KnotData> knots;
};

/// Thrown for malformed input files; the message carries line/column.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ProblemFile load_problem(const std::string& path);
std::string problem_to_json(const ProblemFile& pf);
void save_problem(const ProblemFile& pf, const std::string& path);

KKTSystem problem_to_kkt(const ProblemFile& pf);
ProblemFile problem_from_kkt(const KKTSystem& kkt, std::uint64_t seed);

/// Benchmark CSV row schema shared by solve-qp and bench-pcg.
std::string result_row_header();
std::string result_row(const std::string& experiment, int knot_points, int n, int m,
                       const std::string& preconditioner, double epsilon,
                       const std::string& variant, const SolveReport& report,
                       std::uint64_t seed, bool zero_times);

void write_text_file(const std::string& path, const std::string& content);

/// steps.csv: step,time_s,solve_us,sqp_iters,pcg_iters_total,tracking_err
void write_steps_csv(const NmpcStats& stats, const std::string& path);
/// cdf.csv: solve_us,cumulative_fraction (sorted ascending, monotone).
void write_cdf_csv(const NmpcStats& stats, const std::string& path);
/// Aggregate timing/tracking summary.
void write_nmpc_summary_json(const NmpcStats& stats, const std::string& path);

}  // namespace trajopt
