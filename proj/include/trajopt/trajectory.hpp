#pragma once

#include <Eigen/Dense>
#include <vector>

namespace trajopt {

/// Nominal trajectory: N+1 states, N controls, timestep h, plus the Lagrange
/// multipliers of the last linear solve for warm starting.
struct Trajectory {
  double h = 0.01;
  std::vector<Eigen::VectorXd> X;  // N+1 states
  std::vector<Eigen::VectorXd> U;  // N controls
  Eigen::VectorXd lambda;          // (N+1)*n; size 0 means "start from zero"

  int horizon() const { return static_cast<int>(U.size()); }
};

}  // namespace trajopt
