#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "trajopt/trajectory.hpp"

namespace trajopt {

/// Discrete-time dynamics x+ = step(x, u, h) with analytic Jacobians
/// A = d step/dx, B = d step/du.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual std::string name() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                               double h) const = 0;
  virtual void jacobians(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double h,
                         Eigen::MatrixXd& A, Eigen::MatrixXd& B) const = 0;
};

std::unique_ptr<DynamicsModel> double_integrator();
std::unique_ptr<DynamicsModel> pendulum();
std::unique_ptr<DynamicsModel> cartpole();

/// Model lookup by config name: "double_integrator" | "pendulum" | "cartpole".
std::unique_ptr<DynamicsModel> make_model(const std::string& name);

/// Per-knot quadratic tracking cost with 1/2-scaled quadratic forms:
///   l(x_k, u_k) = 1/2 (x_k - g_k)' Wx (x_k - g_k) + 1/2 u_k' Wu u_k
///   l_f(x_N)    = 1/2 (x_N - g_N)' WN (x_N - g_N)
/// yielding Q_k = Wx, R_k = Wu, q_k = Wx (x_k - g_k), r_k = Wu u_k.
struct CostModel {
  Eigen::MatrixXd Wx;
  Eigen::MatrixXd Wu;
  Eigen::MatrixXd WN;
  std::vector<Eigen::VectorXd> goals;  // size 1 (broadcast to every knot) or N+1

  const Eigen::VectorXd& goal(int knot) const {
    return goals.size() == 1 ? goals.front() : goals.at(static_cast<std::size_t>(knot));
  }
};

CostModel quadratic_tracking_cost(const Eigen::MatrixXd& Wx, const Eigen::MatrixXd& Wu,
                                  const Eigen::MatrixXd& WN, const Eigen::VectorXd& goal);

double eval_cost(const CostModel& cost, const std::vector<Eigen::VectorXd>& X,
                 const std::vector<Eigen::VectorXd>& U);

inline double eval_cost(const CostModel& cost, const Trajectory& traj) {
  return eval_cost(cost, traj.X, traj.U);
}

/// Simulates the model forward from x0 under the given controls.
Trajectory rollout(const DynamicsModel& model, const Eigen::VectorXd& x0,
                   const std::vector<Eigen::VectorXd>& controls, double h);

}  // namespace trajopt
