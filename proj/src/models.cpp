#include "trajopt/models.hpp"

#include <cmath>
#include <stdexcept>

namespace trajopt {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// pos+ = pos + h*vel, vel+ = vel + h*u.
class DoubleIntegrator final : public DynamicsModel {
 public:
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  std::string name() const override { return "double_integrator"; }

  VectorXd step(const VectorXd& x, const VectorXd& u, double h) const override {
    VectorXd next(2);
    next[0] = x[0] + h * x[1];
    next[1] = x[1] + h * u[0];
    return next;
  }

  void jacobians(const VectorXd&, const VectorXd&, double h, MatrixXd& A,
                 MatrixXd& B) const override {
    A = MatrixXd::Identity(2, 2);
    A(0, 1) = h;
    B = MatrixXd::Zero(2, 1);
    B(1, 0) = h;
  }
};

// Frictionless point-mass pendulum, theta = 0 hanging down:
//   theta_dd = (u - m g l sin(theta)) / (m l^2)
class Pendulum final : public DynamicsModel {
 public:
  int state_dim() const override { return 2; }
  int control_dim() const override { return 1; }
  std::string name() const override { return "pendulum"; }

  VectorXd step(const VectorXd& x, const VectorXd& u, double h) const override {
    VectorXd next(2);
    next[0] = x[0] + h * x[1];
    next[1] = x[1] + h * (u[0] - kMass * kGravity * kLength * std::sin(x[0])) / (kMass * kLength * kLength);
    return next;
  }

  void jacobians(const VectorXd& x, const VectorXd&, double h, MatrixXd& A,
                 MatrixXd& B) const override {
    A = MatrixXd::Identity(2, 2);
    A(0, 1) = h;
    A(1, 0) = -h * kGravity * std::cos(x[0]) / kLength;
    B = MatrixXd::Zero(2, 1);
    B(1, 0) = h / (kMass * kLength * kLength);
  }

 private:
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kGravity = 9.81;
};

// Cart-pole with the pole angle measured from upright (theta = 0 is the
// unstable equilibrium). State [p, theta, pdot, thetadot], control is the
// horizontal force on the cart.
class Cartpole final : public DynamicsModel {
 public:
  int state_dim() const override { return 4; }
  int control_dim() const override { return 1; }
  std::string name() const override { return "cartpole"; }

  VectorXd step(const VectorXd& x, const VectorXd& u, double h) const override {
    double xdd, tdd;
    accel(x, u[0], xdd, tdd);
    VectorXd next(4);
    next[0] = x[0] + h * x[2];
    next[1] = x[1] + h * x[3];
    next[2] = x[2] + h * xdd;
    next[3] = x[3] + h * tdd;
    return next;
  }

  void jacobians(const VectorXd& x, const VectorXd& u, double h, MatrixXd& A,
                 MatrixXd& B) const override {
    const double theta = x[1];
    const double td = x[3];
    const double f = u[0];
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double total = kMassCart + kMassPole;

    const double temp = (f + kMassPole * kLength * td * td * s) / total;
    const double num = kGravity * s - c * temp;
    const double den = kLength * (4.0 / 3.0 - kMassPole * c * c / total);
    const double tdd = num / den;

    const double dtemp_dtheta = kMassPole * kLength * td * td * c / total;
    const double dtemp_dtd = 2.0 * kMassPole * kLength * td * s / total;
    const double dtemp_df = 1.0 / total;

    const double dnum_dtheta = kGravity * c + s * temp - c * dtemp_dtheta;
    const double dnum_dtd = -c * dtemp_dtd;
    const double dnum_df = -c * dtemp_df;
    const double dden_dtheta = 2.0 * kLength * kMassPole * c * s / total;

    const double dtdd_dtheta = (dnum_dtheta * den - num * dden_dtheta) / (den * den);
    const double dtdd_dtd = dnum_dtd / den;
    const double dtdd_df = dnum_df / den;

    const double scale = kMassPole * kLength / total;
    const double dxdd_dtheta = dtemp_dtheta - scale * (dtdd_dtheta * c - tdd * s);
    const double dxdd_dtd = dtemp_dtd - scale * c * dtdd_dtd;
    const double dxdd_df = dtemp_df - scale * c * dtdd_df;

    A = MatrixXd::Identity(4, 4);
    A(0, 2) = h;
    A(1, 3) = h;
    A(2, 1) = h * dxdd_dtheta;
    A(2, 3) = h * dxdd_dtd;
    A(3, 1) = h * dtdd_dtheta;
    A(3, 3) = 1.0 + h * dtdd_dtd;

    B = MatrixXd::Zero(4, 1);
    B(2, 0) = h * dxdd_df;
    B(3, 0) = h * dtdd_df;
  }

 private:
  void accel(const VectorXd& x, double f, double& xdd, double& tdd) const {
    const double s = std::sin(x[1]);
    const double c = std::cos(x[1]);
    const double total = kMassCart + kMassPole;
    const double temp = (f + kMassPole * kLength * x[3] * x[3] * s) / total;
    tdd = (kGravity * s - c * temp) / (kLength * (4.0 / 3.0 - kMassPole * c * c / total));
    xdd = temp - kMassPole * kLength * tdd * c / total;
  }

  static constexpr double kMassCart = 1.0;
  static constexpr double kMassPole = 0.1;
  static constexpr double kLength = 0.5;
  static constexpr double kGravity = 9.81;
};

}  // namespace

std::unique_ptr<DynamicsModel> double_integrator() { return std::make_unique<DoubleIntegrator>(); }
std::unique_ptr<DynamicsModel> pendulum() { return std::make_unique<Pendulum>(); }
std::unique_ptr<DynamicsModel> cartpole() { return std::make_unique<Cartpole>(); }

std::unique_ptr<DynamicsModel> make_model(const std::string& name) {
  if (name == "double_integrator") return double_integrator();
  if (name == "pendulum") return pendulum();
  if (name == "cartpole") return cartpole();
  throw std::invalid_argument("unknown model \"" + name +
                              "\" (expected double_integrator, pendulum, or cartpole)");
}

CostModel quadratic_tracking_cost(const Eigen::MatrixXd& Wx, const Eigen::MatrixXd& Wu,
                                  const Eigen::MatrixXd& WN, const Eigen::VectorXd& goal) {
  CostModel cost;
  cost.Wx = Wx;
  cost.Wu = Wu;
  cost.WN = WN;
  cost.goals = {goal};
  return cost;
}

double eval_cost(const CostModel& cost, const std::vector<Eigen::VectorXd>& X,
                 const std::vector<Eigen::VectorXd>& U) {
  if (X.size() != U.size() + 1) {
    throw std::invalid_argument("eval_cost: need N+1 states and N controls, got " +
                                std::to_string(X.size()) + " states and " +
                                std::to_string(U.size()) + " controls");
  }
  const int N = static_cast<int>(U.size());
  double total = 0.0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXd dx = X[k] - cost.goal(k);
    total += 0.5 * dx.dot(cost.Wx * dx) + 0.5 * U[k].dot(cost.Wu * U[k]);
  }
  const Eigen::VectorXd dxN = X[N] - cost.goal(N);
  total += 0.5 * dxN.dot(cost.WN * dxN);
  return total;
}

Trajectory rollout(const DynamicsModel& model, const Eigen::VectorXd& x0,
                   const std::vector<Eigen::VectorXd>& controls, double h) {
  Trajectory traj;
  traj.h = h;
  traj.U = controls;
  traj.X.reserve(controls.size() + 1);
  traj.X.push_back(x0);
  for (const auto& u : controls) {
    traj.X.push_back(model.step(traj.X.back(), u, h));
  }
  return traj;
}

}  // namespace trajopt
