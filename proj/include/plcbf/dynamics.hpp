#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "plcbf/common.hpp"

namespace plcbf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Control-affine model: xdot = f(x) + g(x) u.
struct Model {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  Vec input_lower;
  Vec input_upper;
  std::function<Vec(const Vec&)> drift;                 // f(x)
  std::function<Mat(const Vec&)> actuation;             // g(x), state_dim x control_dim
};

inline Vec clamp_control(const Model& m, const Vec& u) {
  return u.cwiseMax(m.input_lower).cwiseMin(m.input_upper);
}

inline Vec derivative(const Model& m, const Vec& x, const Vec& u) {
  if (x.size() != m.state_dim || u.size() != m.control_dim)
    throw ArgumentError(m.name + ": derivative dimension mismatch");
  if (!x.allFinite() || !u.allFinite())
    throw NumericError(m.name + ": non-finite derivative input");
  return m.drift(x) + m.actuation(x) * u;
}

/// Classical RK4 step with the control held constant over [0, dt].
inline Vec step_rk4(const Model& m, const Vec& x, const Vec& u, double dt) {
  if (dt < 0.0) throw ArgumentError("step_rk4: dt must be >= 0");
  if (dt == 0.0) return x;
  const Vec k1 = derivative(m, x, u);
  const Vec k2 = derivative(m, x + 0.5 * dt * k1, u);
  const Vec k3 = derivative(m, x + 0.5 * dt * k2, u);
  const Vec k4 = derivative(m, x + dt * k3, u);
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericError(m.name + ": RK4 step produced non-finite state");
  return out;
}

/// RK4 step for an open-loop input signal u(t), sampled at the stage times.
/// Unlike step_rk4 this integrates the nonautonomous system, so fourth-order
/// convergence holds for smooth u.
inline Vec step_rk4_tv(const Model& m, const Vec& x, const std::function<Vec(double)>& u_of_t,
                       double t, double dt) {
  if (dt < 0.0) throw ArgumentError("step_rk4_tv: dt must be >= 0");
  if (dt == 0.0) return x;
  const Vec k1 = derivative(m, x, u_of_t(t));
  const Vec k2 = derivative(m, x + 0.5 * dt * k1, u_of_t(t + 0.5 * dt));
  const Vec k3 = derivative(m, x + 0.5 * dt * k2, u_of_t(t + 0.5 * dt));
  const Vec k4 = derivative(m, x + dt * k3, u_of_t(t + dt));
  Vec out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!out.allFinite()) throw NumericError(m.name + ": RK4 step produced non-finite state");
  return out;
}

/// Time-stamped state sequence sampled from a closed-loop flow.
/// Samples are on a uniform dt grid; if dt does not divide T the last step is
/// shortened so the final sample lands exactly at T.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  double dt = 0.0;

  std::size_t size() const { return states.size(); }
  const Vec& back() const { return states.back(); }
};

/// Raised when integration leaves the finite range; carries the last finite
/// sample so callers can report where the rollout died.
struct FlowBlowup : NumericError {
  FlowBlowup(std::string msg, double t, Vec x)
      : NumericError(std::move(msg)), time(t), last_state(std::move(x)) {}
  double time;
  Vec last_state;
};

using PolicyFn = std::function<Vec(const Vec&, double)>;

/// Closed-loop flow under zero-order-hold control u_i = clamp(pi(x_i, t_i)).
inline Trajectory flow(const Model& m, const PolicyFn& pi, const Vec& x0, double T, double dt) {
  if (T < 0.0) throw ArgumentError("flow: T must be >= 0");
  if (dt <= 0.0) throw ArgumentError("flow: dt must be > 0");
  if (x0.size() != m.state_dim) throw ArgumentError(m.name + ": flow initial state dimension mismatch");

  Trajectory traj;
  traj.dt = dt;
  const auto n_full = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
  traj.times.reserve(n_full + 2);
  traj.states.reserve(n_full + 2);
  traj.times.push_back(0.0);
  traj.states.push_back(x0);

  Vec x = x0;
  double t = 0.0;
  for (std::size_t i = 0; i < n_full; ++i) {
    const Vec u = clamp_control(m, pi(x, t));
    try {
      x = step_rk4(m, x, u, dt);
    } catch (const NumericError& e) {
      throw FlowBlowup(std::string(e.what()) + " at t=" + std::to_string(t), t, traj.states.back());
    }
    t = static_cast<double>(i + 1) * dt;
    traj.times.push_back(t);
    traj.states.push_back(x);
  }
  if (t < T - 1e-9) {
    const Vec u = clamp_control(m, pi(x, t));
    try {
      x = step_rk4(m, x, u, T - t);
    } catch (const NumericError& e) {
      throw FlowBlowup(std::string(e.what()) + " at t=" + std::to_string(t), t, traj.states.back());
    }
    traj.times.push_back(T);
    traj.states.push_back(x);
  }
  return traj;
}

}  // namespace plcbf
