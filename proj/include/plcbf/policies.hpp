#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "plcbf/dynamics.hpp"
#include "plcbf/models.hpp"

namespace plcbf {

/// Deterministic state-feedback policy. rank 0 is the nominal policy;
/// larger ranks are more invasive fallbacks. Actions are clamped to the
/// input box baked in at construction.
struct Policy {
  std::string id;
  int rank = 0;
  PolicyFn raw;
  Vec clamp_lo;
  Vec clamp_hi;

  Vec action(const Vec& x, double t) const {
    return raw(x, t).cwiseMax(clamp_lo).cwiseMin(clamp_hi);
  }

  PolicyFn as_fn() const {
    return [fn = raw, lo = clamp_lo, hi = clamp_hi](const Vec& x, double t) {
      return Vec(fn(x, t).cwiseMax(lo).cwiseMin(hi));
    };
  }
};

inline Policy make_policy(const Model& m, std::string id, int rank, PolicyFn fn) {
  Policy p;
  p.id = std::move(id);
  p.rank = rank;
  p.raw = std::move(fn);
  p.clamp_lo = m.input_lower;
  p.clamp_hi = m.input_upper;
  return p;
}

/// Ordered fallback library. Always contains the nominal policy at rank 0.
struct PolicyLibrary {
  std::vector<Policy> policies;

  const Policy& nominal() const { return policies.front(); }
  std::size_t size() const { return policies.size(); }
  const Policy& operator[](std::size_t i) const { return policies[i]; }
};

inline PolicyLibrary make_library(std::vector<Policy> policies) {
  if (policies.empty()) throw ConfigError("policy library is empty");
  std::stable_sort(policies.begin(), policies.end(),
                   [](const Policy& a, const Policy& b) { return a.rank < b.rank; });
  if (policies.front().rank != 0)
    throw ConfigError("policy library must contain the nominal policy at rank 0");
  std::set<std::string> ids;
  std::set<int> ranks;
  for (const auto& p : policies) {
    if (!ids.insert(p.id).second) throw ConfigError("duplicate policy id: " + p.id);
    if (!ranks.insert(p.rank).second)
      throw ConfigError("duplicate policy rank: " + std::to_string(p.rank));
  }
  PolicyLibrary lib;
  lib.policies = std::move(policies);
  return lib;
}

// ---------------------------------------------------------------------------
// Double integrator

/// Saturated PD goal tracking: steers toward the goal at most v_cruise.
inline Policy di_pd_goal(const Model& m, const Vec& goal, double kp = 1.0, double kd = 2.0,
                         double v_cruise = 2.0, std::string id = "nominal", int rank = 0) {
  return make_policy(m, std::move(id), rank, [goal, kp, kd, v_cruise](const Vec& x, double) {
    const Vec to_goal = goal - x.head<2>();
    const double dist = to_goal.norm();
    Vec v_des = Vec::Zero(2);
    if (dist > 1e-12) v_des = to_goal / dist * std::min(v_cruise, kp * dist);
    return Vec(kd * (v_des - x.segment<2>(2)));
  });
}

/// Full deceleration opposing the current velocity.
inline Policy di_stop(const Model& m, double k_v = 10.0, std::string id = "stop", int rank = 1) {
  return make_policy(m, std::move(id), rank,
                     [k_v](const Vec& x, double) { return Vec(-k_v * x.segment<2>(2)); });
}

/// Maximal lateral acceleration in +y (sign=+1) or -y (sign=-1).
inline Policy di_evade(const Model& m, double sign, std::string id, int rank) {
  const double a = sign * m.input_upper(1);
  return make_policy(m, std::move(id), rank, [a](const Vec&, double) {
    Vec u(2);
    u << 0.0, a;
    return u;
  });
}

inline PolicyLibrary di_default_library(const Model& m, const Vec& goal) {
  return make_library({di_pd_goal(m, goal), di_stop(m), di_evade(m, +1.0, "evade_up", 2),
                       di_evade(m, -1.0, "evade_down", 3)});
}

// ---------------------------------------------------------------------------
// Vehicle (8-state single track)
// state: (px, py, psi, vx, vy, r, delta, omega)

struct VehicleGains {
  double k_y = 0.15;
  double k_psi = 1.2;
  double k_r = 0.3;
  double k_v = 800.0;  // torque per m/s of speed error
};

/// Lane keeping at y_ref plus cruise speed control.
inline Policy vehicle_lane_keep(const Model& m, double y_ref, double v_ref,
                                const VehicleGains& g = {}, std::string id = "nominal",
                                int rank = 0) {
  return make_policy(m, std::move(id), rank, [y_ref, v_ref, g](const Vec& x, double) {
    Vec u(2);
    u(0) = -g.k_y * (x(1) - y_ref) - g.k_psi * x(2) - g.k_r * x(5);
    u(1) = g.k_v * (v_ref - x(3));
    return u;
  });
}

/// Straighten the wheels and brake to standstill.
inline Policy vehicle_stop(const Model& m, double k_brake = 400.0, std::string id = "stop",
                           int rank = 1) {
  return make_policy(m, std::move(id), rank, [k_brake](const Vec& x, double) {
    Vec u(2);
    u(0) = 0.0;
    u(1) = -k_brake * x(3);
    return u;
  });
}

/// Maximal-steer swerve with zero drive torque.
inline Policy vehicle_swerve(const Model& m, double sign, std::string id, int rank) {
  const double steer = sign * m.input_upper(0);
  return make_policy(m, std::move(id), rank, [steer](const Vec&, double) {
    Vec u(2);
    u << steer, 0.0;
    return u;
  });
}

// ---------------------------------------------------------------------------
// Quadrotor (12-state)
// state: (p, v, roll/pitch/yaw, body rates)

struct QuadGains {
  double kp_pos = 1.2;
  double kd_pos = 1.8;
  double kp_att = 40.0;
  double kd_att = 8.0;
  double a_max = 6.0;  // per-axis desired-acceleration clamp, m/s^2
};

namespace detail {

/// Cascade from a desired world acceleration to (thrust, torques).
inline Vec quad_accel_cascade(const Vec& x, Vec a_des, const QuadrotorParams& qp,
                              const QuadGains& g) {
  a_des = a_des.cwiseMax(-g.a_max).cwiseMin(g.a_max);
  Vec f_world(3);
  f_world << a_des(0), a_des(1), a_des(2) + qp.gravity;
  f_world *= qp.mass;
  const double f_norm = std::max(f_world.norm(), 1e-6);
  const Vec dir = f_world / f_norm;

  // Desired roll/pitch for the current yaw (Z-Y-X Euler).
  const double yaw = x(8);
  const double dx = std::cos(yaw) * dir(0) + std::sin(yaw) * dir(1);
  const double dy = -std::sin(yaw) * dir(0) + std::cos(yaw) * dir(1);
  const double dz = dir(2);
  const double roll_des = -std::asin(std::clamp(dy, -0.9, 0.9));
  const double pitch_des = std::atan2(dx, std::max(dz, 0.1));

  Vec u(4);
  u(0) = f_norm;
  u(1) = qp.jx * (g.kp_att * (roll_des - x(6)) - g.kd_att * x(9));
  u(2) = qp.jy * (g.kp_att * (pitch_des - x(7)) - g.kd_att * x(10));
  u(3) = qp.jz * (g.kp_att * (0.0 - x(8)) - g.kd_att * x(11));
  return u;
}

}  // namespace detail

/// Waypoint PD with hover-thrust feedforward.
inline Policy quad_waypoint(const Model& m, const Vec& waypoint, const QuadrotorParams& qp = {},
                            const QuadGains& g = {}, std::string id = "nominal", int rank = 0) {
  return make_policy(m, std::move(id), rank, [waypoint, qp, g](const Vec& x, double) {
    const Vec a_des = g.kp_pos * (waypoint - x.head<3>()) - g.kd_pos * x.segment<3>(3);
    return detail::quad_accel_cascade(x, a_des, qp, g);
  });
}

/// Brake to hover in place.
inline Policy quad_stop(const Model& m, const QuadrotorParams& qp = {}, const QuadGains& g = {},
                        std::string id = "stop", int rank = 1) {
  return make_policy(m, std::move(id), rank, [qp, g](const Vec& x, double) {
    const Vec a_des = -2.0 * g.kd_pos * x.segment<3>(3);
    return detail::quad_accel_cascade(x, a_des, qp, g);
  });
}

/// Evasive climb: brake horizontally, accelerate upward.
inline Policy quad_climb(const Model& m, double a_up = 5.0, const QuadrotorParams& qp = {},
                         const QuadGains& g = {}, std::string id = "climb", int rank = 2) {
  return make_policy(m, std::move(id), rank, [a_up, qp, g](const Vec& x, double) {
    Vec a_des(3);
    a_des << -g.kd_pos * x(3), -g.kd_pos * x(4), a_up;
    return detail::quad_accel_cascade(x, a_des, qp, g);
  });
}

/// Evasive lateral dodge in +y or -y at fixed altitude.
inline Policy quad_dodge(const Model& m, double sign, double a_lat = 5.0,
                         const QuadrotorParams& qp = {}, const QuadGains& g = {},
                         std::string id = "dodge", int rank = 3) {
  return make_policy(m, std::move(id), rank, [sign, a_lat, qp, g](const Vec& x, double) {
    Vec a_des(3);
    a_des << -g.kd_pos * x(3), sign * a_lat, -g.kd_pos * x(5);
    return detail::quad_accel_cascade(x, a_des, qp, g);
  });
}

}  // namespace plcbf
