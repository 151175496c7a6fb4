#pragma once

#include <cmath>

#include "plcbf/dynamics.hpp"

namespace plcbf {

// ---------------------------------------------------------------------------
// Planar double integrator. State (px, py, vx, vy), control (ax, ay).

struct DoubleIntegratorParams {
  double u_max = 1.0;
};

inline Model make_double_integrator4(const DoubleIntegratorParams& p = {}) {
  Model m;
  m.name = "double_integrator4";
  m.state_dim = 4;
  m.control_dim = 2;
  m.input_lower = Vec::Constant(2, -p.u_max);
  m.input_upper = Vec::Constant(2, p.u_max);
  m.drift = [](const Vec& x) {
    Vec dx(4);
    dx << x(2), x(3), 0.0, 0.0;
    return dx;
  };
  m.actuation = [](const Vec&) {
    Mat g = Mat::Zero(4, 2);
    g(2, 0) = 1.0;
    g(3, 1) = 1.0;
    return g;
  };
  return m;
}

// ---------------------------------------------------------------------------
// Dynamic single-track vehicle, 8 states:
//   (px, py, psi, vx, vy, r, delta, omega)
// with a simplified Pacejka lateral force per axle, first-order steering
// actuator, and a lumped driven-wheel speed for rear longitudinal slip.
// Controls: (delta_cmd, drive torque). mu is a runtime parameter; rebuild the
// model to change it.

struct VehicleParams {
  double mass = 1500.0;       // kg
  double inertia_z = 2250.0;  // kg m^2
  double lf = 1.1;            // m, CoG to front axle
  double lr = 1.6;            // m, CoG to rear axle
  double mu = 1.0;            // tire-road friction coefficient
  double pacejka_b = 10.0;
  double pacejka_c = 1.9;
  double pacejka_bx = 15.0;
  double pacejka_cx = 1.65;
  double steer_tau = 0.1;     // s, steering actuator time constant
  double steer_max = 0.5;     // rad
  double wheel_inertia = 2.5; // kg m^2, lumped rear
  double wheel_radius = 0.3;  // m
  double torque_max = 2000.0; // N m
  double v_eps = 0.5;         // m/s, slip regularization floor
  double gravity = 9.81;
};

inline Model make_vehicle8(const VehicleParams& p = {}) {
  Model m;
  m.name = "vehicle8";
  m.state_dim = 8;
  m.control_dim = 2;
  m.input_lower = Vec(2);
  m.input_upper = Vec(2);
  m.input_lower << -p.steer_max, -p.torque_max;
  m.input_upper << p.steer_max, p.torque_max;

  const double wheelbase = p.lf + p.lr;
  const double load_front = p.mass * p.gravity * p.lr / wheelbase;
  const double load_rear = p.mass * p.gravity * p.lf / wheelbase;

  m.drift = [p, load_front, load_rear](const Vec& x) {
    const double psi = x(2), vx = x(3), vy = x(4), r = x(5), delta = x(6), omega = x(7);
    const double vx_reg = std::max(vx, p.v_eps);

    const double slip_f = std::atan2(vy + p.lf * r, vx_reg) - delta;
    const double slip_r = std::atan2(vy - p.lr * r, vx_reg);
    const double fyf = -p.mu * load_front * std::sin(p.pacejka_c * std::atan(p.pacejka_b * slip_f));
    const double fyr = -p.mu * load_rear * std::sin(p.pacejka_c * std::atan(p.pacejka_b * slip_r));

    const double slip_ratio = (p.wheel_radius * omega - vx) / vx_reg;
    const double fxr = p.mu * load_rear * std::sin(p.pacejka_cx * std::atan(p.pacejka_bx * slip_ratio));

    Vec dx(8);
    dx(0) = vx * std::cos(psi) - vy * std::sin(psi);
    dx(1) = vx * std::sin(psi) + vy * std::cos(psi);
    dx(2) = r;
    dx(3) = (fxr - fyf * std::sin(delta)) / p.mass + vy * r;
    dx(4) = (fyf * std::cos(delta) + fyr) / p.mass - vx * r;
    dx(5) = (p.lf * fyf * std::cos(delta) - p.lr * fyr) / p.inertia_z;
    dx(6) = -delta / p.steer_tau;
    dx(7) = -p.wheel_radius * fxr / p.wheel_inertia;
    return dx;
  };
  m.actuation = [p](const Vec&) {
    Mat g = Mat::Zero(8, 2);
    g(6, 0) = 1.0 / p.steer_tau;
    g(7, 1) = 1.0 / p.wheel_inertia;
    return g;
  };
  return m;
}

// ---------------------------------------------------------------------------
// 12-state quadrotor: position, velocity (world frame, z up), Z-Y-X Euler
// angles (roll, pitch, yaw), body rates. Controls: collective thrust along
// body z and three body torques. Integration errors out if |pitch| > 85 deg.

struct QuadrotorParams {
  double mass = 1.0;
  double gravity = 9.81;
  double jx = 0.01;
  double jy = 0.01;
  double jz = 0.02;
  double thrust_max_factor = 2.0;  // max thrust = factor * m * g
  double torque_max = 0.5;
  double pitch_guard_rad = 85.0 * M_PI / 180.0;
};

inline Model make_quadrotor12(const QuadrotorParams& p = {}) {
  Model m;
  m.name = "quadrotor12";
  m.state_dim = 12;
  m.control_dim = 4;
  m.input_lower = Vec(4);
  m.input_upper = Vec(4);
  m.input_lower << 0.0, -p.torque_max, -p.torque_max, -p.torque_max;
  m.input_upper << p.thrust_max_factor * p.mass * p.gravity, p.torque_max, p.torque_max, p.torque_max;

  m.drift = [p](const Vec& x) {
    const double roll = x(6), pitch = x(7);
    if (std::abs(pitch) > p.pitch_guard_rad)
      throw NumericError("quadrotor12: pitch outside Euler guard");
    const double wx = x(9), wy = x(10), wz = x(11);
    const double sr = std::sin(roll), cr = std::cos(roll);
    const double tp = std::tan(pitch), cp = std::cos(pitch);

    Vec dx(12);
    dx.segment<3>(0) = x.segment<3>(3);
    dx(3) = 0.0;
    dx(4) = 0.0;
    dx(5) = -p.gravity;
    dx(6) = wx + sr * tp * wy + cr * tp * wz;
    dx(7) = cr * wy - sr * wz;
    dx(8) = sr / cp * wy + cr / cp * wz;
    dx(9) = (p.jy - p.jz) / p.jx * wy * wz;
    dx(10) = (p.jz - p.jx) / p.jy * wx * wz;
    dx(11) = (p.jx - p.jy) / p.jz * wx * wy;
    return dx;
  };
  m.actuation = [p](const Vec& x) {
    const double roll = x(6), pitch = x(7), yaw = x(8);
    const double sr = std::sin(roll), cr = std::cos(roll);
    const double sp = std::sin(pitch), cp = std::cos(pitch);
    const double sy = std::sin(yaw), cy = std::cos(yaw);
    // Body z axis in world coordinates (R = Rz(yaw) Ry(pitch) Rx(roll)).
    Mat g = Mat::Zero(12, 4);
    g(3, 0) = (cr * sp * cy + sr * sy) / p.mass;
    g(4, 0) = (cr * sp * sy - sr * cy) / p.mass;
    g(5, 0) = (cr * cp) / p.mass;
    g(9, 1) = 1.0 / p.jx;
    g(10, 2) = 1.0 / p.jy;
    g(11, 3) = 1.0 / p.jz;
    return g;
  };
  return m;
}

}  // namespace plcbf
