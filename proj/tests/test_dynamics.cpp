#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "plcbf/models.hpp"
#include "plcbf/policies.hpp"
#include "oracles.hpp"

using namespace plcbf;

namespace {

Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Model blowup_model() {
  // Scalar x' = x^2 escapes to infinity at t = 1/x0.
  Model m;
  m.name = "blowup";
  m.state_dim = 1;
  m.control_dim = 1;
  m.input_lower = Vec::Constant(1, -1.0);
  m.input_upper = Vec::Constant(1, 1.0);
  m.drift = [](const Vec& x) { return Vec(x.array().square()); };
  m.actuation = [](const Vec&) { return Mat::Zero(1, 1); };
  return m;
}

}  // namespace

TEST_CASE("double integrator derivative") {
  const Model m = make_double_integrator4();
  const Vec dx = derivative(m, vec4(0, 0, 2, 0), vec2(1, 0));
  REQUIRE(dx(0) == 2.0);
  REQUIRE(dx(1) == 0.0);
  REQUIRE(dx(2) == 1.0);
  REQUIRE(dx(3) == 0.0);
}

TEST_CASE("quadrotor hover equilibrium") {
  const QuadrotorParams qp;
  const Model m = make_quadrotor12(qp);
  Vec x = Vec::Zero(12);
  Vec u = Vec::Zero(4);
  u(0) = qp.mass * qp.gravity;
  const Vec dx = derivative(m, x, u);
  REQUIRE(dx.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("vehicle straight-line symmetry") {
  // Constant speed, zero steer, zero lateral states, zero longitudinal slip:
  // the lateral dynamics must vanish identically.
  const VehicleParams vp;
  const Model m = make_vehicle8(vp);
  Vec x = Vec::Zero(8);
  x(3) = 10.0;                       // vx
  x(7) = 10.0 / vp.wheel_radius;     // omega with zero slip
  const Vec dx = derivative(m, x, Vec::Zero(2));
  REQUIRE(std::abs(dx(4)) < 1e-12);  // vy dot
  REQUIRE(std::abs(dx(5)) < 1e-12);  // r dot
  REQUIRE(std::abs(dx(3)) < 1e-12);  // vx dot (no drive, no slip)
}

TEST_CASE("derivative dimension and finiteness errors") {
  const Model m = make_double_integrator4();
  REQUIRE_THROWS_AS(derivative(m, Vec::Zero(3), Vec::Zero(2)), ArgumentError);
  REQUIRE_THROWS_AS(derivative(m, Vec::Zero(4), Vec::Zero(1)), ArgumentError);
  Vec bad = Vec::Zero(4);
  bad(0) = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(derivative(m, bad, Vec::Zero(2)), NumericError);
}

TEST_CASE("control affinity") {
  const Model models[] = {make_double_integrator4(), make_vehicle8(), make_quadrotor12()};
  Rng rng(7);
  for (const Model& m : models) {
    for (int trial = 0; trial < 50; ++trial) {
      Vec x(m.state_dim);
      for (int i = 0; i < m.state_dim; ++i) x(i) = rng.uniform(-1.0, 1.0);
      if (m.name == "vehicle8") x(3) = rng.uniform(1.0, 20.0);
      Vec u1(m.control_dim), u2(m.control_dim);
      for (int i = 0; i < m.control_dim; ++i) {
        u1(i) = rng.uniform(m.input_lower(i), m.input_upper(i));
        u2(i) = rng.uniform(m.input_lower(i), m.input_upper(i));
      }
      const double lam = rng.uniform01();
      const Vec mix = derivative(m, x, lam * u1 + (1.0 - lam) * u2);
      const Vec combo = lam * derivative(m, x, u1) + (1.0 - lam) * derivative(m, x, u2);
      const double scale = 1.0 + combo.cwiseAbs().maxCoeff();
      REQUIRE((mix - combo).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
  }
}

TEST_CASE("rk4 zero step is identity") {
  const Model m = make_double_integrator4();
  const Vec x = vec4(0.3, -0.2, 1.0, 2.0);
  const Vec y = step_rk4(m, x, vec2(1, -1), 0.0);
  REQUIRE(y == x);
}

TEST_CASE("rk4 exact on linear dynamics") {
  const Model m = make_double_integrator4();
  const Vec a = step_rk4(m, vec4(0, 0, 2, 0), vec2(0, 0), 0.5);
  REQUIRE(a(0) == Catch::Approx(1.0).margin(1e-13));
  REQUIRE(a(2) == Catch::Approx(2.0).margin(1e-13));

  const Vec b = step_rk4(m, vec4(0, 0, 0, 0), vec2(1, 0), 1.0);
  REQUIRE(b(0) == Catch::Approx(0.5).margin(1e-13));
  REQUIRE(b(2) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("rk4 fourth-order convergence on the quadrotor") {
  const QuadrotorParams qp;
  const Model m = make_quadrotor12(qp);
  const auto u_of_t = [&](double t) {
    Vec u(4);
    u << qp.mass * qp.gravity + 2.0 * std::sin(2.0 * t), 0.05 * std::sin(3.0 * t),
        0.05 * std::cos(2.5 * t), 0.02 * std::sin(1.7 * t);
    return u;
  };
  auto integrate = [&](double dt) {
    Vec x = Vec::Zero(12);
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / dt));
    for (std::size_t i = 0; i < steps; ++i)
      x = step_rk4_tv(m, x, u_of_t, static_cast<double>(i) * dt, dt);
    return x;
  };
  const Vec ref = integrate(1e-5);
  const double e_coarse = (integrate(1e-2) - ref).norm();
  const double e_fine = (integrate(5e-3) - ref).norm();
  REQUIRE(e_coarse / e_fine >= 12.0);
}

TEST_CASE("flow with zero horizon") {
  const Model m = make_double_integrator4();
  const Vec x0 = vec4(1, 2, 3, 4);
  const Trajectory traj = flow(m, [](const Vec&, double) { return Vec::Zero(2); }, x0, 0.0, 0.1);
  REQUIRE(traj.size() == 1);
  REQUIRE(traj.times[0] == 0.0);
  REQUIRE(traj.states[0] == x0);
}

TEST_CASE("ballistic flow") {
  const Model m = make_double_integrator4();
  const Trajectory traj =
      flow(m, [](const Vec&, double) { return Vec::Zero(2); }, vec4(0, 0, 2, 0), 1.0, 0.1);
  REQUIRE(traj.size() == 11);
  REQUIRE(traj.times.back() == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(traj.back()(0) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(traj.back()(2) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("flow lands exactly on T when dt does not divide it") {
  const Model m = make_double_integrator4();
  const Trajectory traj =
      flow(m, [](const Vec&, double) { return Vec::Zero(2); }, vec4(0, 0, 1, 0), 1.0, 0.3);
  REQUIRE(traj.times.back() == 1.0);
  REQUIRE(traj.size() == 5);  // 0, .3, .6, .9, 1.0
  REQUIRE(traj.back()(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("stop policy brings the double integrator to rest") {
  const Model m = make_double_integrator4();
  const Policy stop = di_stop(m);
  const Vec x0 = vec4(0, 0, 2, 0);
  const Trajectory coarse = flow(m, stop.as_fn(), x0, 2.0, 0.02);
  REQUIRE(coarse.back().segment<2>(2).norm() < 1e-3);

  // Fine-grid simulation agrees on the terminal state.
  Vec x = x0;
  const double dt = 1e-4;
  for (int i = 0; i < 20000; ++i)
    x = step_rk4(m, x, clamp_control(m, stop.action(x, i * dt)), dt);
  REQUIRE(x.segment<2>(2).norm() < 1e-3);
  REQUIRE((coarse.back().head<2>() - x.head<2>()).norm() < 0.01);
}

TEST_CASE("flow semigroup on aligned grids") {
  const Model m = make_double_integrator4();
  const Policy stop = di_stop(m);
  const Vec x0 = vec4(1, -2, 1.5, -0.5);
  const Trajectory whole = flow(m, stop.as_fn(), x0, 1.6, 0.02);
  const Trajectory first = flow(m, stop.as_fn(), x0, 0.8, 0.02);
  const Trajectory second = flow(m, stop.as_fn(), first.back(), 0.8, 0.02);
  REQUIRE(whole.back() == second.back());
}

TEST_CASE("flow is deterministic") {
  const Model m = make_vehicle8();
  Vec x0 = Vec::Zero(8);
  x0(3) = 15.0;
  x0(7) = 50.0;
  const Policy swerve = vehicle_swerve(m, 1.0, "sw", 2);
  const Trajectory a = flow(m, swerve.as_fn(), x0, 1.0, 0.02);
  const Trajectory b = flow(m, swerve.as_fn(), x0, 1.0, 0.02);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.states[i] == b.states[i]);
}

TEST_CASE("flow blow-up reports last finite state") {
  const Model m = blowup_model();
  const Vec x0 = Vec::Constant(1, 3.0);
  try {
    flow(m, [](const Vec&, double) { return Vec::Zero(1); }, x0, 2.0, 0.01);
    FAIL("expected blow-up");
  } catch (const FlowBlowup& e) {
    REQUIRE(e.last_state.allFinite());
    REQUIRE(e.time > 0.0);
    REQUIRE(e.time < 2.0);
  }
}

TEST_CASE("quadrotor pitch guard") {
  const Model m = make_quadrotor12();
  Vec x = Vec::Zero(12);
  x(7) = 1.6;  // ~92 deg
  REQUIRE_THROWS_AS(m.drift(x), NumericError);
}
