#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plcbf/common.hpp"
#include "plcbf/dynamics.hpp"

namespace plcbf {

// Margin returned when a snapshot has no primitives. Finite so that
// differences of margins stay well-defined.
inline constexpr double kUnconstrainedMargin = 1e30;

/// One constraint primitive. Margins are in meters and positive inside the
/// safe set. Disk and Box read the leading position coordinates of the state;
/// HalfPlane normals may be sized for the position slice or the full state
/// (h = normal . x - offset), which allows velocity-aware barriers.
struct Primitive {
  enum class Type { Disk, Box, HalfPlane, Constant };

  Type type = Type::Disk;
  Vec center;        // Disk/Box
  double radius = 0.0;
  Vec velocity;      // optional constant velocity, empty = static
  Vec half_extents;  // Box
  Vec normal;        // HalfPlane
  double offset = 0.0;
  double value = 0.0;  // Constant
  double scale = 1.0;

  Vec center_at(double tau) const {
    if (velocity.size() == center.size() && velocity.size() > 0) return center + tau * velocity;
    return center;
  }

  double margin(const Vec& x, int pos_dim, double tau) const {
    switch (type) {
      case Type::Disk:
        return scale * ((x.head(pos_dim) - center_at(tau)).norm() - radius);
      case Type::Box: {
        const Vec q = (x.head(pos_dim) - center_at(tau)).cwiseAbs() - half_extents;
        const double outside = q.cwiseMax(0.0).norm();
        const double inside = std::min(q.maxCoeff(), 0.0);
        return scale * (outside + inside - radius);
      }
      case Type::HalfPlane: {
        const auto n = normal.size();
        return scale * (normal.dot(x.head(n)) - offset);
      }
      case Type::Constant:
        return scale * value;
    }
    return 0.0;
  }

  /// Gradient of margin with respect to the full state.
  Vec state_gradient(const Vec& x, int pos_dim, double tau) const {
    Vec g = Vec::Zero(x.size());
    switch (type) {
      case Type::Disk: {
        const Vec d = x.head(pos_dim) - center_at(tau);
        const double n = d.norm();
        if (n < 1e-12) throw NumericError("degenerate gradient at obstacle center");
        g.head(pos_dim) = (scale / n) * d;
        return g;
      }
      case Type::Box: {
        const Vec d = x.head(pos_dim) - center_at(tau);
        const Vec q = d.cwiseAbs() - half_extents;
        if ((q.array() > 0.0).any()) {
          const Vec outside = q.cwiseMax(0.0);
          const double n = outside.norm();
          for (int i = 0; i < pos_dim; ++i)
            g(i) = scale * outside(i) / n * (d(i) >= 0.0 ? 1.0 : -1.0);
        } else {
          Eigen::Index j;
          q.maxCoeff(&j);
          g(j) = scale * (d(j) >= 0.0 ? 1.0 : -1.0);
        }
        return g;
      }
      case Type::HalfPlane:
        g.head(normal.size()) = scale * normal;
        return g;
      case Type::Constant:
        return g;
    }
    return g;
  }

  /// Lipschitz constant of margin with respect to the state.
  double lipschitz() const {
    switch (type) {
      case Type::Disk:
      case Type::Box:
        return std::abs(scale);
      case Type::HalfPlane:
        return std::abs(scale) * normal.norm();
      case Type::Constant:
        return 0.0;
    }
    return 0.0;
  }
};

enum class Combiner { HardMin, SmoothMin };

/// Perceived safe set at one sensing update: C_k = { x | h_k(x) >= 0 }.
/// A snapshot frozen at t_k evaluates moving primitives at their predicted
/// positions as a function of look-ahead time tau relative to t_k; with
/// predict_motion=false primitives stay frozen at their t_k positions.
struct ConstraintSnapshot {
  int index = 0;
  double valid_from = 0.0;
  int position_dim = 2;
  std::vector<Primitive> primitives;
  Combiner combiner = Combiner::HardMin;
  double smooth_temperature = 10.0;
  bool predict_motion = true;

  double effective_tau(double tau) const { return predict_motion ? tau : 0.0; }
};

inline double evaluate(const ConstraintSnapshot& s, const Vec& x, double tau = 0.0) {
  if (s.primitives.empty()) return kUnconstrainedMargin;
  const double te = s.effective_tau(tau);
  if (s.combiner == Combiner::HardMin) {
    double h = std::numeric_limits<double>::infinity();
    for (const auto& prim : s.primitives) h = std::min(h, prim.margin(x, s.position_dim, te));
    return h;
  }
  // Smooth-min: -(1/rho) log sum exp(-rho h_i), stabilized around the minimum.
  const double rho = s.smooth_temperature;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& prim : s.primitives) m = std::min(m, prim.margin(x, s.position_dim, te));
  double acc = 0.0;
  for (const auto& prim : s.primitives) acc += std::exp(-rho * (prim.margin(x, s.position_dim, te) - m));
  return m - std::log(acc) / rho;
}

/// Analytic gradient with respect to the full state; velocity coordinates of
/// purely positional constraints are zero.
inline Vec gradient(const ConstraintSnapshot& s, const Vec& x, double tau = 0.0) {
  if (s.primitives.empty()) return Vec::Zero(x.size());
  const double te = s.effective_tau(tau);
  if (s.combiner == Combiner::HardMin) {
    std::size_t active = 0;
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.primitives.size(); ++i) {
      const double hi = s.primitives[i].margin(x, s.position_dim, te);
      if (hi < h) {
        h = hi;
        active = i;
      }
    }
    return s.primitives[active].state_gradient(x, s.position_dim, te);
  }
  const double rho = s.smooth_temperature;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& prim : s.primitives) m = std::min(m, prim.margin(x, s.position_dim, te));
  double wsum = 0.0;
  Vec acc = Vec::Zero(x.size());
  for (const auto& prim : s.primitives) {
    const double w = std::exp(-rho * (prim.margin(x, s.position_dim, te) - m));
    wsum += w;
    acc += w * prim.state_gradient(x, s.position_dim, te);
  }
  return acc / wsum;
}

/// Lipschitz constant of h over a state box: max of the analytic per-primitive
/// bound (min and smooth-min both preserve it) and a sampled pairwise bound.
inline double lipschitz_estimate(const ConstraintSnapshot& s, const Vec& lo, const Vec& hi,
                                 int n_samples, std::uint64_t seed = 0) {
  if (lo.size() != hi.size() || lo.size() == 0 || (lo.array() > hi.array()).any())
    throw ArgumentError("lipschitz_estimate: empty region");
  if (n_samples < 2) throw ArgumentError("lipschitz_estimate: n_samples must be >= 2");

  double analytic = 0.0;
  for (const auto& prim : s.primitives) analytic = std::max(analytic, prim.lipschitz());

  Rng rng(derive_seed(seed, 0x11bc));
  auto draw = [&] {
    Vec x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = rng.uniform(lo(i), hi(i));
    return x;
  };
  double sampled = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const Vec a = draw();
    const Vec b = draw();
    const double dist = (a - b).norm();
    if (dist < 1e-12) continue;
    sampled = std::max(sampled, std::abs(evaluate(s, a) - evaluate(s, b)) / dist);
  }
  return std::max(analytic, sampled);
}

/// Time-ordered perception updates; index kappa(t) = k with t_k <= t < t_{k+1}.
struct PerceptionSchedule {
  std::vector<ConstraintSnapshot> snapshots;
};

inline void validate_schedule(const PerceptionSchedule& sched) {
  if (sched.snapshots.empty()) throw ArgumentError("perception schedule is empty");
  for (std::size_t i = 1; i < sched.snapshots.size(); ++i)
    if (!(sched.snapshots[i].valid_from > sched.snapshots[i - 1].valid_from))
      throw ArgumentError("perception schedule times must be strictly increasing");
}

inline const ConstraintSnapshot& snapshot_at(const PerceptionSchedule& sched, double t) {
  if (sched.snapshots.empty()) throw ArgumentError("perception schedule is empty");
  if (t < sched.snapshots.front().valid_from)
    throw ArgumentError("snapshot_at: t precedes the first sensing update");
  // Left-closed intervals: t == t_k selects snapshot k.
  std::size_t k = 0;
  for (std::size_t i = 1; i < sched.snapshots.size(); ++i) {
    if (sched.snapshots[i].valid_from <= t) k = i;
    else break;
  }
  return sched.snapshots[k];
}

// Convenience constructors used by scenarios and configs.

inline Primitive disk(Vec center, double radius, Vec velocity = Vec(), double scale = 1.0) {
  Primitive p;
  p.type = Primitive::Type::Disk;
  p.center = std::move(center);
  p.radius = radius;
  p.velocity = std::move(velocity);
  p.scale = scale;
  return p;
}

inline Primitive box(Vec center, Vec half_extents, double corner_radius = 0.0, Vec velocity = Vec()) {
  Primitive p;
  p.type = Primitive::Type::Box;
  p.center = std::move(center);
  p.half_extents = std::move(half_extents);
  p.radius = corner_radius;
  p.velocity = std::move(velocity);
  return p;
}

inline Primitive half_plane(Vec normal, double offset) {
  Primitive p;
  p.type = Primitive::Type::HalfPlane;
  p.normal = std::move(normal);
  p.offset = offset;
  return p;
}

inline Primitive constant_margin(double value) {
  Primitive p;
  p.type = Primitive::Type::Constant;
  p.value = value;
  return p;
}

}  // namespace plcbf
