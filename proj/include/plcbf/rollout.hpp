#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "plcbf/constraints.hpp"
#include "plcbf/dynamics.hpp"
#include "plcbf/parallel.hpp"
#include "plcbf/policies.hpp"

namespace plcbf {

struct RolloutParams {
  double horizon = 2.0;      // T
  double dt = 0.02;
  double eps_safe = 0.05;    // certification threshold on H
  bool retain_trajectories = false;
};

inline void validate(const RolloutParams& p) {
  if (!(p.horizon > 0.0)) throw ArgumentError("rollout horizon must be > 0");
  if (!(p.dt > 0.0 && p.dt <= p.horizon)) throw ArgumentError("rollout dt must be in (0, T]");
}

/// Finite-horizon value of one policy from one state. value == clearance of
/// the rolled-out trajectory; safe iff value > eps_safe; a rollout that leaves
/// the finite range is marked unsafe with value = -inf.
struct RolloutResult {
  std::string policy_id;
  double value = -std::numeric_limits<double>::infinity();  // H
  double min_time = 0.0;                                    // argmin of h, seconds
  bool safe = false;
  bool blew_up = false;
  std::optional<Trajectory> trajectory;

  double clearance() const { return value; }
};

/// Minimum margin along a trajectory: the sampled infimum of h over the grid.
/// tau_offset shifts the snapshot's look-ahead clock (time of times[0]
/// relative to the snapshot's t_k).
inline double clearance(const Trajectory& traj, const ConstraintSnapshot& snapshot,
                        double tau_offset = 0.0, double* argmin_time = nullptr) {
  if (traj.states.empty()) throw ArgumentError("clearance of empty trajectory");
  double best = std::numeric_limits<double>::infinity();
  double best_t = traj.times.front();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const double h = evaluate(snapshot, traj.states[i], tau_offset + traj.times[i]);
    if (h < best) {
      best = h;
      best_t = traj.times[i];
    }
  }
  if (argmin_time) *argmin_time = best_t;
  return best;
}

inline RolloutResult rollout_value(const Model& model, const Policy& policy,
                                   const ConstraintSnapshot& snapshot, const Vec& x0,
                                   const RolloutParams& params, double tau_offset = 0.0) {
  validate(params);
  RolloutResult res;
  res.policy_id = policy.id;
  try {
    Trajectory traj = flow(model, policy.as_fn(), x0, params.horizon, params.dt);
    res.value = clearance(traj, snapshot, tau_offset, &res.min_time);
    res.safe = res.value > params.eps_safe;
    if (params.retain_trajectories) res.trajectory = std::move(traj);
  } catch (const FlowBlowup& e) {
    res.blew_up = true;
    res.value = -std::numeric_limits<double>::infinity();
    res.safe = false;
    res.min_time = e.time;
  }
  return res;
}

/// Evaluates every library policy from x0. Results land in library order and
/// are identical for any worker count.
inline std::vector<RolloutResult> evaluate_library(const Model& model, const PolicyLibrary& library,
                                                   const ConstraintSnapshot& snapshot, const Vec& x0,
                                                   const RolloutParams& params, int workers = 1,
                                                   double tau_offset = 0.0) {
  if (library.size() == 0) throw ArgumentError("evaluate_library: empty library");
  std::vector<RolloutResult> results(library.size());
  parallel_for(library.size(), workers, [&](std::size_t i) {
    results[i] = rollout_value(model, library[i], snapshot, x0, params, tau_offset);
  });
  return results;
}

/// Least invasive safe mode: the safe result with the smallest rank. Results
/// must be aligned with the (rank-ascending) library. Returns the library
/// index, or nullopt when nothing is safe.
inline std::optional<std::size_t> select_mode(const std::vector<RolloutResult>& results,
                                              const PolicyLibrary& library) {
  if (results.size() != library.size())
    throw ArgumentError("select_mode: results not aligned with library");
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].policy_id != library[i].id)
      throw ArgumentError("select_mode: results not aligned with library");
    if (results[i].safe) return i;
  }
  return std::nullopt;
}

}  // namespace plcbf
