#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "plcbf/constraints.hpp"
#include "plcbf/qp.hpp"
#include "plcbf/rollout.hpp"

namespace plcbf {

enum class QpStatus { Inactive, Active, Relaxed, FallbackEngaged };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Inactive: return "inactive";
    case QpStatus::Active: return "active";
    case QpStatus::Relaxed: return "relaxed";
    case QpStatus::FallbackEngaged: return "fallback_engaged";
  }
  return "unknown";
}

/// What the barrier decrease condition is imposed on. FiniteHorizonValue uses
/// the selected policy's H with a finite-difference gradient; the
/// InstantaneousMargin variant builds the row from h itself, which reduces the
/// filter to a vanilla CBF-QP as the horizon degenerates.
enum class BarrierSource { FiniteHorizonValue, InstantaneousMargin };

struct FilterParams {
  RolloutParams rollout;
  double alpha0 = 1.0;      // class-K gain, alpha(s) = alpha0 * s
  double grad_eps = 1e-4;   // finite-difference step for grad_x H
  BarrierSource barrier_source = BarrierSource::FiniteHorizonValue;
  int workers = 1;
};

inline void validate(const FilterParams& p) {
  validate(p.rollout);
  if (!(p.alpha0 > 0.0)) throw ArgumentError("alpha0 must be > 0");
  if (!(p.grad_eps > 0.0)) throw ArgumentError("grad_eps must be > 0");
}

struct FilterDecision {
  std::optional<std::string> selected_mode;   // policy id, nullopt = none safe
  std::optional<std::size_t> selected_index;  // library index
  Vec u_out;
  QpStatus qp_status = QpStatus::Inactive;
  double selected_value = -std::numeric_limits<double>::infinity();  // H of the selected mode
  double solve_time = 0.0;  // seconds; populated only when timing is requested
  std::vector<RolloutResult> results;  // library-aligned diagnostics
};

/// Central finite differences of the finite-horizon value over each state
/// coordinate (2 * state_dim rollouts).
inline Vec value_gradient(const Model& model, const Policy& policy,
                          const ConstraintSnapshot& snapshot, const Vec& x,
                          const RolloutParams& params, double grad_eps, double tau_offset = 0.0) {
  Vec grad(model.state_dim);
  RolloutParams p = params;
  p.retain_trajectories = false;
  for (int i = 0; i < model.state_dim; ++i) {
    Vec xp = x, xm = x;
    xp(i) += grad_eps;
    xm(i) -= grad_eps;
    const RolloutResult rp = rollout_value(model, policy, snapshot, xp, p, tau_offset);
    const RolloutResult rm = rollout_value(model, policy, snapshot, xm, p, tau_offset);
    if (rp.blew_up || rm.blew_up)
      throw NumericError("value_gradient: rollout blow-up in perturbed state");
    grad(i) = (rp.value - rm.value) / (2.0 * grad_eps);
  }
  return grad;
}

/// One PL-CBF filter step: snapshot lookup, library evaluation, least
/// invasive safe-mode selection, barrier row construction, and the minimally
/// modifying QP. Total: every finite state yields a bounded control.
inline FilterDecision filter_step(const Model& model, const Vec& x, double t,
                                  const PolicyLibrary& library, const PerceptionSchedule& schedule,
                                  const FilterParams& params, bool measure_time = false) {
  validate(params);
  const ConstraintSnapshot& snapshot = snapshot_at(schedule, t);  // argument error if t < t_0
  const double tau_offset = t - snapshot.valid_from;

  const auto t_start = std::chrono::steady_clock::now();
  FilterDecision dec;
  dec.results = evaluate_library(model, library, snapshot, x, params.rollout, params.workers, tau_offset);

  auto engage_best_effort = [&] {
    // Open-loop engagement of the highest-H policy.
    std::size_t best = 0;
    for (std::size_t i = 1; i < dec.results.size(); ++i)
      if (dec.results[i].value > dec.results[best].value) best = i;
    dec.qp_status = QpStatus::FallbackEngaged;
    dec.u_out = library[best].action(x, t);
    dec.selected_value = dec.results[best].value;
    dec.selected_mode = std::nullopt;
    dec.selected_index = std::nullopt;
  };

  try {
    const std::optional<std::size_t> mode = select_mode(dec.results, library);
    if (!mode) {
      engage_best_effort();
    } else {
      const std::size_t sel = *mode;
      dec.selected_mode = library[sel].id;
      dec.selected_index = sel;
      dec.selected_value = dec.results[sel].value;

      double h_val;
      Vec grad_h;
      if (params.barrier_source == BarrierSource::InstantaneousMargin) {
        h_val = evaluate(snapshot, x, tau_offset);
        grad_h = gradient(snapshot, x, tau_offset);
      } else {
        h_val = dec.results[sel].value;
        grad_h = value_gradient(model, library[sel], snapshot, x, params.rollout, params.grad_eps,
                                tau_offset);
      }

      const Vec u_nom = library.nominal().action(x, t);
      const Vec f = model.drift(x);
      const Mat g = model.actuation(x);
      QpRow row;
      row.a = g.transpose() * grad_h;
      row.b = -params.alpha0 * h_val - grad_h.dot(f);

      if (row.a.norm() < 1e-9) {
        // Degenerate row (kink or constant margin): vacuous rows pass the
        // nominal through; unsatisfiable ones engage the selected fallback.
        if (row.b <= 1e-12) {
          dec.qp_status = QpStatus::Inactive;
          dec.u_out = u_nom;
        } else {
          dec.qp_status = QpStatus::FallbackEngaged;
          dec.u_out = library[sel].action(x, t);
        }
      } else if (row.a.dot(u_nom) >= row.b) {
        dec.qp_status = QpStatus::Inactive;
        dec.u_out = u_nom;
      } else {
        try {
          const QpSolution sol = qp_min_norm(u_nom, {row}, model.input_lower, model.input_upper);
          dec.qp_status = QpStatus::Active;
          dec.u_out = sol.u;
        } catch (const QpInfeasible&) {
          engage_best_effort();
        }
      }
    }
  } catch (const NumericError&) {
    engage_best_effort();
  }

  if (measure_time)
    dec.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return dec;
}

}  // namespace plcbf
