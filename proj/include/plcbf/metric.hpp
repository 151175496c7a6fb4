#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "plcbf/constraints.hpp"
#include "plcbf/parallel.hpp"
#include "plcbf/rollout.hpp"

namespace plcbf {

/// Sup-over-time Euclidean distance between two closed-loop flows from the
/// same initial state, evaluated on the shared sampling grid.
inline double trajectory_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw ArgumentError("trajectory_distance: mismatched grids");
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d = std::max(d, (a.states[i] - b.states[i]).norm());
  return d;
}

inline double language_metric(const Model& model, const Policy& pi_a, const Policy& pi_b,
                              const Vec& x, double horizon, double dt) {
  const Trajectory ta = flow(model, pi_a.as_fn(), x, horizon, dt);
  const Trajectory tb = flow(model, pi_b.as_fn(), x, horizon, dt);
  return trajectory_distance(ta, tb);
}

/// Finite-dimensional stand-in for the admissible policy set: piecewise
/// constant controls on a fixed segment grid over [0, horizon], each segment
/// drawn uniformly from the input box. Sampling is reproducible from
/// (seed, index) alone.
struct PolicyFamily {
  int segments = 5;
  double horizon = 2.0;

  int parameter_dim(const Model& m) const { return segments * m.control_dim; }

  Policy from_parameters(const Model& m, const Vec& params, std::string id) const {
    if (params.size() != parameter_dim(m)) throw ArgumentError("policy family: bad parameter size");
    const int n_u = m.control_dim;
    const int n_seg = segments;
    const double t_total = horizon;
    return make_policy(m, std::move(id), 0, [params, n_u, n_seg, t_total](const Vec&, double t) {
      int seg = static_cast<int>(std::floor(t / t_total * n_seg));
      seg = std::clamp(seg, 0, n_seg - 1);
      return Vec(params.segment(seg * n_u, n_u));
    });
  }

  Vec sample_parameters(const Model& m, std::uint64_t seed, std::uint64_t index) const {
    Rng rng(derive_seed(seed, index));
    Vec p(parameter_dim(m));
    for (int s = 0; s < segments; ++s)
      for (int j = 0; j < m.control_dim; ++j)
        p(s * m.control_dim + j) = rng.uniform(m.input_lower(j), m.input_upper(j));
    return p;
  }

  Policy sample(const Model& m, std::uint64_t seed, std::uint64_t index) const {
    return from_parameters(m, sample_parameters(m, seed, index),
                           "family_" + std::to_string(index));
  }
};

/// Sampled estimate of the library approximation precision delta_x(Pi),
/// restricted to the family: max over sampled family policies of the min over
/// library policies of the language metric.
inline double approximation_precision(const Model& model, const PolicyLibrary& library,
                                      const PolicyFamily& family, const Vec& x, double horizon,
                                      double dt, int n_samples, std::uint64_t seed,
                                      int workers = 1) {
  if (n_samples < 1) throw ArgumentError("approximation_precision: n_samples must be >= 1");
  std::vector<Trajectory> lib_flows(library.size());
  for (std::size_t k = 0; k < library.size(); ++k)
    lib_flows[k] = flow(model, library[k].as_fn(), x, horizon, dt);

  std::vector<double> per_sample(static_cast<std::size_t>(n_samples));
  parallel_for(per_sample.size(), workers, [&](std::size_t i) {
    const Policy pi_star = family.sample(model, seed, i);
    const Trajectory t_star = flow(model, pi_star.as_fn(), x, horizon, dt);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lf : lib_flows) best = std::min(best, trajectory_distance(t_star, lf));
    per_sample[i] = best;
  });
  double delta = 0.0;
  for (double d : per_sample) delta = std::max(delta, d);
  return delta;
}

struct CompletenessReport {
  double delta_hat = 0.0;   // family-restricted sampled delta_x(Pi)
  double gamma_star = -std::numeric_limits<double>::infinity();  // best sampled clearance
  double lipschitz = 0.0;   // L_h over the visited region
  double threshold = 0.0;   // gamma_star / L_h
  bool certified = false;   // delta_hat < threshold, strictly
  std::string reason;       // set when not certified
  int best_sample_index = -1;          // the certifying pi*
  std::string witness_id;              // library policy closest to pi*
  double witness_value = -std::numeric_limits<double>::infinity();  // H of the witness
  double dt_uncertainty = 0.0;         // grid slack band, L_v * dt
};

/// Theorem-style completeness certificate: if some sampled family policy is
/// strictly safe with clearance gamma_star and the library tracks the family
/// within delta_hat < gamma_star / L_h, the library policy nearest the best
/// sample is itself certified (witness_value > 0).
inline CompletenessReport completeness_check(const Model& model, const PolicyLibrary& library,
                                             const PolicyFamily& family,
                                             const ConstraintSnapshot& snapshot, const Vec& x,
                                             double horizon, double dt, int n_samples,
                                             std::uint64_t seed, int workers = 1) {
  if (n_samples < 1) throw ArgumentError("completeness_check: n_samples must be >= 1");
  CompletenessReport rep;

  std::vector<Trajectory> lib_flows(library.size());
  for (std::size_t k = 0; k < library.size(); ++k)
    lib_flows[k] = flow(model, library[k].as_fn(), x, horizon, dt);

  std::vector<Trajectory> sample_flows(static_cast<std::size_t>(n_samples));
  parallel_for(sample_flows.size(), workers, [&](std::size_t i) {
    const Policy pi_star = family.sample(model, seed, i);
    sample_flows[i] = flow(model, pi_star.as_fn(), x, horizon, dt);
  });

  // Best strictly safe sample and family-restricted precision.
  double max_speed = 0.0;
  for (std::size_t i = 0; i < sample_flows.size(); ++i) {
    const double gamma = clearance(sample_flows[i], snapshot);
    if (gamma > rep.gamma_star) {
      rep.gamma_star = gamma;
      rep.best_sample_index = static_cast<int>(i);
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& lf : lib_flows) best = std::min(best, trajectory_distance(sample_flows[i], lf));
    rep.delta_hat = std::max(rep.delta_hat, best);
    for (std::size_t s = 1; s < sample_flows[i].size(); ++s)
      max_speed = std::max(max_speed, (sample_flows[i].states[s] - sample_flows[i].states[s - 1]).norm() /
                                          (sample_flows[i].times[s] - sample_flows[i].times[s - 1]));
  }
  rep.dt_uncertainty = max_speed * dt;

  // Lipschitz constant over the region the flows actually visit.
  Vec lo = x, hi = x;
  for (const auto& flows : {std::cref(sample_flows), std::cref(lib_flows)})
    for (const auto& tr : flows.get())
      for (const auto& s : tr.states) {
        lo = lo.cwiseMin(s);
        hi = hi.cwiseMax(s);
      }
  lo.array() -= 1.0;
  hi.array() += 1.0;
  rep.lipschitz = lipschitz_estimate(snapshot, lo, hi, 2048, seed);
  rep.threshold = rep.gamma_star / rep.lipschitz;

  if (!(rep.gamma_star > 0.0)) {
    rep.certified = false;
    rep.reason = "no_safe_policy_sampled";
    return rep;
  }
  rep.certified = rep.delta_hat < rep.threshold;
  if (!rep.certified) rep.reason = "delta_not_below_threshold";

  // Witness: the library policy closest to the best safe sample.
  const Trajectory& best_flow = sample_flows[static_cast<std::size_t>(rep.best_sample_index)];
  std::size_t witness = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < lib_flows.size(); ++k) {
    const double d = trajectory_distance(best_flow, lib_flows[k]);
    if (d < best_d) {
      best_d = d;
      witness = k;
    }
  }
  rep.witness_id = library[witness].id;
  rep.witness_value = clearance(lib_flows[witness], snapshot);
  return rep;
}

}  // namespace plcbf
