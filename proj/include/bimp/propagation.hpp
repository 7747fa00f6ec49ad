#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "bimp/grid.hpp"
#include "bimp/model.hpp"
#include "bimp/quadrature.hpp"
#include "bimp/value_field.hpp"

namespace bimp {

struct PropagationSettings {
  std::size_t hermite_nodes = 5;
  std::size_t euler_substeps = 4;
};

namespace detail {

template <class Fn>
double euler_recurse(const ModelSpec& spec, double t, const Coord& x, double dt, std::size_t left,
                     const TensorRule& rule, Fn& fn) {
  if (left == 0) return fn(x);
  const std::size_t d = spec.dim;
  const State here{t, x};
  const Coord mu = drift(spec, here);
  const std::vector<double> sigma = diffusion(spec, here);
  Coord mean = x;
  for (std::size_t i = 0; i < d; ++i) mean[i] += mu[i] * dt;
  const double sq = std::sqrt(dt);
  double total = 0.0;
  for (std::size_t n = 0; n < rule.size(); ++n) {
    const double* e = rule.point(n);
    Coord next = mean;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += sigma[i * d + k] * e[k];
      next[i] += s * sq;
    }
    total += rule.weights[n] * euler_recurse(spec, t + dt, next, dt, left - 1, rule, fn);
  }
  return total;
}

}  // namespace detail

/// E[fn(X_until)] for the uncontrolled diffusion started at `from`, using
/// `substeps` Euler steps with the tensor Gauss–Hermite rule on every step.
/// With σ = 0 the single deterministic Euler path is followed.
template <class Fn>
double expect_after_wait(const ModelSpec& spec, const State& from, double until,
                         std::size_t substeps, const TensorRule& rule, Fn&& fn) {
  const double gap = until - from.t;
  if (substeps == 0 || !(gap > 0.0)) return fn(from.x);
  const bool frozen_drift = std::all_of(spec.drift.matrix.begin(), spec.drift.matrix.end(),
                                        [](double v) { return v == 0.0; }) &&
                            std::all_of(spec.drift.offset.begin(), spec.drift.offset.end(),
                                        [](double v) { return v == 0.0; });
  const bool still = spec.diffusion.is_zero();
  if (still && frozen_drift) return fn(from.x);
  const double dt = gap / static_cast<double>(substeps);
  if (still) {
    Coord x = from.x;
    double t = from.t;
    for (std::size_t k = 0; k < substeps; ++k) {
      const Coord mu = drift(spec, State{t, x});
      for (std::size_t i = 0; i < spec.dim; ++i) x[i] += mu[i] * dt;
      t += dt;
    }
    return fn(x);
  }
  return detail::euler_recurse(spec, from.t, from.x, dt, substeps, rule, fn);
}

/// E_m[v(X_until, m)] with the prior frozen while waiting; `until` indexes a
/// time node at or after state.t. Sub-steps scale with the gap so that a
/// full grid interval uses settings.euler_substeps.
double wait_expectation(const ValueField& field, const ModelSpec& spec, const State& state,
                        const Prior& prior, std::size_t until, const PropagationSettings& settings);

/// Same, with a prebuilt rule (hot loops build it once).
double wait_expectation(const ValueField& field, const ModelSpec& spec, const State& state,
                        const Prior& prior, std::size_t until, std::size_t euler_substeps,
                        const TensorRule& rule);

}  // namespace bimp
