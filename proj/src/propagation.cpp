#include "bimp/propagation.hpp"

namespace bimp {

double wait_expectation(const ValueField& field, const ModelSpec& spec, const State& state,
                        const Prior& prior, std::size_t until, std::size_t euler_substeps,
                        const TensorRule& rule) {
  const GridSpec& g = field.grid;
  const double target = g.time(until);
  const std::size_t steps = substeps_for_gap(target - state.t, g.time_step(), euler_substeps);
  const auto slice = field.slice(until);
  return expect_after_wait(spec, state, target, steps, rule,
                           [&](const Coord& x) { return interpolate_slice(g, slice, x, prior); });
}

double wait_expectation(const ValueField& field, const ModelSpec& spec, const State& state,
                        const Prior& prior, std::size_t until, const PropagationSettings& settings) {
  const TensorRule rule = tensor_normal_rule(settings.hermite_nodes, spec.dim);
  return wait_expectation(field, spec, state, prior, until, settings.euler_substeps, rule);
}

}  // namespace bimp
