#include "bimp/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "bimp/errors.hpp"
#include "bimp/parallel.hpp"

namespace bimp {

double apply_impulse_operator(const Continuation& continuation, const ModelSpec& spec,
                              const OutcomeKernel& kernel, const Prior& prior) {
  (void)spec;
  double total = 0.0;
  for (const Outcome& o : kernel.outcomes) {
    const double pd = predictive_density(prior, o.likelihood);
    if (pd == 0.0) continue;
    if (!(pd > 0.0) || !std::isfinite(pd)) {
      throw Error(ErrorKind::DegeneratePosterior, "outcome has an invalid predictive density");
    }
    const Prior posterior = bayes_update(prior, o.likelihood);
    total += o.base_weight * pd * continuation(o.landing, posterior);
  }
  return total;
}

namespace {

std::vector<double> grid_times(const GridSpec& grid) {
  std::vector<double> t(grid.time_count());
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = grid.time(j);
  return t;
}

std::size_t resolve_kernel_nodes(const ModelSpec& spec, const QuadratureSettings& q) {
  return q.kernel_nodes == 0 ? default_kernel_nodes(spec) : q.kernel_nodes;
}

}  // namespace

double apply_impulse_operator(const Continuation& continuation, const ModelSpec& spec,
                              const GridSpec& grid, const State& state, const Prior& prior,
                              const Impulse& action, const QuadratureSettings& quadrature) {
  const std::vector<double> times = grid_times(grid);
  const OutcomeKernel kernel =
      impulse_outcome_kernel(spec, state, action, resolve_kernel_nodes(spec, quadrature), times);
  return apply_impulse_operator(continuation, spec, kernel, prior);
}

double FieldContinuation::operator()(const State& landing, const Prior& posterior) const {
  const GridSpec& g = field_.grid;
  const NextTime next = next_decision_time(g, origin_, landing.t);
  if (next.beyond_horizon) return terminal_gain(spec_, landing, posterior);
  return wait_expectation(field_, spec_, landing, posterior, next.index, substeps_, rule_);
}

NodeEvaluator::NodeEvaluator(const ModelSpec& spec, const GridSpec& grid,
                             const QuadratureSettings& quadrature)
    : spec_(spec),
      grid_(grid),
      quadrature_(quadrature),
      kernel_nodes_(resolve_kernel_nodes(spec, quadrature)),
      rule_(tensor_normal_rule(quadrature.hermite_nodes, spec.dim)),
      breakpoints_(grid_times(grid)) {}

double NodeEvaluator::impulse_value(const ValueField& field, std::size_t j, const State& state,
                                    const Prior& prior, std::size_t action) const {
  const OutcomeKernel kernel =
      impulse_outcome_kernel(spec_, state, spec_.actions[action], kernel_nodes_, breakpoints_);
  const FieldContinuation cont(field, spec_, j, quadrature_, rule_);
  return apply_impulse_operator(cont, spec_, kernel, prior);
}

NodeDecision NodeEvaluator::decide(const ValueField& field, std::size_t j, std::size_t s,
                                   std::size_t p) const {
  const State state{grid_.time(j), grid_.space_point(s)};
  const Prior& prior = grid_.simplex.node(p);
  NodeDecision d;
  if (j == grid_.last_time()) {
    d.wait_value = terminal_gain(spec_, state, prior);
  } else {
    d.wait_value = wait_expectation(field, spec_, state, prior, j + 1, quadrature_.euler_substeps, rule_);
  }
  d.value = d.wait_value;
  d.impulse_values.resize(spec_.actions.size());
  for (std::size_t a = 0; a < spec_.actions.size(); ++a) {
    const double v = impulse_value(field, j, state, prior, a);
    d.impulse_values[a] = v;
    if (v > d.value) {
      d.value = v;
      d.choice = static_cast<std::int32_t>(a);
    }
  }
  return d;
}

double NodeEvaluator::best_impulse(const ValueField& field, std::size_t j, std::size_t s,
                                   std::size_t p) const {
  const State state{grid_.time(j), grid_.space_point(s)};
  const Prior& prior = grid_.simplex.node(p);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < spec_.actions.size(); ++a) {
    best = std::max(best, impulse_value(field, j, state, prior, a));
  }
  return best;
}

namespace {

void solve_slice(const NodeEvaluator& eval, ValueField& field, std::vector<std::int32_t>& decisions,
                 std::size_t j, unsigned threads) {
  const GridSpec& g = field.grid;
  const std::size_t stride = g.simplex.size();
  std::vector<double> values(g.slice_size());
  std::vector<std::int32_t> choices(g.slice_size());
  parallel_for(g.slice_size(), threads, [&](std::size_t i) {
    const NodeDecision d = eval.decide(field, j, i / stride, i % stride);
    if (!std::isfinite(d.value)) {
      throw Error(ErrorKind::NonFiniteValue,
                  "value at time node " + std::to_string(j) + ", node " + std::to_string(i) + " is not finite");
    }
    values[i] = d.value;
    choices[i] = d.choice;
  });
  std::copy(values.begin(), values.end(), field.slice(j).begin());
  std::copy(choices.begin(), choices.end(), decisions.begin() + static_cast<std::ptrdiff_t>(j * g.slice_size()));
}

}  // namespace

void terminal_layer(const ModelSpec& spec, ValueField& field, std::vector<std::int32_t>& decisions,
                    const SolverSettings& settings) {
  decisions.resize(field.values.size(), kWaitCode);
  const NodeEvaluator eval(spec, field.grid, settings.quadrature);
  solve_slice(eval, field, decisions, field.grid.last_time(), settings.threads);
}

SolveReport backward_induction(const ModelSpec& spec, const GridSpec& grid, const SolverSettings& settings) {
  validate(spec);
  if (grid.dim() != spec.dim || grid.simplex.parameter_count() != spec.parameter_count() ||
      grid.horizon != spec.horizon) {
    throw Error(ErrorKind::GridMismatch, "grid does not match the model");
  }
  const auto start = std::chrono::steady_clock::now();
  SolveReport report;
  report.field = ValueField(grid);
  report.decisions.assign(report.field.values.size(), kWaitCode);
  const NodeEvaluator eval(spec, report.field.grid, settings.quadrature);
  const std::size_t last = grid.last_time();
  solve_slice(eval, report.field, report.decisions, last, settings.threads);
  report.slice_max_update.assign(last, 0.0);
  for (std::size_t j = last; j-- > 0;) {
    solve_slice(eval, report.field, report.decisions, j, settings.threads);
    const auto now = report.field.slice(j);
    const auto later = report.field.slice(j + 1);
    double m = 0.0;
    for (std::size_t i = 0; i < now.size(); ++i) m = std::max(m, std::abs(now[i] - later[i]));
    report.slice_max_update[j] = m;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

SolveReport report_from_field(const ModelSpec& spec, const ValueField& field, const SolverSettings& settings) {
  if (field.grid.dim() != spec.dim || field.grid.simplex.parameter_count() != spec.parameter_count() ||
      field.grid.horizon != spec.horizon) {
    throw Error(ErrorKind::GridMismatch, "stored field does not match the model");
  }
  SolveReport report;
  report.field = field;
  report.decisions.assign(field.values.size(), kWaitCode);
  const NodeEvaluator eval(spec, report.field.grid, settings.quadrature);
  const GridSpec& g = report.field.grid;
  const std::size_t stride = g.simplex.size();
  for (std::size_t j = 0; j <= g.last_time(); ++j) {
    parallel_for(g.slice_size(), settings.threads, [&](std::size_t i) {
      report.decisions[j * g.slice_size() + i] = eval.decide(report.field, j, i / stride, i % stride).choice;
    });
  }
  return report;
}

}  // namespace bimp
