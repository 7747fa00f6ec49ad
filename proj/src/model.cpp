#include "bimp/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bimp/errors.hpp"
#include "bimp/quadrature.hpp"

namespace bimp {

namespace {

[[noreturn]] void bad_param(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::InvalidModelParams, field + ": " + why);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_coord(const Coord& c, std::size_t dim, const std::string& field) {
  if (c.size() != dim) bad_param(field, "expected dimension " + std::to_string(dim));
  if (!all_finite(c.span())) bad_param(field, "entries must be finite");
}

}  // namespace

double OutcomeKernel::mass(std::size_t k) const {
  double s = 0.0;
  for (const Outcome& o : outcomes) s += o.base_weight * o.likelihood[k];
  return s;
}

double OutcomeKernel::max_mass_error(std::size_t parameter_count) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < parameter_count; ++k) worst = std::max(worst, std::abs(mass(k) - 1.0));
  return worst;
}

bool ConstantDiffusion::is_zero() const {
  return std::all_of(matrix.begin(), matrix.end(), [](double v) { return v == 0.0; });
}

std::string family_name(const ImpulseFamily& family) {
  struct Visitor {
    std::string operator()(const CensoredExecution&) const { return "censored_execution"; }
    std::string operator()(const GaussianImpact&) const { return "gaussian_impact"; }
    std::string operator()(const TabularImpact&) const { return "tabular"; }
  };
  return std::visit(Visitor{}, family);
}

void validate(const ModelSpec& spec) {
  if (!(spec.horizon > 0.0) || !std::isfinite(spec.horizon)) bad_param("horizon", "must be positive");
  if (spec.dim == 0 || spec.dim > kMaxDim) {
    bad_param("dimension", "must be between 1 and " + std::to_string(kMaxDim));
  }
  const std::size_t d = spec.dim;
  const std::size_t K = spec.parameters.size();
  if (K == 0) bad_param("parameters", "at least one parameter point is required");
  if (spec.drift.matrix.size() != d * d) bad_param("drift.matrix", "expected d*d entries");
  if (!all_finite(spec.drift.matrix)) bad_param("drift.matrix", "entries must be finite");
  check_coord(spec.drift.offset, d, "drift.offset");
  if (spec.diffusion.matrix.size() != d * d) bad_param("diffusion.matrix", "expected d*d entries");
  if (!all_finite(spec.diffusion.matrix)) bad_param("diffusion.matrix", "entries must be finite");
  if (spec.actions.empty()) bad_param("actions", "the action grid must be nonempty");
  for (std::size_t i = 0; i < spec.actions.size(); ++i) {
    const Impulse& a = spec.actions[i];
    const std::string field = "actions[" + std::to_string(i) + "]";
    if (!(a.duration >= 0.0) || a.duration > spec.horizon) {
      bad_param(field + ".duration", "must lie in [0, horizon]");
    }
    check_coord(a.order, d, field + ".order");
  }
  const GainSpec& g = spec.gain;
  check_coord(g.x_coef, d, "gain.x_coef");
  if (!(g.bound > 0.0)) bad_param("gain.bound", "must be positive");
  if (g.noise_nodes == 0) bad_param("gain.noise_nodes", "must be positive");
  for (double v : {g.quadratic, g.u_coef, g.noise_coef, g.constant, g.late_penalty, g.info_penalty}) {
    if (!std::isfinite(v)) bad_param("gain", "coefficients must be finite");
  }
  if (spec.domain) {
    check_coord(spec.domain->lower, d, "domain.lower");
    check_coord(spec.domain->upper, d, "domain.upper");
    for (std::size_t i = 0; i < d; ++i) {
      if (!(spec.domain->lower[i] < spec.domain->upper[i])) bad_param("domain", "lower must be below upper");
    }
  }

  if (const auto* c = std::get_if<CensoredExecution>(&spec.impulse)) {
    check_coord(c->cost, d, "impulse.cost");
    for (double u : spec.parameters.values()) {
      if (!(u > 0.0)) bad_param("parameters", "execution rates must be positive");
    }
  } else if (const auto* gi = std::get_if<GaussianImpact>(&spec.impulse)) {
    check_coord(gi->cost, d, "impulse.cost");
    if (!(gi->noise_scale >= 0.0) || !std::isfinite(gi->noise_scale)) {
      bad_param("impulse.noise_scale", "must be nonnegative");
    }
  } else {
    const auto& tab = std::get<TabularImpact>(spec.impulse);
    if (tab.tables.size() != spec.actions.size()) {
      bad_param("impulse.tables", "one outcome table per action is required");
    }
    for (std::size_t i = 0; i < tab.tables.size(); ++i) {
      const std::string field = "impulse.tables[" + std::to_string(i) + "]";
      if (tab.tables[i].empty()) bad_param(field, "outcome table is empty");
      std::vector<double> mass(K, 0.0);
      for (const TabularOutcome& o : tab.tables[i]) {
        if (!(o.delay >= 0.0) || o.delay > spec.actions[i].duration) {
          bad_param(field + ".delay", "must lie in [0, duration]");
        }
        check_coord(o.shift, d, field + ".shift");
        if (!(o.base_weight > 0.0)) bad_param(field + ".base_weight", "must be positive");
        if (o.likelihood.size() != K) bad_param(field + ".likelihood", "expected one entry per parameter");
        for (std::size_t k = 0; k < K; ++k) {
          if (!(o.likelihood[k] >= 0.0)) bad_param(field + ".likelihood", "entries must be nonnegative");
          mass[k] += o.base_weight * o.likelihood[k];
        }
      }
      for (std::size_t k = 0; k < K; ++k) {
        if (std::abs(mass[k] - 1.0) > 1e-8) {
          bad_param(field, "outcome law under parameter " + std::to_string(k) + " has mass " +
                               std::to_string(mass[k]));
        }
      }
    }
  }
}

std::size_t default_kernel_nodes(const ModelSpec& spec) {
  return std::holds_alternative<GaussianImpact>(spec.impulse) ? 32 : 16;
}

namespace {

void check_domain(const ModelSpec& spec, const State& state) {
  if (!spec.domain || spec.domain->extrapolate) return;
  for (std::size_t i = 0; i < spec.dim; ++i) {
    if (state.x[i] < spec.domain->lower[i] || state.x[i] > spec.domain->upper[i]) {
      throw Error(ErrorKind::UnsupportedStateDomain,
                  "state outside the declared domain in coordinate " + std::to_string(i));
    }
  }
}

}  // namespace

Coord drift(const ModelSpec& spec, const State& state) {
  check_domain(spec, state);
  const std::size_t d = spec.dim;
  Coord mu(d);
  for (std::size_t i = 0; i < d; ++i) {
    double s = spec.drift.offset[i];
    for (std::size_t j = 0; j < d; ++j) s += spec.drift.matrix[i * d + j] * state.x[j];
    mu[i] = s;
  }
  return mu;
}

std::vector<double> diffusion(const ModelSpec& spec, const State& state) {
  check_domain(spec, state);
  return spec.diffusion.matrix;
}

std::optional<std::size_t> action_index(const ModelSpec& spec, const Impulse& action) {
  for (std::size_t i = 0; i < spec.actions.size(); ++i) {
    if (spec.actions[i] == action) return i;
  }
  return std::nullopt;
}

namespace {

OutcomeKernel censored_kernel(const ModelSpec& spec, const CensoredExecution& fam, const State& s,
                              const Impulse& a, std::size_t resolution,
                              std::span<const double> breakpoints) {
  const std::size_t K = spec.parameters.size();
  const double ell = a.duration;
  Coord filled = s.x;
  Coord missed = s.x;
  for (std::size_t i = 0; i < spec.dim; ++i) {
    filled[i] += a.order[i] - fam.cost[i];
    missed[i] -= fam.cost[i];
  }

  OutcomeKernel kernel;
  if (ell > 0.0) {
    // Panel edges in delay units: 0, interior breakpoints, ell.
    std::vector<double> edges{0.0};
    for (double b : breakpoints) {
      const double off = b - s.t;
      if (off > 0.0 && off < ell) edges.push_back(off);
    }
    edges.push_back(ell);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
      const QuadratureRule rule = gauss_legendre(resolution, edges[p], edges[p + 1]);
      for (std::size_t i = 0; i < rule.size(); ++i) {
        Outcome o;
        o.landing = State{s.t + rule.nodes[i], filled};
        o.base_weight = rule.weights[i];
        o.likelihood.resize(K);
        for (std::size_t k = 0; k < K; ++k) {
          const double u = spec.parameters[k];
          o.likelihood[k] = u * std::exp(-u * rule.nodes[i]);
        }
        kernel.outcomes.push_back(std::move(o));
      }
    }
  }
  Outcome atom;
  atom.landing = State{s.t + ell, missed};
  atom.base_weight = 1.0;
  atom.likelihood.resize(K);
  for (std::size_t k = 0; k < K; ++k) atom.likelihood[k] = std::exp(-spec.parameters[k] * ell);
  kernel.outcomes.push_back(std::move(atom));
  return kernel;
}

OutcomeKernel gaussian_kernel(const ModelSpec& spec, const GaussianImpact& fam, const State& s,
                              const Impulse& a, std::size_t resolution) {
  const std::size_t K = spec.parameters.size();
  const std::size_t d = spec.dim;
  const double landing_t = s.t + a.duration;
  auto mean_of = [&](std::size_t k) {
    Coord m = s.x;
    for (std::size_t i = 0; i < d; ++i) m[i] += a.order[i] * spec.parameters[k] - fam.cost[i];
    return m;
  };

  OutcomeKernel kernel;
  if (fam.noise_scale == 0.0) {
    // Degenerate normal: one atom per distinct landing, indicator likelihoods.
    for (std::size_t k = 0; k < K; ++k) {
      const Coord m = mean_of(k);
      auto it = std::find_if(kernel.outcomes.begin(), kernel.outcomes.end(),
                             [&](const Outcome& o) { return o.landing.x == m; });
      if (it == kernel.outcomes.end()) {
        Outcome o;
        o.landing = State{landing_t, m};
        o.base_weight = 1.0;
        o.likelihood.assign(K, 0.0);
        kernel.outcomes.push_back(std::move(o));
        it = kernel.outcomes.end() - 1;
      }
      it->likelihood[k] = 1.0;
    }
    return kernel;
  }

  // Dominating measure: N(center, σ_F² I) with the center halfway between the
  // extreme parameter means; q is the ratio of normal densities.
  const auto [lo, hi] = std::minmax_element(spec.parameters.values().begin(),
                                            spec.parameters.values().end());
  const double mid_u = 0.5 * (*lo + *hi);
  Coord center = s.x;
  for (std::size_t i = 0; i < d; ++i) center[i] += a.order[i] * mid_u - fam.cost[i];
  std::vector<Coord> means;
  for (std::size_t k = 0; k < K; ++k) means.push_back(mean_of(k));

  const TensorRule rule = tensor_normal_rule(resolution, d);
  const double sig = fam.noise_scale;
  const double inv_two_var = 1.0 / (2.0 * sig * sig);
  kernel.outcomes.reserve(rule.size());
  for (std::size_t n = 0; n < rule.size(); ++n) {
    Outcome o;
    Coord y(d);
    for (std::size_t i = 0; i < d; ++i) y[i] = center[i] + sig * rule.point(n)[i];
    o.landing = State{landing_t, y};
    o.base_weight = rule.weights[n];
    o.likelihood.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      double log_ratio = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double dc = y[i] - center[i];
        const double dm = y[i] - means[k][i];
        log_ratio += (dc * dc - dm * dm) * inv_two_var;
      }
      o.likelihood[k] = std::exp(log_ratio);
    }
    kernel.outcomes.push_back(std::move(o));
  }
  return kernel;
}

OutcomeKernel tabular_kernel(const ModelSpec& spec, const TabularImpact& fam, const State& s,
                             const Impulse& a) {
  const auto idx = action_index(spec, a);
  if (!idx) throw Error(ErrorKind::UnsupportedAction, "action is not part of the tabular action grid");
  OutcomeKernel kernel;
  for (const TabularOutcome& row : fam.tables[*idx]) {
    Outcome o;
    Coord x = s.x;
    for (std::size_t i = 0; i < spec.dim; ++i) x[i] += row.shift[i];
    o.landing = State{s.t + row.delay, x};
    o.base_weight = row.base_weight;
    o.likelihood = row.likelihood;
    kernel.outcomes.push_back(std::move(o));
  }
  return kernel;
}

}  // namespace

OutcomeKernel impulse_outcome_kernel(const ModelSpec& spec, const State& state,
                                     const Impulse& action, std::size_t resolution,
                                     std::span<const double> breakpoints) {
  if (action.order.size() != spec.dim || !(action.duration >= 0.0) ||
      action.duration > spec.horizon) {
    throw Error(ErrorKind::UnsupportedAction, "impulse does not match the model's action space");
  }
  if (resolution == 0) throw Error(ErrorKind::UnsupportedAction, "kernel resolution must be positive");
  struct Visitor {
    const ModelSpec& spec;
    const State& state;
    const Impulse& action;
    std::size_t resolution;
    std::span<const double> breakpoints;
    OutcomeKernel operator()(const CensoredExecution& f) const {
      return censored_kernel(spec, f, state, action, resolution, breakpoints);
    }
    OutcomeKernel operator()(const GaussianImpact& f) const {
      return gaussian_kernel(spec, f, state, action, resolution);
    }
    OutcomeKernel operator()(const TabularImpact& f) const {
      return tabular_kernel(spec, f, state, action);
    }
  };
  return std::visit(Visitor{spec, state, action, resolution, breakpoints}, spec.impulse);
}

double gain(const ModelSpec& spec, const State& state, const Prior& prior, std::size_t k,
            double noise) {
  const GainSpec& g = spec.gain;
  double value = g.constant + g.u_coef * spec.parameters[k] + g.noise_coef * noise;
  for (std::size_t i = 0; i < spec.dim; ++i) {
    value += g.x_coef[i] * state.x[i] + g.quadratic * state.x[i] * state.x[i];
  }
  if (state.t > spec.horizon) value -= g.late_penalty * (state.t - spec.horizon);
  if (g.info_penalty != 0.0) {
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t j = 0; j < prior.size(); ++j) {
      mean += prior[j] * spec.parameters[j];
      second += prior[j] * spec.parameters[j] * spec.parameters[j];
    }
    value -= g.info_penalty * std::max(0.0, second - mean * mean);
  }
  return std::clamp(value, -g.bound, g.bound);
}

double terminal_gain(const ModelSpec& spec, const State& state, const Prior& prior) {
  const GainSpec& g = spec.gain;
  double total = 0.0;
  if (g.noise_coef == 0.0) {
    for (std::size_t k = 0; k < prior.size(); ++k) {
      if (prior[k] == 0.0) continue;
      total += prior[k] * gain(spec, state, prior, k, 0.0);
    }
    return total;
  }
  const QuadratureRule rule = gauss_hermite_normal(g.noise_nodes);
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (prior[k] == 0.0) continue;
    double inner = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      inner += rule.weights[i] * gain(spec, state, prior, k, rule.nodes[i]);
    }
    total += prior[k] * inner;
  }
  return total;
}

ModelSpec make_censored_execution_model(const CensoredExecutionParams& params) {
  ModelSpec spec;
  spec.horizon = params.horizon;
  spec.dim = params.cost.size();
  spec.parameters = ParameterSet(params.rates);
  spec.drift = params.drift;
  spec.diffusion = params.diffusion;
  spec.impulse = CensoredExecution{params.cost};
  spec.gain = params.gain;
  spec.actions = params.actions;
  validate(spec);
  return spec;
}

ModelSpec make_gaussian_impact_model(const GaussianImpactParams& params) {
  ModelSpec spec;
  spec.horizon = params.horizon;
  spec.dim = params.cost.size();
  spec.parameters = ParameterSet(params.impacts);
  spec.drift = params.drift;
  spec.diffusion = params.diffusion;
  spec.impulse = GaussianImpact{params.noise_scale, params.cost};
  spec.gain = params.gain;
  spec.actions = params.actions;
  validate(spec);
  return spec;
}

}  // namespace bimp
