#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bimp/bayes.hpp"
#include "bimp/coord.hpp"

namespace bimp {

/// Time–space point z = (t, x). Times run over [0, 2T]: actions launched
/// before T may end after it.
struct State {
  double t = 0.0;
  Coord x;
};

/// An order launched for at most `duration` time units with payload `order`.
struct Impulse {
  double duration = 0.0;
  Coord order;

  friend bool operator==(const Impulse&, const Impulse&) = default;
};

/// The "do nothing now" action.
struct Wait {
  friend bool operator==(const Wait&, const Wait&) = default;
};

using Action = std::variant<Wait, Impulse>;

inline bool is_wait(const Action& a) { return std::holds_alternative<Wait>(a); }

/// One atom of a discretized outcome law: where the system lands, the mass of
/// the dominating measure there, and the density of the landing under each
/// parameter with respect to that measure.
struct Outcome {
  State landing;
  double base_weight = 0.0;
  std::vector<double> likelihood;
};

struct OutcomeKernel {
  std::vector<Outcome> outcomes;

  /// Σ_o base_weight_o · likelihood_o[k]; equals 1 for an exact kernel.
  double mass(std::size_t k) const;
  /// max_k |mass(k) - 1|.
  double max_mass_error(std::size_t parameter_count) const;
};

/// μ(t, x) = A x + b, A stored row-major.
struct AffineDrift {
  std::vector<double> matrix;
  Coord offset;
};

/// σ(t, x) = Σ, a constant d×d matrix stored row-major.
struct ConstantDiffusion {
  std::vector<double> matrix;

  bool is_zero() const;
};

/// Limit order with an exponential execution delay of unknown rate u. A fill
/// before the deadline moves x by `order - cost`; an unfilled order expires at
/// t + duration and moves x by `-cost`. Only the end time of the action is
/// informative about u.
struct CensoredExecution {
  Coord cost;
};

/// Market order whose impact is `order * u` plus Gaussian noise of scale
/// `noise_scale`; the action always lasts exactly `duration`.
struct GaussianImpact {
  double noise_scale = 0.0;
  Coord cost;
};

/// Finite outcome tables, one per entry of the action grid. Used for fully
/// discrete instances where every landing can be placed on a grid node.
struct TabularOutcome {
  double delay = 0.0;
  Coord shift;
  double base_weight = 0.0;
  std::vector<double> likelihood;
};

struct TabularImpact {
  std::vector<std::vector<TabularOutcome>> tables;
};

using ImpulseFamily = std::variant<CensoredExecution, GaussianImpact, TabularImpact>;

std::string family_name(const ImpulseFamily& family);

/// g(t, x, m, u, e) = clamp(⟨c_x, x⟩ + c_2 |x|² + c_u u + c_e e + c_0
///                          - p_late (t - T)^+ - p_info Var_m(u), ±bound)
/// with e ~ N(0, 1) the terminal noise.
struct GainSpec {
  Coord x_coef;
  double quadratic = 0.0;
  double u_coef = 0.0;
  double noise_coef = 0.0;
  std::size_t noise_nodes = 8;
  double constant = 0.0;
  double late_penalty = 0.0;
  double info_penalty = 0.0;
  double bound = 1e6;
};

struct StateDomain {
  Coord lower;
  Coord upper;
  bool extrapolate = true;
};

struct ModelSpec {
  double horizon = 1.0;
  std::size_t dim = 1;
  ParameterSet parameters;
  AffineDrift drift;
  ConstantDiffusion diffusion;
  ImpulseFamily impulse;
  GainSpec gain;
  std::vector<Impulse> actions;
  std::optional<StateDomain> domain;

  std::size_t parameter_count() const noexcept { return parameters.size(); }
};

/// Throws InvalidModelParams naming the offending field.
void validate(const ModelSpec& spec);

/// Quadrature resolution used for outcome kernels when none is configured.
std::size_t default_kernel_nodes(const ModelSpec& spec);

Coord drift(const ModelSpec& spec, const State& state);
std::vector<double> diffusion(const ModelSpec& spec, const State& state);

/// Discretized law of the landing z' after launching `action` at `state`.
/// `breakpoints` are times at which the continuous part of a delay law is
/// split into separate quadrature panels (the solver passes its time grid so
/// that each panel maps to a single next decision time).
OutcomeKernel impulse_outcome_kernel(const ModelSpec& spec, const State& state,
                                     const Impulse& action, std::size_t resolution,
                                     std::span<const double> breakpoints = {});

/// Index of `action` in the model's action grid, if present.
std::optional<std::size_t> action_index(const ModelSpec& spec, const Impulse& action);

/// g at one parameter index and one noise value.
double gain(const ModelSpec& spec, const State& state, const Prior& prior, std::size_t k,
            double noise);

/// ∬ g(state, prior, u, e) dP_ε(e) dm(u).
double terminal_gain(const ModelSpec& spec, const State& state, const Prior& prior);

struct CensoredExecutionParams {
  double horizon = 1.0;
  std::vector<double> rates{0.5, 2.0};
  std::vector<Impulse> actions{{0.25, Coord{0.5}}, {0.5, Coord{0.5}}};
  Coord cost{0.125};
  AffineDrift drift{{0.0}, Coord{0.0}};
  ConstantDiffusion diffusion{{0.0}};
  GainSpec gain{.x_coef = Coord{1.0}, .late_penalty = 1.0};
};

struct GaussianImpactParams {
  double horizon = 1.0;
  std::vector<double> impacts{-0.5, 1.0};
  std::vector<Impulse> actions{{0.125, Coord{0.5}}, {0.25, Coord{1.0}}};
  double noise_scale = 0.25;
  Coord cost{0.05};
  AffineDrift drift{{0.0}, Coord{0.0}};
  ConstantDiffusion diffusion{{0.3}};
  GainSpec gain{.x_coef = Coord{1.0}, .late_penalty = 1.0};
};

ModelSpec make_censored_execution_model(const CensoredExecutionParams& params);
ModelSpec make_gaussian_impact_model(const GaussianImpactParams& params);

}  // namespace bimp
