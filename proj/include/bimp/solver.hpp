#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bimp/grid.hpp"
#include "bimp/model.hpp"
#include "bimp/propagation.hpp"
#include "bimp/quadrature.hpp"
#include "bimp/value_field.hpp"

namespace bimp {

struct QuadratureSettings {
  std::size_t kernel_nodes = 0;  // 0: family default
  std::size_t hermite_nodes = 5;
  std::size_t euler_substeps = 4;
};

struct SolverSettings {
  QuadratureSettings quadrature;
  unsigned threads = 1;
};

/// Decision codes stored per node: kWaitCode or an index into the action grid.
inline constexpr std::int32_t kWaitCode = -1;

struct SolveReport {
  ValueField field;
  std::vector<std::int32_t> decisions;  // same layout as field.values
  std::vector<double> slice_max_update;  // max |v(t_j) - v(t_{j+1})| per j < 2^n
  double seconds = 0.0;
  std::string config_echo;
};

/// φ(z', m') evaluated at an impulse landing and the matching posterior.
using Continuation = std::function<double(const State&, const Prior&)>;

/// 𝒦ᵃφ on a prebuilt kernel: Σ_o Q_o · pd_o · φ(z'_o, posterior_o). Outcomes
/// with zero predictive density carry no mass and are skipped.
double apply_impulse_operator(const Continuation& continuation, const ModelSpec& spec,
                              const OutcomeKernel& kernel, const Prior& prior);

/// Builds the kernel for `action` at `state` (breakpoints at the grid times)
/// and applies the operator above.
double apply_impulse_operator(const Continuation& continuation, const ModelSpec& spec,
                              const GridSpec& grid, const State& state, const Prior& prior,
                              const Impulse& action, const QuadratureSettings& quadrature);

/// Value of an impulse landing when launched from time node `origin`: the
/// terminal rule when ϑ' ≥ T, otherwise diffusion to the next decision node
/// and a read of the later slice.
class FieldContinuation {
 public:
  FieldContinuation(const ValueField& field, const ModelSpec& spec, std::size_t origin,
                    const QuadratureSettings& quadrature, const TensorRule& rule)
      : field_(field), spec_(spec), origin_(origin), substeps_(quadrature.euler_substeps), rule_(rule) {}

  double operator()(const State& landing, const Prior& posterior) const;

 private:
  const ValueField& field_;
  const ModelSpec& spec_;
  std::size_t origin_;
  std::size_t substeps_;
  const TensorRule& rule_;
};

/// Everything compared at one node of the backward induction.
struct NodeDecision {
  double value = 0.0;
  double wait_value = 0.0;
  std::vector<double> impulse_values;
  std::int32_t choice = kWaitCode;
};

/// Reusable per-solve data: kernel resolution, Hermite rule, grid times.
class NodeEvaluator {
 public:
  NodeEvaluator(const ModelSpec& spec, const GridSpec& grid, const QuadratureSettings& quadrature);

  /// Evaluates node (j, s, p) against the slices j+1..2^n already in `field`.
  /// At j = 2^n the wait branch is the terminal gain.
  NodeDecision decide(const ValueField& field, std::size_t j, std::size_t s, std::size_t p) const;

  /// max over the action grid of the impulse branch, -inf if there is none.
  double best_impulse(const ValueField& field, std::size_t j, std::size_t s, std::size_t p) const;

  double impulse_value(const ValueField& field, std::size_t j, const State& state, const Prior& prior,
                       std::size_t action) const;

  const TensorRule& rule() const noexcept { return rule_; }
  std::size_t kernel_nodes() const noexcept { return kernel_nodes_; }

 private:
  const ModelSpec& spec_;
  const GridSpec& grid_;
  QuadratureSettings quadrature_;
  std::size_t kernel_nodes_;
  TensorRule rule_;
  std::vector<double> breakpoints_;
};

/// Fills the t = T slice: max of the terminal gain and every impulse whose
/// landings are all valued by the terminal rule.
void terminal_layer(const ModelSpec& spec, ValueField& field, std::vector<std::int32_t>& decisions,
                    const SolverSettings& settings);

/// v_n on the grid by backward induction. Throws NonFiniteValue if a node
/// value is NaN or infinite.
SolveReport backward_induction(const ModelSpec& spec, const GridSpec& grid,
                               const SolverSettings& settings = {});

/// Rebuilds the decision table of a stored field by re-running every node
/// comparison against the field itself.
SolveReport report_from_field(const ModelSpec& spec, const ValueField& field,
                              const SolverSettings& settings = {});

}  // namespace bimp
