#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bimp/diagnostics.hpp"
#include "bimp/model.hpp"
#include "bimp/solver.hpp"

namespace bimp {

/// Impulse with a finite outcome table (delay, shift, base weight, q).
struct DiscreteAction {
  double duration = 0.0;
  double order = 0.0;
  std::vector<TabularOutcome> outcomes;
};

/// A fully discrete problem: frozen dynamics, one space dimension, a finite
/// uniform state set and finite outcome tables. The time grid is
/// t_j = j T / 2^level.
struct DiscreteInstance {
  std::string name;
  double horizon = 1.0;
  int level = 1;
  std::vector<double> states;
  std::vector<double> parameters;
  std::vector<double> prior;
  double x0 = 0.0;
  std::vector<DiscreteAction> actions;
  GainSpec gain;
  std::size_t simplex_nodes = 5;  // solver grid that contains the reachable priors
};

/// Checks the instance (finite positive masses, delays within durations,
/// uniform states, noiseless gain); throws InvalidModelParams.
void validate_instance(const DiscreteInstance& instance);

/// Expectimax over the reachable tree from (t_j, x, m). With learning off the
/// posterior is pinned to the prior. Throws StateEscape when a landing with
/// positive probability leaves the state set.
double exact_value(const DiscreteInstance& instance, std::size_t time_index, double x,
                   const std::vector<double>& prior, bool learning = true);

/// Value at (0, x0, prior).
double exact_value(const DiscreteInstance& instance, bool learning = true);

struct PolicyTreeNode {
  std::size_t time_index = 0;
  double t = 0.0;
  double x = 0.0;
  std::vector<double> prior;
  int action = -1;  // -1 is Wait
  double value = 0.0;
  double probability = 1.0;  // of reaching this node from its parent
  bool terminal = false;
  std::vector<PolicyTreeNode> children;
};

/// Argmax at every reachable node, with Wait preferred on ties and then the
/// lowest action index.
PolicyTreeNode exact_policy(const DiscreteInstance& instance, std::size_t time_index, double x,
                            const std::vector<double>& prior);
PolicyTreeNode exact_policy(const DiscreteInstance& instance);

/// Every prior that can occur below (t_j, x, m), including m itself.
std::vector<std::vector<double>> reachable_priors(const DiscreteInstance& instance, std::size_t time_index,
                                                  double x, const std::vector<double>& prior);

/// The same problem as a tabular model with zero drift and diffusion, and the
/// grid whose space nodes are exactly the state set.
ModelSpec to_model(const DiscreteInstance& instance);
GridOptions to_grid_options(const DiscreteInstance& instance);

/// Reads a tabular, frozen, one-dimensional model back as an instance.
DiscreteInstance from_model(const ModelSpec& spec, const GridOptions& grid, const std::vector<double>& prior,
                            double x0, const std::string& name);

struct OracleComparison {
  std::size_t compared = 0;
  std::size_t skipped = 0;
  double max_abs_diff = 0.0;
  NodeLocation worst;
};

/// Compares a solved field with the oracle at every node whose reachable
/// states stay in the state set and whose reachable priors are simplex nodes.
OracleComparison compare_with_oracle(const DiscreteInstance& instance, const SolveReport& report);

/// Bundled instances used by the test and acceptance suites.
std::vector<DiscreteInstance> bundled_instances();
const DiscreteInstance& bundled_instance(const std::string& name);

}  // namespace bimp
