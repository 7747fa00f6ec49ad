#include "bimp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "bimp/errors.hpp"

namespace bimp {

namespace {

[[noreturn]] void bad_instance(const DiscreteInstance& inst, const std::string& why) {
  throw Error(ErrorKind::InvalidModelParams, "instance " + inst.name + ": " + why);
}

// Everything below deliberately avoids the solver's grid, interpolation and
// kernel code: the tree is walked with plain arithmetic on the tables.
class Expectimax {
 public:
  Expectimax(const DiscreteInstance& inst, bool learning) : inst_(inst), learning_(learning) {
    validate_instance(inst);
    steps_ = std::size_t{1} << inst.level;
  }

  double time(std::size_t j) const {
    return static_cast<double>(j) * inst_.horizon / static_cast<double>(steps_);
  }

  std::size_t state_index(double x) const {
    const double tol = 1e-9 * std::max(1.0, std::abs(x));
    for (std::size_t i = 0; i < inst_.states.size(); ++i) {
      if (std::abs(inst_.states[i] - x) <= tol) return i;
    }
    throw Error(ErrorKind::StateEscape, "instance " + inst_.name + ": landing x = " + std::to_string(x) +
                                            " leaves the state set");
  }

  double reward(double t, double x, const std::vector<double>& m) const {
    const GainSpec& g = inst_.gain;
    double mean = 0.0;
    double second = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      mean += m[k] * inst_.parameters[k];
      second += m[k] * inst_.parameters[k] * inst_.parameters[k];
    }
    const double var = std::max(0.0, second - mean * mean);
    double total = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (m[k] == 0.0) continue;
      double v = g.constant + g.x_coef[0] * x + g.quadratic * x * x + g.u_coef * inst_.parameters[k];
      if (t > inst_.horizon) v -= g.late_penalty * (t - inst_.horizon);
      v -= g.info_penalty * var;
      total += m[k] * std::clamp(v, -g.bound, g.bound);
    }
    return total;
  }

  struct Branch {
    double probability;
    double t;
    double x;
    std::vector<double> posterior;
    bool terminal;
    std::size_t next;  // time index when not terminal
  };

  std::vector<Branch> branches(std::size_t j, double x, const std::vector<double>& m, std::size_t a) const {
    std::vector<Branch> out;
    const double t = time(j);
    for (const TabularOutcome& o : inst_.actions[a].outcomes) {
      double pd = 0.0;
      for (std::size_t k = 0; k < m.size(); ++k) pd += m[k] * o.likelihood[k];
      if (pd == 0.0) continue;
      Branch b;
      b.probability = o.base_weight * pd;
      b.t = t + o.delay;
      b.x = x + o.shift[0];
      state_index(b.x);
      if (learning_) {
        b.posterior.resize(m.size());
        for (std::size_t k = 0; k < m.size(); ++k) b.posterior[k] = m[k] * o.likelihood[k] / pd;
      } else {
        b.posterior = m;
      }
      b.terminal = b.t >= inst_.horizon;
      b.next = 0;
      if (!b.terminal) {
        std::size_t s = j + 1;
        while (time(s) < b.t) ++s;
        b.next = s;
      }
      out.push_back(std::move(b));
    }
    return out;
  }

  // Values of Wait (index 0) and each action (index a + 1).
  std::vector<double> options(std::size_t j, double x, const std::vector<double>& m) {
    std::vector<double> v(inst_.actions.size() + 1);
    v[0] = j == steps_ ? reward(time(j), x, m) : value(j + 1, x, m);
    for (std::size_t a = 0; a < inst_.actions.size(); ++a) {
      double total = 0.0;
      for (const Branch& b : branches(j, x, m, a)) {
        total += b.probability * (b.terminal ? reward(b.t, b.x, b.posterior) : value(b.next, b.x, b.posterior));
      }
      v[a + 1] = total;
    }
    return v;
  }

  static int argmax(const std::vector<double>& v) {
    int best = -1;
    double best_v = v[0];
    for (std::size_t a = 1; a < v.size(); ++a) {
      if (v[a] > best_v) {
        best_v = v[a];
        best = static_cast<int>(a) - 1;
      }
    }
    return best;
  }

  double value(std::size_t j, double x, const std::vector<double>& m) {
    const auto key = std::make_tuple(j, state_index(x), m);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const std::vector<double> v = options(j, x, m);
    const double best = *std::max_element(v.begin(), v.end());
    memo_.emplace(key, best);
    return best;
  }

  PolicyTreeNode policy(std::size_t j, double x, const std::vector<double>& m) {
    PolicyTreeNode node;
    node.time_index = j;
    node.t = time(j);
    node.x = x;
    node.prior = m;
    const std::vector<double> v = options(j, x, m);
    node.action = argmax(v);
    node.value = v[static_cast<std::size_t>(node.action + 1)];
    if (node.action < 0) {
      if (j < steps_) node.children.push_back(policy(j + 1, x, m));
      return node;
    }
    for (const Branch& b : branches(j, x, m, static_cast<std::size_t>(node.action))) {
      PolicyTreeNode child;
      if (b.terminal) {
        child.t = b.t;
        child.x = b.x;
        child.prior = b.posterior;
        child.terminal = true;
        child.value = reward(b.t, b.x, b.posterior);
      } else {
        child = policy(b.next, b.x, b.posterior);
      }
      child.probability = b.probability;
      node.children.push_back(std::move(child));
    }
    return node;
  }

  void collect(std::size_t j, double x, const std::vector<double>& m, std::set<std::vector<double>>& out,
               std::set<std::tuple<std::size_t, std::size_t, std::vector<double>>>& seen) {
    if (!seen.emplace(j, state_index(x), m).second) return;
    out.insert(m);
    if (j < steps_) collect(j + 1, x, m, out, seen);
    for (std::size_t a = 0; a < inst_.actions.size(); ++a) {
      for (const Branch& b : branches(j, x, m, a)) {
        if (b.terminal) {
          out.insert(b.posterior);
        } else {
          collect(b.next, b.x, b.posterior, out, seen);
        }
      }
    }
  }

 private:
  const DiscreteInstance& inst_;
  bool learning_;
  std::size_t steps_ = 1;
  std::map<std::tuple<std::size_t, std::size_t, std::vector<double>>, double> memo_;
};

}  // namespace

void validate_instance(const DiscreteInstance& inst) {
  const std::size_t K = inst.parameters.size();
  if (!(inst.horizon > 0.0)) bad_instance(inst, "horizon must be positive");
  if (inst.level < 0 || inst.level > 12) bad_instance(inst, "level must lie in [0, 12]");
  if (K == 0 || inst.prior.size() != K) bad_instance(inst, "prior and parameters must have the same nonzero size");
  double mass = 0.0;
  for (double w : inst.prior) {
    if (!(w >= 0.0)) bad_instance(inst, "prior weights must be nonnegative");
    mass += w;
  }
  if (std::abs(mass - 1.0) > 1e-12) bad_instance(inst, "prior weights must sum to 1");
  if (inst.states.size() < 2) bad_instance(inst, "at least two states are required");
  const double h = inst.states[1] - inst.states[0];
  for (std::size_t i = 1; i < inst.states.size(); ++i) {
    if (std::abs(inst.states[i] - inst.states[i - 1] - h) > 1e-12 || !(h > 0.0)) {
      bad_instance(inst, "states must be uniformly spaced and increasing");
    }
  }
  if (inst.gain.noise_coef != 0.0) bad_instance(inst, "terminal noise is not supported");
  if (inst.gain.x_coef.size() != 1) bad_instance(inst, "gain.x_coef must have one entry");
  for (const DiscreteAction& a : inst.actions) {
    if (!(a.duration >= 0.0) || a.duration > inst.horizon) bad_instance(inst, "action duration out of range");
    std::vector<double> total(K, 0.0);
    for (const TabularOutcome& o : a.outcomes) {
      if (o.delay < 0.0 || o.delay > a.duration) bad_instance(inst, "outcome delay exceeds the duration");
      if (o.likelihood.size() != K || o.shift.size() != 1) bad_instance(inst, "outcome has the wrong shape");
      for (std::size_t k = 0; k < K; ++k) total[k] += o.base_weight * o.likelihood[k];
    }
    for (double t : total) {
      if (std::abs(t - 1.0) > 1e-12) bad_instance(inst, "outcome table is not a probability law");
    }
  }
}

double exact_value(const DiscreteInstance& instance, std::size_t time_index, double x,
                   const std::vector<double>& prior, bool learning) {
  Expectimax tree(instance, learning);
  return tree.value(time_index, x, prior);
}

double exact_value(const DiscreteInstance& instance, bool learning) {
  return exact_value(instance, 0, instance.x0, instance.prior, learning);
}

PolicyTreeNode exact_policy(const DiscreteInstance& instance, std::size_t time_index, double x,
                            const std::vector<double>& prior) {
  Expectimax tree(instance, true);
  return tree.policy(time_index, x, prior);
}

PolicyTreeNode exact_policy(const DiscreteInstance& instance) {
  return exact_policy(instance, 0, instance.x0, instance.prior);
}

std::vector<std::vector<double>> reachable_priors(const DiscreteInstance& instance, std::size_t time_index,
                                                  double x, const std::vector<double>& prior) {
  Expectimax tree(instance, true);
  std::set<std::vector<double>> out;
  std::set<std::tuple<std::size_t, std::size_t, std::vector<double>>> seen;
  tree.collect(time_index, x, prior, out, seen);
  return {out.begin(), out.end()};
}

ModelSpec to_model(const DiscreteInstance& inst) {
  validate_instance(inst);
  ModelSpec spec;
  spec.horizon = inst.horizon;
  spec.dim = 1;
  spec.parameters = ParameterSet(inst.parameters);
  spec.drift = AffineDrift{{0.0}, Coord{0.0}};
  spec.diffusion = ConstantDiffusion{{0.0}};
  TabularImpact tab;
  for (const DiscreteAction& a : inst.actions) {
    spec.actions.push_back(Impulse{a.duration, Coord{a.order}});
    tab.tables.push_back(a.outcomes);
  }
  spec.impulse = tab;
  spec.gain = inst.gain;
  validate(spec);
  return spec;
}

GridOptions to_grid_options(const DiscreteInstance& inst) {
  GridOptions g;
  g.level = inst.level;
  g.lower = {inst.states.front()};
  g.upper = {inst.states.back()};
  g.space_nodes = {inst.states.size()};
  g.simplex_nodes = inst.simplex_nodes;
  g.clamp = true;
  return g;
}

DiscreteInstance from_model(const ModelSpec& spec, const GridOptions& grid, const std::vector<double>& prior,
                            double x0, const std::string& name) {
  const auto* tab = std::get_if<TabularImpact>(&spec.impulse);
  if (!tab || spec.dim != 1 || !spec.diffusion.is_zero() || spec.drift.matrix[0] != 0.0 ||
      spec.drift.offset[0] != 0.0) {
    throw Error(ErrorKind::InvalidModelParams, "oracle instances need a frozen one-dimensional tabular model");
  }
  DiscreteInstance inst;
  inst.name = name;
  inst.horizon = spec.horizon;
  inst.level = grid.level;
  const SpaceAxis axis{grid.lower.at(0), grid.upper.at(0), grid.space_nodes.at(0)};
  for (std::size_t i = 0; i < axis.nodes; ++i) inst.states.push_back(axis.node(i));
  inst.parameters = spec.parameters.values();
  inst.prior = prior;
  inst.x0 = x0;
  for (std::size_t a = 0; a < spec.actions.size(); ++a) {
    inst.actions.push_back(DiscreteAction{spec.actions[a].duration, spec.actions[a].order[0], tab->tables[a]});
  }
  inst.gain = spec.gain;
  inst.simplex_nodes = grid.simplex_nodes;
  validate_instance(inst);
  return inst;
}

OracleComparison compare_with_oracle(const DiscreteInstance& instance, const SolveReport& report) {
  const GridSpec& g = report.field.grid;
  OracleComparison cmp;
  Expectimax tree(instance, true);
  for (std::size_t j = 0; j <= g.last_time(); ++j) {
    for (std::size_t s = 0; s < g.space_count(); ++s) {
      const double x = g.space_point(s)[0];
      for (std::size_t p = 0; p < g.simplex.size(); ++p) {
        const auto w = g.simplex.node(p).weights();
        const std::vector<double> m(w.begin(), w.end());
        try {
          std::set<std::vector<double>> priors;
          std::set<std::tuple<std::size_t, std::size_t, std::vector<double>>> seen;
          tree.collect(j, x, m, priors, seen);
          const bool on_grid = std::all_of(priors.begin(), priors.end(), [&](const std::vector<double>& q) {
            return total_variation(q, g.simplex.node(g.simplex.nearest(q)).weights()) <= 1e-12;
          });
          if (!on_grid) {
            ++cmp.skipped;
            continue;
          }
          const double diff = std::abs(tree.value(j, x, m) - report.field.at(j, s, p));
          ++cmp.compared;
          if (diff > cmp.max_abs_diff || cmp.compared == 1) {
            cmp.max_abs_diff = std::max(cmp.max_abs_diff, diff);
            cmp.worst = NodeLocation{j, s, p};
          }
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::StateEscape) throw;
          ++cmp.skipped;
        }
      }
    }
  }
  return cmp;
}

namespace {

std::vector<double> grid_states(double lo, double hi, double step) {
  std::vector<double> s;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) s.push_back(lo + static_cast<double>(i) * step);
  return s;
}

TabularOutcome row(double delay, double shift, double base, std::vector<double> q) {
  return TabularOutcome{delay, Coord{shift}, base, std::move(q)};
}

GainSpec linear_gain(double late_penalty) {
  GainSpec g;
  g.x_coef = Coord{1.0};
  g.late_penalty = late_penalty;
  return g;
}

}  // namespace

std::vector<DiscreteInstance> bundled_instances() {
  std::vector<DiscreteInstance> out;

  // An action that only costs: waiting is optimal everywhere.
  DiscreteInstance frozen;
  frozen.name = "frozen_no_profit";
  frozen.states = grid_states(-4.0, 4.0, 1.0);
  frozen.parameters = {0.0, 1.0};
  frozen.prior = {0.5, 0.5};
  frozen.actions = {{0.5, 0.0, {row(0.5, -1.0, 1.0, {1.0, 1.0})}}};
  frozen.gain = linear_gain(0.0);
  out.push_back(frozen);

  // One impulse adds u in {0, 1}; the landing is at or after T.
  DiscreteInstance one_shot;
  one_shot.name = "one_shot";
  one_shot.states = grid_states(-4.0, 4.0, 1.0);
  one_shot.parameters = {0.0, 1.0};
  one_shot.prior = {0.5, 0.5};
  one_shot.actions = {{1.0, 1.0, {row(1.0, 0.0, 1.0, {1.0, 0.0}), row(1.0, 1.0, 1.0, {0.0, 1.0})}}};
  one_shot.gain = linear_gain(0.0);
  out.push_back(one_shot);

  DiscreteInstance penalized = one_shot;
  penalized.name = "one_shot_penalized";
  penalized.gain = linear_gain(1.0);
  out.push_back(penalized);

  // A fair bet that reveals u: betting early pays for the information.
  DiscreteInstance voi;
  voi.name = "two_period_voi";
  voi.states = grid_states(-4.0, 4.0, 1.0);
  voi.parameters = {0.0, 1.0};
  voi.prior = {0.5, 0.5};
  voi.actions = {{0.5, 1.0, {row(0.5, 1.0, 1.0, {0.0, 1.0}), row(0.5, -1.0, 1.0, {1.0, 0.0})}}};
  voi.gain = linear_gain(1.0);
  out.push_back(voi);

  // Partially informative probe and a biased bet on a finer time grid.
  DiscreteInstance graded;
  graded.name = "graded_evidence";
  graded.level = 2;
  graded.states = grid_states(-4.0, 4.0, 1.0);
  graded.parameters = {0.0, 1.0};
  graded.prior = {0.5, 0.5};
  graded.actions = {
      {0.5, 0.0, {row(0.5, 0.0, 0.5, {1.5, 0.5}), row(0.5, 0.0, 0.5, {0.5, 1.5})}},
      {0.5, 1.0, {row(0.5, 1.0, 0.5, {0.5, 1.5}), row(0.5, -1.0, 0.5, {1.5, 0.5})}},
  };
  graded.gain = linear_gain(1.0);
  graded.simplex_nodes = 21;
  out.push_back(graded);

  // Three parameter points; each action separates them differently.
  DiscreteInstance three;
  three.name = "three_param";
  three.states = grid_states(-4.0, 4.0, 1.0);
  three.parameters = {0.0, 1.0, 2.0};
  three.prior = {0.5, 0.25, 0.25};
  three.actions = {
      {0.5, 1.0, {row(0.5, -1.0, 1.0, {1.0, 0.0, 0.0}), row(0.5, 1.0, 1.0, {0.0, 1.0, 1.0})}},
      {0.5, 2.0, {row(0.5, 2.0, 1.0, {0.0, 0.0, 1.0}), row(0.5, -1.0, 1.0, {1.0, 1.0, 0.0})}},
  };
  three.gain = linear_gain(1.0);
  three.simplex_nodes = 13;
  out.push_back(three);

  // Resting order: only the fast regime can fill early; an expiry is
  // censored evidence for the slow regime.
  DiscreteInstance pool;
  pool.name = "dark_pool_toy";
  pool.level = 2;
  pool.states = grid_states(-2.0, 4.0, 0.25);
  pool.parameters = {2.0, 0.5};
  pool.prior = {0.5, 0.5};
  pool.actions = {{0.5, 1.0, {row(0.25, 0.75, 0.5, {1.0, 0.0}), row(0.5, -0.25, 0.5, {1.0, 2.0})}}};
  pool.gain = linear_gain(1.0);
  pool.simplex_nodes = 31;
  out.push_back(pool);
  return out;
}

const DiscreteInstance& bundled_instance(const std::string& name) {
  static const std::vector<DiscreteInstance> all = bundled_instances();
  for (const DiscreteInstance& inst : all) {
    if (inst.name == name) return inst;
  }
  throw Error(ErrorKind::InvalidModelParams, "no bundled instance named " + name);
}

}  // namespace bimp
