#include "bimp/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "bimp/errors.hpp"
#include "bimp/parallel.hpp"
#include "bimp/rng.hpp"

namespace bimp {

namespace {

class PathRunner {
 public:
  PathRunner(const ModelSpec& spec, std::uint64_t seed, std::uint64_t path)
      : spec_(spec),
        brownian_(seed, path, StreamRole::Brownian),
        impulse_(seed, path, StreamRole::Impulse),
        terminal_(seed, path, StreamRole::Terminal),
        parameter_(seed, path, StreamRole::Parameter) {}

  std::size_t draw_parameter(const Prior& m0) {
    const double u = parameter_.uniform();
    double cum = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < m0.size(); ++k) {
      if (m0[k] == 0.0) continue;
      last = k;
      cum += m0[k];
      if (u < cum) return k;
    }
    return last;
  }

  // Euler–Maruyama from (t, x) to `until` in `steps` steps.
  Coord diffuse(double t, Coord x, double until, std::size_t steps, Trajectory& out) {
    if (steps == 0 || !(until > t)) return x;
    const std::size_t d = spec_.dim;
    const double dt = (until - t) / static_cast<double>(steps);
    const double sq = std::sqrt(dt);
    const bool noisy = !spec_.diffusion.is_zero();
    for (std::size_t n = 0; n < steps; ++n) {
      const State here{t, x};
      const Coord mu = drift(spec_, here);
      Coord next = x;
      for (std::size_t i = 0; i < d; ++i) next[i] += mu[i] * dt;
      if (noisy) {
        const std::vector<double> sig = diffusion(spec_, here);
        Coord xi(d);
        for (std::size_t i = 0; i < d; ++i) {
          xi[i] = brownian_.normal();
          out.brownian.push_back(xi[i]);
        }
        for (std::size_t i = 0; i < d; ++i) {
          double s = 0.0;
          for (std::size_t k = 0; k < d; ++k) s += sig[i * d + k] * xi[k];
          next[i] += s * sq;
        }
      }
      x = next;
      t += dt;
    }
    return x;
  }

  // Exact outcome law of an impulse under parameter `truth`.
  ImpulseEvent launch(const State& z, std::size_t action, std::size_t truth, Trajectory& out) {
    const Impulse& a = spec_.actions[action];
    const std::size_t K = spec_.parameter_count();
    const std::size_t d = spec_.dim;
    ImpulseEvent ev;
    ev.tau = z.t;
    ev.action = action;
    ev.likelihood.assign(K, 0.0);
    Coord x = z.x;
    double theta = z.t + a.duration;
    if (const auto* c = std::get_if<CensoredExecution>(&spec_.impulse)) {
      const double u = impulse_.uniform();
      out.impulse_draws.push_back(u);
      const double delay = -std::log(u) / spec_.parameters[truth];
      if (delay < a.duration) {
        theta = z.t + delay;
        for (std::size_t i = 0; i < d; ++i) x[i] += a.order[i] - c->cost[i];
        for (std::size_t k = 0; k < K; ++k) {
          const double r = spec_.parameters[k];
          ev.likelihood[k] = r * std::exp(-r * delay);
        }
      } else {
        for (std::size_t i = 0; i < d; ++i) x[i] -= c->cost[i];
        for (std::size_t k = 0; k < K; ++k) ev.likelihood[k] = std::exp(-spec_.parameters[k] * a.duration);
      }
    } else if (const auto* g = std::get_if<GaussianImpact>(&spec_.impulse)) {
      auto mean_of = [&](std::size_t k) {
        Coord m = z.x;
        for (std::size_t i = 0; i < d; ++i) m[i] += a.order[i] * spec_.parameters[k] - g->cost[i];
        return m;
      };
      x = mean_of(truth);
      if (g->noise_scale == 0.0) {
        for (std::size_t k = 0; k < K; ++k) ev.likelihood[k] = mean_of(k) == x ? 1.0 : 0.0;
      } else {
        for (std::size_t i = 0; i < d; ++i) {
          const double e = impulse_.normal();
          out.impulse_draws.push_back(e);
          x[i] += g->noise_scale * e;
        }
        std::vector<double> dist(K);
        double closest = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
          const Coord m = mean_of(k);
          double s = 0.0;
          for (std::size_t i = 0; i < d; ++i) s += (x[i] - m[i]) * (x[i] - m[i]);
          dist[k] = s;
          closest = std::min(closest, s);
        }
        // Normal densities up to a factor common to every parameter.
        const double inv = 1.0 / (2.0 * g->noise_scale * g->noise_scale);
        for (std::size_t k = 0; k < K; ++k) ev.likelihood[k] = std::exp(-(dist[k] - closest) * inv);
      }
    } else {
      const auto& table = std::get<TabularImpact>(spec_.impulse).tables[action];
      const double u = impulse_.uniform();
      out.impulse_draws.push_back(u);
      double total = 0.0;
      for (const TabularOutcome& o : table) total += o.base_weight * o.likelihood[truth];
      double cum = 0.0;
      const TabularOutcome* pick = nullptr;
      for (const TabularOutcome& o : table) {
        const double w = o.base_weight * o.likelihood[truth];
        if (w <= 0.0) continue;
        pick = &o;
        cum += w;
        if (u * total < cum) break;
      }
      theta = z.t + pick->delay;
      for (std::size_t i = 0; i < d; ++i) x[i] += pick->shift[i];
      ev.likelihood = pick->likelihood;
    }
    ev.theta = theta;
    ev.landing = State{theta, x};
    return ev;
  }

  double terminal_draw() { return spec_.gain.noise_coef == 0.0 ? 0.0 : terminal_.normal(); }

 private:
  const ModelSpec& spec_;
  CounterRng brownian_;
  CounterRng impulse_;
  CounterRng terminal_;
  CounterRng parameter_;
};

}  // namespace

Trajectory simulate(const ModelSpec& spec, const Policy& policy, const State& z0, const Prior& m0,
                    std::uint64_t seed, std::optional<std::size_t> true_parameter,
                    const SimSettings& settings, std::uint64_t path_index) {
  const GridSpec& g = policy.grid;
  const auto start = time_index(g, z0.t);
  if (!start) throw Error(ErrorKind::GridMismatch, "initial time is not a node of the policy grid");
  if (m0.size() != spec.parameter_count()) throw Error(ErrorKind::GridMismatch, "prior size does not match the model");
  PathRunner runner(spec, seed, path_index);
  Trajectory tr;
  tr.true_parameter = true_parameter ? *true_parameter : runner.draw_parameter(m0);
  if (tr.true_parameter >= spec.parameter_count()) {
    throw Error(ErrorKind::InvalidModelParams, "pinned parameter index out of range");
  }

  std::size_t j = *start;
  Coord x = z0.x;
  Prior m = m0;
  double last_theta = -std::numeric_limits<double>::infinity();
  double last_tau = -std::numeric_limits<double>::infinity();
  State end{g.horizon, x};
  tr.path.push_back({g.time(j), x});
  for (;;) {
    const double t = g.time(j);
    const Action act = lookup(policy, State{t, x}, m);
    if (const auto* imp = std::get_if<Impulse>(&act)) {
      if (t < last_theta || t <= last_tau) {
        throw Error(ErrorKind::InadmissibleEvent, "impulse launched inside a latency window");
      }
      const auto a = action_index(spec, *imp);
      if (!a) throw Error(ErrorKind::UnsupportedAction, "policy action is not in the model's action grid");
      ImpulseEvent ev = runner.launch(State{t, x}, *a, tr.true_parameter, tr);
      ev.posterior = bayes_update(m, ev.likelihood);
      m = ev.posterior;
      x = ev.landing.x;
      last_tau = ev.tau;
      last_theta = ev.theta;
      const double theta = ev.theta;
      tr.events.push_back(std::move(ev));
      tr.path.push_back({theta, x});
      const NextTime next = next_decision_time(g, j, theta);
      if (next.beyond_horizon) {
        end = State{theta, x};
        break;
      }
      const std::size_t steps = substeps_for_gap(g.time(next.index) - theta, g.time_step(), settings.euler_substeps);
      x = runner.diffuse(theta, x, g.time(next.index), steps, tr);
      j = next.index;
      tr.path.push_back({g.time(j), x});
      continue;
    }
    if (j == g.last_time()) {
      end = State{t, x};
      break;
    }
    x = runner.diffuse(t, x, g.time(j + 1), settings.euler_substeps, tr);
    ++j;
    tr.path.push_back({g.time(j), x});
  }
  tr.terminal_time = std::max(end.t, g.horizon);
  tr.terminal_state = end;
  tr.terminal_prior = m;
  tr.terminal_noise = runner.terminal_draw();
  tr.gain = gain(spec, end, m, tr.true_parameter, tr.terminal_noise);
  return tr;
}

void validate_trajectory(const Trajectory& trajectory, const GridSpec& grid) {
  double last_tau = -std::numeric_limits<double>::infinity();
  double last_theta = -std::numeric_limits<double>::infinity();
  for (const ImpulseEvent& ev : trajectory.events) {
    if (!(ev.tau > last_tau)) throw Error(ErrorKind::InadmissibleEvent, "launch times are not increasing");
    if (ev.tau < last_theta) throw Error(ErrorKind::InadmissibleEvent, "launch inside the previous latency window");
    if (!time_index(grid, ev.tau)) throw Error(ErrorKind::InadmissibleEvent, "launch off the time grid");
    if (ev.theta < ev.tau) throw Error(ErrorKind::InadmissibleEvent, "landing precedes launch");
    last_tau = ev.tau;
    last_theta = ev.theta;
  }
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

McResult evaluate_mc(const ModelSpec& spec, const Policy& policy, const State& z0, const Prior& m0,
                     std::size_t paths, std::uint64_t seed, unsigned threads,
                     std::optional<std::size_t> true_parameter, const SimSettings& settings) {
  if (paths < 2) throw Error(ErrorKind::InvalidModelParams, "Monte Carlo needs at least two paths");
  std::vector<double> gains(paths);
  parallel_for(paths, threads, [&](std::size_t i) {
    gains[i] = simulate(spec, policy, z0, m0, seed, true_parameter, settings, i).gain;
  });
  // Centering on the first path keeps constant samples exact.
  const double anchor = gains[0];
  std::vector<double> work(paths);
  for (std::size_t i = 0; i < paths; ++i) work[i] = gains[i] - anchor;
  const double n = static_cast<double>(paths);
  const double mean_offset = pairwise_sum(work) / n;
  for (std::size_t i = 0; i < paths; ++i) {
    const double c = gains[i] - anchor - mean_offset;
    work[i] = c * c;
  }
  const double var = pairwise_sum(work) / (n - 1.0);
  McResult r;
  r.mean = anchor + mean_offset;
  r.standard_error = std::sqrt(var / n);
  r.paths = paths;
  r.seed = seed;
  return r;
}

std::string trajectory_csv(const Trajectory& tr) {
  const std::size_t d = tr.terminal_state.x.size();
  const std::size_t K = tr.terminal_prior.size();
  std::string out = "kind,index,t";
  for (std::size_t i = 0; i < d; ++i) out += ",x" + std::to_string(i);
  for (std::size_t k = 0; k < K; ++k) out += ",w" + std::to_string(k);
  out += ",action,theta,gain\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto row = [&](const std::string& kind, std::size_t index, double t, const Coord& x,
                 std::span<const double> w, const std::string& action, const std::string& theta,
                 const std::string& g) {
    out += kind + "," + std::to_string(index) + "," + num(t);
    for (double v : x) out += "," + num(v);
    for (std::size_t k = 0; k < K; ++k) out += "," + (k < w.size() ? num(w[k]) : std::string());
    out += "," + action + "," + theta + "," + g + "\n";
  };
  for (std::size_t i = 0; i < tr.path.size(); ++i) row("sample", i, tr.path[i].t, tr.path[i].x, {}, "", "", "");
  for (std::size_t i = 0; i < tr.events.size(); ++i) {
    const ImpulseEvent& ev = tr.events[i];
    row("event", i, ev.tau, ev.landing.x, ev.posterior.weights(), std::to_string(ev.action), num(ev.theta), "");
  }
  row("terminal", 0, tr.terminal_time, tr.terminal_state.x, tr.terminal_prior.weights(), "", "", num(tr.gain));
  return out;
}

void export_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  out << trajectory_csv(trajectory);
}

}  // namespace bimp
