// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bimp/cli.hpp"
#include "bimp/config.hpp"
#include "bimp/diagnostics.hpp"
#include "bimp/errors.hpp"
#include "bimp/oracle.hpp"
#include "bimp/policy.hpp"
#include "bimp/sim.hpp"

namespace {

using namespace bimp;
namespace fs = std::filesystem;

std::string config_path(const std::string& name) { return std::string(BIMP_CONFIG_DIR) + "/" + name; }

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void note(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Censored demo with a grid override.
RunConfig censored(int level, double lo = -4.0, double hi = 3.875, std::size_t nodes = 64) {
  RunConfig c = load_config(config_path("censored_demo.cfg"));
  c.grid.level = level;
  c.grid.lower = {lo};
  c.grid.upper = {hi};
  c.grid.space_nodes = {nodes};
  return c;
}

std::size_t kernel_nodes(const RunConfig& c) {
  return c.quadrature.kernel_nodes > 0 ? c.quadrature.kernel_nodes : default_kernel_nodes(c.model);
}

// ---------------------------------------------------------------------------

// Every kernel the bundled configurations and instances can produce, sampled
// at a spread of launch states.
std::vector<std::pair<std::string, OutcomeKernel>> bundled_kernels() {
  std::vector<std::pair<std::string, OutcomeKernel>> out;
  for (const char* name : {"censored_demo.cfg", "gaussian_demo.cfg"}) {
    const RunConfig c = load_config(config_path(name));
    const GridSpec g = build_grids(c.model, c.grid);
    std::vector<double> times;
    for (std::size_t j = 0; j < g.time_count(); ++j) times.push_back(g.time(j));
    for (std::size_t j = 0; j < g.time_count(); ++j) {
      for (double x : {-2.0, 0.0, 1.5}) {
        for (const Impulse& a : c.model.actions) {
          out.emplace_back(name, impulse_outcome_kernel(c.model, State{g.time(j), Coord{x}}, a,
                                                        kernel_nodes(c), times));
        }
      }
    }
  }
  for (const DiscreteInstance& inst : bundled_instances()) {
    const ModelSpec spec = to_model(inst);
    for (const Impulse& a : spec.actions) {
      out.emplace_back(inst.name, impulse_outcome_kernel(spec, State{0.0, Coord{inst.x0}}, a, 1));
    }
  }
  return out;
}

Verdict criterion1() {
  Verdict r;
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_norm = 0.0, worst_dirac = 0.0, worst_flat = 0.0;
  for (int trial = 0; trial < 20000; ++trial) {
    const std::size_t k = 1 + trial % 5;
    std::vector<double> raw(k), q(k);
    for (std::size_t i = 0; i < k; ++i) {
      raw[i] = unit(gen) < 0.2 ? 0.0 : unit(gen);
      q[i] = 0.01 + 3.0 * unit(gen);
    }
    raw[trial % k] += 0.1;
    const Prior m = normalize(raw);
    const Prior post = bayes_update(m, q);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += post[i];
    worst_norm = std::max(worst_norm, std::abs(s - 1.0));
    for (std::size_t i = 0; i < k; ++i) if (post[i] < 0.0) worst_norm = 1.0;

    const Prior dirac = Prior::dirac(k, trial % k);
    worst_dirac = std::max(worst_dirac, total_variation(bayes_update(dirac, q).weights(), dirac.weights()));

    const std::vector<double> flat(k, q[0]);
    worst_flat = std::max(worst_flat, total_variation(bayes_update(m, flat).weights(), m.weights()));
  }
  r.check(worst_norm <= 1e-12, fmt("normalization: worst |sum - 1| = %.3e (tol 1e-12)", worst_norm));
  r.check(worst_dirac == 0.0, fmt("Dirac fixed point: worst TV = %.3e", worst_dirac));
  r.check(worst_flat <= 1e-12, fmt("uninformative likelihood: worst TV = %.3e (tol 1e-12)", worst_flat));

  const auto kernels = bundled_kernels();
  double worst_tower = 0.0;
  std::string where;
  for (const auto& [name, kernel] : kernels) {
    const std::size_t K = kernel.outcomes.front().likelihood.size();
    std::vector<Prior> priors{Prior::uniform(K)};
    for (int t = 0; t < 4; ++t) {
      std::vector<double> raw(K);
      for (auto& v : raw) v = unit(gen);
      priors.push_back(normalize(raw));
    }
    for (std::size_t k = 0; k < K; ++k) priors.push_back(Prior::dirac(K, k));
    for (const Prior& m : priors) {
      std::vector<double> tower(K, 0.0);
      for (const auto& o : kernel.outcomes) {
        const double pd = predictive_density(m, o.likelihood);
        if (pd == 0.0) continue;
        const Prior post = bayes_update(m, o.likelihood);
        for (std::size_t k = 0; k < K; ++k) tower[k] += o.base_weight * pd * post[k];
      }
      for (std::size_t k = 0; k < K; ++k) {
        const double e = std::abs(tower[k] - m[k]);
        if (e > worst_tower) {
          worst_tower = e;
          where = name;
        }
      }
    }
  }
  r.check(worst_tower <= 1e-10, fmt("martingale identity over %zu bundled kernels: worst %.3e (tol 1e-10)%s%s",
                                    kernels.size(), worst_tower, where.empty() ? "" : " at ", where.c_str()));
  return r;
}

// ---------------------------------------------------------------------------

Verdict criterion2() {
  Verdict r;
  double worst_default = 0.0;
  std::size_t non_monotone = 0;
  std::size_t points = 0;
  for (int i = 0; i < 20; ++i) {
    const double s = static_cast<double>(i) / 19.0;
    CensoredExecutionParams c;
    c.rates = {0.1 + 0.9 * s, 1.0 + 7.0 * s, 0.5 + 3.0 * s * s};
    c.actions = {{0.05 + 0.95 * s, Coord{0.5}}};
    GaussianImpactParams g;
    g.impacts = {-1.0 + 0.5 * s, 0.2 + 1.8 * s};
    g.noise_scale = 0.2 + 0.8 * s;
    g.actions = {{0.25, Coord{0.25 + 1.5 * s}}};
    for (const ModelSpec& spec : {make_censored_execution_model(c), make_gaussian_impact_model(g)}) {
      const State z{0.5 * s, Coord{1.0 - 2.0 * s}};
      const std::size_t n0 = default_kernel_nodes(spec);
      const std::size_t K = spec.parameter_count();
      const double e0 = impulse_outcome_kernel(spec, z, spec.actions[0], n0).max_mass_error(K);
      const double e1 = impulse_outcome_kernel(spec, z, spec.actions[0], 2 * n0).max_mass_error(K);
      const double e2 = impulse_outcome_kernel(spec, z, spec.actions[0], 4 * n0).max_mass_error(K);
      // Below 1e-13 the error is rounding noise and no longer ordered.
      const double floor = 1e-13;
      if (!(e1 <= std::max(e0, floor) && e2 <= std::max(e1, floor))) ++non_monotone;
      worst_default = std::max(worst_default, e0);
      ++points;
    }
  }
  r.check(worst_default <= 1e-8,
          fmt("per-parameter mass at default quadrature over %zu sweep points: worst |mass - 1| = %.3e (tol 1e-8)",
              points, worst_default));
  r.check(non_monotone == 0, fmt("mass error non-increasing under two resolution doublings: %zu violations",
                                 non_monotone));
  return r;
}

// ---------------------------------------------------------------------------

Verdict criterion3() {
  Verdict r;
  std::size_t instances = 0;
  bool saw_voi = false;
  for (const DiscreteInstance& inst : bundled_instances()) {
    const ModelSpec spec = to_model(inst);
    const GridSpec grid = build_grids(spec, to_grid_options(inst));
    const SolveReport report = backward_induction(spec, grid);
    const OracleComparison cmp = compare_with_oracle(inst, report);
    const double exact = exact_value(inst);
    const double root = interpolate(spec, report.field, State{0.0, Coord{inst.x0}}, Prior(inst.prior));
    const double diff = std::max(cmp.max_abs_diff, std::abs(root - exact));
    r.check(diff <= 1e-9 && cmp.compared > 0,
            fmt("%-20s exact %.12f  solver %.12f  max diff %.2e over %zu nodes", inst.name.c_str(), exact, root,
                diff, cmp.compared));
    ++instances;
    saw_voi = saw_voi || inst.name == "two_period_voi";
  }
  r.check(instances >= 5 && saw_voi, fmt("%zu instances including the value-of-information instance", instances));
  return r;
}

// ---------------------------------------------------------------------------

struct Refinement {
  std::vector<SolveReport> reports;
  std::vector<double> sup_diff;  // ‖v_{n+1} - v_n‖ on the level-1 time nodes
};

Refinement& censored_refinement() {
  static Refinement ref = [] {
    Refinement out;
    for (int n = 1; n <= 3; ++n) {
      const RunConfig c = censored(n);
      out.reports.push_back(backward_induction(c.model, build_grids(c.model, c.grid), {c.quadrature, 1}));
    }
    return out;
  }();
  return ref;
}

Verdict criterion4() {
  Verdict r;
  Refinement& ref = censored_refinement();
  const GridSpec& g1 = ref.reports[0].field.grid;
  r.note(fmt("grid %zu space x %zu simplex nodes", g1.space_count(), g1.simplex.size()));
  ref.sup_diff.clear();
  for (std::size_t n = 0; n + 1 < ref.reports.size(); ++n) {
    const ValueField& a = ref.reports[n].field;
    const ValueField& b = ref.reports[n + 1].field;
    double worst_drop = 0.0;
    double sup = 0.0;
    for (std::size_t j = 0; j < a.grid.time_count(); ++j) {
      for (std::size_t s = 0; s < a.grid.space_count(); ++s)
        for (std::size_t p = 0; p < a.grid.simplex.size(); ++p) {
          const double d = b.at(2 * j, s, p) - a.at(j, s, p);
          worst_drop = std::min(worst_drop, d);
          // Sup-differences are taken on the level-1 time nodes, shared by
          // every level.
          if (j % (std::size_t{1} << n) == 0) sup = std::max(sup, std::abs(d));
        }
    }
    r.check(worst_drop >= -1e-6, fmt("v_%zu <= v_%zu at shared nodes: worst v_%zu - v_%zu = %.3e (tol 1e-6)", n + 1,
                                     n + 2, n + 2, n + 1, worst_drop));
    ref.sup_diff.push_back(sup);
  }
  for (std::size_t n = 0; n < ref.reports.size(); ++n) {
    const RunConfig c = censored(static_cast<int>(n) + 1);
    r.note(fmt("v_%zu(0, x0, m0) = %.12f  (%.2f s)", n + 1,
               interpolate(c.model, ref.reports[n].field, c.initial, Prior(c.prior)), ref.reports[n].seconds));
  }
  r.check(ref.sup_diff[1] < ref.sup_diff[0],
          fmt("sup-differences decrease: |v_2 - v_1| = %.4e, |v_3 - v_2| = %.4e", ref.sup_diff[0], ref.sup_diff[1]));
  return r;
}

// ---------------------------------------------------------------------------

Verdict criterion5() {
  Verdict r;
  Refinement& ref = censored_refinement();
  if (ref.sup_diff.empty()) criterion4();
  const RunConfig c = load_config(config_path("censored_demo.cfg"));
  const GridSpec g = build_grids(c.model, c.grid);
  const SolveReport& rep = ref.reports.at(static_cast<std::size_t>(c.grid.level) - 1);
  const Prior m0(c.prior);
  const double v = interpolate(c.model, rep.field, c.initial, m0);
  const Policy policy = extract_policy(rep, c.model, g, c.epsilon, model_hash(c.model));
  const McResult mc = evaluate_mc(c.model, policy, c.initial, m0, 100000, c.simulation.seed, 1, std::nullopt,
                                  SimSettings{c.quadrature.euler_substeps});

  // Discretization bias: the next refinement's change in value at (z0, m0)
  // plus the kernel mass defect propagated through the gain range.
  double mass_defect = 0.0;
  for (std::size_t j = 0; j < g.time_count(); ++j)
    for (const Impulse& a : c.model.actions)
      mass_defect = std::max(mass_defect, impulse_outcome_kernel(c.model, State{g.time(j), c.initial.x}, a,
                                                                 kernel_nodes(c))
                                              .max_mass_error(c.model.parameter_count()));
  double vmax = 0.0;
  for (double x : rep.field.values) vmax = std::max(vmax, std::abs(x));
  const double next = interpolate(c.model, ref.reports.at(static_cast<std::size_t>(c.grid.level)).field, c.initial, m0);
  const double bias = std::abs(next - v) + mass_defect * vmax;

  r.note(fmt("v_n(z0, m0) = %.6f   J_hat = %.6f   SE = %.6f   paths = %zu   eps = %g   bias bound = %.3e", v,
             mc.mean, mc.standard_error, mc.paths, c.epsilon, bias));
  r.check(mc.mean >= v - c.epsilon - 3.0 * mc.standard_error,
          fmt("J_hat >= v_n - eps - 3 SE  (%.6f >= %.6f)", mc.mean, v - c.epsilon - 3.0 * mc.standard_error));
  r.check(mc.mean <= v + bias + 3.0 * mc.standard_error,
          fmt("J_hat <= v_n + bias + 3 SE  (%.6f <= %.6f)", mc.mean, v + bias + 3.0 * mc.standard_error));
  return r;
}

// ---------------------------------------------------------------------------

// Largest |min(-ℒ_h v, v - 𝒦v)| over t < T and |x| <= half the box: the outer
// layers feel the clamped box, which is a truncation effect rather than
// discretization error.
double core_residual(const ValueField& field, const QviReport& q, double half_width) {
  const GridSpec& g = field.grid;
  double worst = 0.0;
  for (std::size_t j = 0; j < g.last_time(); ++j)
    for (std::size_t s = 0; s < g.space_count(); ++s) {
      if (std::abs(g.space_point(s)[0]) > half_width) continue;
      for (std::size_t p = 0; p < g.simplex.size(); ++p)
        worst = std::max(worst, std::abs(q.combined_values[field.index(j, s, p)]));
    }
  return worst;
}

Verdict criterion6() {
  Verdict r;
  RunConfig c = load_config(config_path("gaussian_demo.cfg"));
  std::vector<double> tol;
  for (int n = 1; n <= 5; ++n) {
    const auto start = std::chrono::steady_clock::now();
    c.grid.level = n;
    c.grid.space_nodes = {8 * (std::size_t{1} << (n - 1)) + 1};
    c.grid.simplex_nodes = 9;
    const GridSpec g = build_grids(c.model, c.grid);
    const SolveReport rep = backward_induction(c.model, g, {c.quadrature, 1});
    const QviReport q = qvi_residuals(rep.field, c.model, c.quadrature);
    const double h = g.time_step();
    const double dx = g.axes[0].spacing();
    tol.push_back(core_residual(rep.field, q, 2.0));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.note(fmt("gaussian level %d  h=%.4f dx=%.4f  core |residual| = %.3e  (/(h+dx^2) = %.3f)  full box [%.3e, %.3e]  "
               "%.1f s",
               n, h, dx, tol.back(), tol.back() / (h + dx * dx), q.combined.min, q.combined.max, secs));
    r.check(q.impulse.min >= -1e-8, fmt("gaussian level %d: min(v - Kv) = %.3e >= -1e-8", n, q.impulse.min));
  }
  bool shrinking = true;
  for (std::size_t i = 1; i < tol.size(); ++i) shrinking = shrinking && tol[i] < tol[i - 1];
  r.check(shrinking, fmt("core residual tolerance shrinks under joint refinement: %.3e -> %.3e", tol.front(),
                         tol.back()));

  Refinement& ref = censored_refinement();
  for (std::size_t n = 0; n < ref.reports.size(); ++n) {
    const RunConfig cc = censored(static_cast<int>(n) + 1);
    const QviReport q = qvi_residuals(ref.reports[n].field, cc.model, cc.quadrature);
    r.check(q.impulse.min >= -1e-8, fmt("censored level %zu: min(v - Kv) = %.3e >= -1e-8, combined in [%.3e, %.3e]",
                                        n + 1, q.impulse.min, q.combined.min, q.combined.max));
  }
  return r;
}

// ---------------------------------------------------------------------------

Verdict criterion7() {
  Verdict r;
  {
    const RunConfig c = load_config(config_path("censored_demo.cfg"));
    const GridSpec g = build_grids(c.model, c.grid);
    std::ifstream in(config_path("certificate_constant.json"));
    const CertificateConfig cc =
        parse_certificate(nlohmann::json::parse(in, nullptr, true, true)["certificate"], "certificate");
    const ComparisonCertificate cert(cc.psi, cc.rho, cc.delta);
    const CertificateReport rep = check_certificate(cert, c.model, g, c.quadrature);
    const ConditionResult& iii = rep.condition("iii");
    r.check(!iii.pass && std::abs(iii.margin + cc.delta) <= 1e-12,
            fmt("constant certificate: (iii) %s with margin %.15f (expected -%.15f)", iii.pass ? "PASS" : "FAIL",
                iii.margin, cc.delta));
  }
  {
    const RunConfig c = load_config(config_path("gaussian_demo.cfg"));
    const GridSpec g = build_grids(c.model, c.grid);
    std::ifstream in(config_path("certificate_pass.json"));
    const CertificateConfig cc =
        parse_certificate(nlohmann::json::parse(in, nullptr, true, true)["certificate"], "certificate");
    const ComparisonCertificate cert(cc.psi, cc.rho, cc.delta);
    const CertificateReport rep = check_certificate(cert, c.model, g, c.quadrature);
    for (const char* name : {"ii", "iii", "iv", "v"}) {
      const ConditionResult& cond = rep.condition(name);
      r.check(cond.checked && cond.pass && cond.margin > 0.0,
              fmt("bundled certificate (%s): %s margin %.6f", name, cond.pass ? "PASS" : "FAIL", cond.margin));
    }
    r.note(fmt("(i): %s", rep.condition("i").note.c_str()));
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Verdict criterion8() {
  Verdict r;
  const fs::path root = fs::temp_directory_path() / "bimp_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  for (const char* name : {"censored_demo.cfg", "gaussian_demo.cfg"}) {
    std::string field_ref, eval_ref;
    bool same = true;
    int failures = 0;
    for (int run = 0; run < 2; ++run) {
      for (unsigned threads : {1u, 4u, 8u}) {
        CliOptions o;
        o.config_path = config_path(name);
        o.threads = threads;
        o.out_dir = (root / (std::string(name) + std::to_string(run) + "_" + std::to_string(threads))).string();
        failures += run_solve(o, sink, sink) != kExitOk;
        failures += run_policy(o, sink, sink) != kExitOk;
        failures += run_evaluate(o, sink, sink) != kExitOk;
        const std::string field = file_bytes(fs::path(o.out_dir) / "value_field.bin");
        const std::string eval = file_bytes(fs::path(o.out_dir) / "evaluation.json");
        if (field_ref.empty()) {
          field_ref = field;
          eval_ref = eval;
        }
        same = same && field == field_ref && eval == eval_ref && !field.empty() && !eval.empty();
      }
    }
    r.check(same && failures == 0,
            fmt("%s: value_field.bin and evaluation.json identical over 2 runs x threads 1/4/8", name));
  }
  fs::remove_all(root);
  return r;
}

// ---------------------------------------------------------------------------

Verdict criterion9() {
  Verdict r;
  const RunConfig narrow = censored(2);
  const RunConfig wide = censored(2, -8.0, 7.875, 128);
  const Prior m0(narrow.prior);
  const double a = interpolate(narrow.model, backward_induction(narrow.model, build_grids(narrow.model, narrow.grid)).field,
                               narrow.initial, m0);
  const double b =
      interpolate(wide.model, backward_induction(wide.model, build_grids(wide.model, wide.grid)).field, wide.initial, m0);
  r.check(std::abs(a - b) < 1e-4,
          fmt("censored demo at (0, 0, m0): box [-4, 3.875] gives %.12f, box [-8, 7.875] gives %.12f, change %.3e",
              a, b, std::abs(a - b)));

  RunConfig g = load_config(config_path("gaussian_demo.cfg"));
  const double ga = interpolate(g.model, backward_induction(g.model, build_grids(g.model, g.grid)).field, g.initial,
                                Prior(g.prior));
  g.grid.lower = {-8.0};
  g.grid.upper = {8.0};
  g.grid.space_nodes = {65};
  const double gb = interpolate(g.model, backward_induction(g.model, build_grids(g.model, g.grid)).field, g.initial,
                                Prior(g.prior));
  r.note(fmt("gaussian demo for reference: box [-4, 4] gives %.6f, box [-8, 8] gives %.6f, change %.3e", ga, gb,
             std::abs(ga - gb)));
  return r;
}

}  // namespace

int main() {
  struct Entry {
    int number;
    const char* title;
    std::function<Verdict()> run;
  };
  const Entry entries[] = {
      {1, "Bayes identities", criterion1},
      {2, "kernel stochasticity", criterion2},
      {3, "oracle equivalence", criterion3},
      {4, "monotone refinement", criterion4},
      {5, "policy performance band", criterion5},
      {6, "QVI residuals", criterion6},
      {7, "certificate checker", criterion7},
      {8, "determinism", criterion8},
      {9, "domain truncation", criterion9},
  };
  int failed = 0;
  for (const Entry& e : entries) {
    const auto start = std::chrono::steady_clock::now();
    Verdict out;
    try {
      out = e.run();
    } catch (const std::exception& ex) {
      out.check(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << e.number << ": " << (out.pass ? "PASS" : "FAIL") << "  " << e.title << "  ("
              << fmt("%.1f s", secs) << ")\n";
    for (const auto& n : out.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
    failed += out.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : fmt("%d criteria failed", failed)) << '\n';
  return failed == 0 ? 0 : 1;
}
