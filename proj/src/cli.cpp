#include "bimp/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bimp/config.hpp"
#include "bimp/diagnostics.hpp"
#include "bimp/errors.hpp"
#include "bimp/oracle.hpp"
#include "bimp/policy.hpp"
#include "bimp/sim.hpp"
#include "bimp/solver.hpp"
#include "bimp/value_field.hpp"

namespace bimp {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Run {
  RunConfig config;
  GridSpec grid;
  Prior prior;
  std::uint64_t hash = 0;
  fs::path out;
};

Run prepare(const CliOptions& o) {
  if (o.config_path.empty()) throw Error(ErrorKind::Config, "--config is required");
  Run r;
  r.config = load_config(o.config_path);
  if (o.level) r.config.grid.level = *o.level;
  if (o.threads) r.config.threads = *o.threads;
  if (o.seed) r.config.simulation.seed = *o.seed;
  validate(r.config.model);
  r.grid = build_grids(r.config.model, r.config.grid);
  r.prior = Prior(r.config.prior);
  r.hash = model_hash(r.config.model);
  if (!o.out_dir.empty()) {
    r.out = o.out_dir;
  } else if (!r.config.output_dir.empty()) {
    r.out = r.config.output_dir;
  } else if (const char* env = std::getenv("BIMP_OUT_DIR"); env != nullptr && *env != '\0') {
    r.out = env;
  } else {
    r.out = "out";
  }
  fs::create_directories(r.out);
  return r;
}

SolverSettings solver_settings(const Run& r) { return {r.config.quadrature, r.config.threads}; }

void write_json(const fs::path& path, const json& doc) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path.string());
  f << doc.dump(2) << '\n';
}

json coord_json(const Coord& c) { return std::vector<double>(c.begin(), c.end()); }

json location_json(const ValueField& field, const NodeLocation& at) {
  const auto& g = field.grid;
  const Prior& m = g.simplex.node(at.simplex_index);
  return {{"t", g.time(at.time_index)},
          {"x", coord_json(g.space_point(at.space_index))},
          {"prior", std::vector<double>(m.weights().begin(), m.weights().end())},
          {"node", {at.time_index, at.space_index, at.simplex_index}}};
}

json stats_json(const ValueField& field, const ResidualStats& s) {
  if (s.count == 0) return {{"count", 0}};
  return {{"count", s.count},
          {"min", s.min},
          {"max", s.max},
          {"max_abs", s.max_abs},
          {"mean_abs", s.mean_abs},
          {"argmin", location_json(field, s.argmin)},
          {"argmax_abs", location_json(field, s.argmax_abs)}};
}

json qvi_json(const ValueField& field, const QviReport& q) {
  return {{"combined", stats_json(field, q.combined)},
          {"combined_interior", stats_json(field, q.combined_interior)},
          {"pde", stats_json(field, q.pde)},
          {"impulse", stats_json(field, q.impulse)},
          {"terminal", stats_json(field, q.terminal)}};
}

fs::path field_path(const CliOptions& o, const Run& r) {
  return o.field_path.empty() ? r.out / "value_field.bin" : fs::path(o.field_path);
}

ValueField load_matching_field(const fs::path& path, const Run& r) {
  ValueField field = load_field(path.string());
  if (!(field.grid == r.grid)) {
    throw Error(ErrorKind::GridMismatch, path.string() + " was solved on a different grid");
  }
  return field;
}

Policy load_matching_policy(const CliOptions& o, const Run& r) {
  const fs::path path = o.policy_path.empty() ? r.out / "policy.bin" : fs::path(o.policy_path);
  Policy policy = load_policy(path.string());
  if (policy.model_hash != r.hash) {
    throw Error(ErrorKind::HashMismatch, path.string() + " has model hash " + hash_hex(policy.model_hash) +
                                             ", config has " + hash_hex(r.hash));
  }
  return policy;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::HashMismatch:
      return kExitHashMismatch;
    case ErrorKind::Config:
    case ErrorKind::Io:
    case ErrorKind::InvalidModelParams:
    case ErrorKind::InvalidCertificate:
    case ErrorKind::UnsupportedSimplexDimension:
    case ErrorKind::UnsupportedStateDomain:
    case ErrorKind::UnsupportedAction:
    case ErrorKind::GridMismatch:
    case ErrorKind::DegenerateMass:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int run_solve(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Run r = prepare(o);
    const SolveReport report = backward_induction(r.config.model, r.grid, solver_settings(r));
    save_field(report.field, (r.out / "value_field.bin").string());
    export_field_csv(report.field, (r.out / "value_field.csv").string());
    const QviReport qvi = qvi_residuals(report.field, r.config.model, r.config.quadrature);
    const double v0 = interpolate(r.config.model, report.field, r.config.initial, r.prior);

    json doc = {{"value_at_initial", v0},
                {"initial_state", {{"t", r.config.initial.t}, {"x", coord_json(r.config.initial.x)}}},
                {"prior", r.config.prior},
                {"model_hash", hash_hex(r.hash)},
                {"grid", {{"level", r.grid.level}, {"nodes", r.grid.node_count()}}},
                {"qvi_residuals", qvi_json(report.field, qvi)},
                {"slice_max_update", report.slice_max_update},
                {"seconds", report.seconds},
                {"config", config_to_json(r.config)}};
    write_json(r.out / "solve_report.json", doc);

    out.precision(17);
    out << "value " << v0 << '\n';
    out << "qvi combined min " << qvi.combined.min << " max " << qvi.combined.max << '\n';
    out << "wrote " << (r.out / "value_field.bin").string() << '\n';
    return kExitOk;
  });
}

int run_policy(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Run r = prepare(o);
    const ValueField field = load_matching_field(field_path(o, r), r);
    const SolveReport report = report_from_field(r.config.model, field, solver_settings(r));
    const Policy policy = extract_policy(report, r.config.model, r.grid, r.config.epsilon, r.hash);
    save_policy(policy, (r.out / "policy.bin").string());
    std::size_t impulses = 0;
    for (const auto code : policy.table) impulses += code != kWaitCode ? 1 : 0;
    out << "policy nodes " << policy.table.size() << " impulse nodes " << impulses << '\n';
    out << "wrote " << (r.out / "policy.bin").string() << '\n';
    return kExitOk;
  });
}

int run_simulate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Run r = prepare(o);
    const Policy policy = load_matching_policy(o, r);
    const SimSettings sim{r.config.quadrature.euler_substeps};
    const Trajectory path = simulate(r.config.model, policy, r.config.initial, r.prior,
                                     r.config.simulation.seed, r.config.simulation.true_parameter, sim);
    validate_trajectory(path, r.grid);
    export_trajectory_csv(path, (r.out / "trajectory.csv").string());
    out.precision(17);
    out << "gain " << path.gain << " impulses " << path.events.size() << '\n';
    out << "wrote " << (r.out / "trajectory.csv").string() << '\n';
    return kExitOk;
  });
}

int run_evaluate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Run r = prepare(o);
    const Policy policy = load_matching_policy(o, r);
    const SimSettings sim{r.config.quadrature.euler_substeps};
    const McResult mc = evaluate_mc(r.config.model, policy, r.config.initial, r.prior, r.config.simulation.paths,
                                    r.config.simulation.seed, r.config.threads,
                                    r.config.simulation.true_parameter, sim);
    json doc = {{"mean", mc.mean},
                {"standard_error", mc.standard_error},
                {"paths", mc.paths},
                {"seed", mc.seed},
                {"epsilon", policy.epsilon},
                {"model_hash", hash_hex(r.hash)}};
    out.precision(17);
    out << "mean " << mc.mean << " se " << mc.standard_error << " paths " << mc.paths << '\n';
    int code = kExitOk;
    if (!o.field_path.empty()) {
      const ValueField field = load_matching_field(o.field_path, r);
      const double v0 = interpolate(r.config.model, field, r.config.initial, r.prior);
      const double lower = v0 - policy.epsilon - 3.0 * mc.standard_error;
      const bool ok = mc.mean >= lower;
      doc["band"] = {{"value", v0}, {"lower", lower}, {"pass", ok}};
      out << "band mean >= value - eps - 3 se: " << (ok ? "PASS" : "FAIL") << " (value " << v0 << ")\n";
      if (!ok) code = kExitNumeric;
    }
    write_json(r.out / "evaluation.json", doc);
    return code;
  });
}

int run_check(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Run r = prepare(o);
    json doc = {{"model_hash", hash_hex(r.hash)}};
    bool ok = true;
    out.precision(17);

    std::optional<CertificateConfig> cert = r.config.certificate;
    if (!o.certificate_path.empty()) {
      std::ifstream f(o.certificate_path);
      if (!f) throw Error(ErrorKind::Io, "cannot read " + o.certificate_path);
      json raw;
      try {
        raw = json::parse(f, nullptr, true, true);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::InvalidCertificate, o.certificate_path + ": " + e.what());
      }
      try {
        cert = raw.contains("certificate") ? parse_certificate(raw["certificate"], "certificate")
                                           : parse_certificate(raw, "certificate");
      } catch (const Error& e) {
        throw Error(ErrorKind::InvalidCertificate, e.what());
      }
    }

    const fs::path fpath = field_path(o, r);
    const bool have_field = !o.field_path.empty() || (!cert && fs::exists(fpath));
    if (have_field) {
      const ValueField field = load_matching_field(fpath, r);
      const QviReport q = qvi_residuals(field, r.config.model, r.config.quadrature);
      doc["qvi_residuals"] = qvi_json(field, q);
      out << "qvi combined min " << q.combined.min << " at t=" << field.grid.time(q.combined.argmin.time_index)
          << " node " << q.combined.argmin.space_index << "/" << q.combined.argmin.simplex_index << '\n';
      out << "qvi impulse side min " << q.impulse.min << '\n';
    }

    if (cert) {
      const ComparisonCertificate c(cert->psi, cert->rho, cert->delta);
      const CertificateReport rep = check_certificate(c, r.config.model, r.grid, r.config.quadrature);
      json conds = json::array();
      for (const auto& cond : rep.conditions) {
        const char* verdict = !cond.checked ? "SKIP" : (cond.pass ? "PASS" : "FAIL");
        conds.push_back({{"name", cond.name},
                         {"checked", cond.checked},
                         {"pass", cond.pass},
                         {"margin", cond.margin},
                         {"t", cond.t},
                         {"x", coord_json(cond.x)},
                         {"prior", cond.prior},
                         {"note", cond.note}});
        out << "(" << cond.name << ") " << verdict;
        if (cond.checked) out << " margin " << cond.margin << " at t=" << cond.t;
        if (!cond.note.empty()) out << " " << cond.note;
        out << '\n';
      }
      doc["certificate"] = {{"input", certificate_to_json(*cert)}, {"conditions", conds}, {"passed", rep.passed()}};
      ok = ok && rep.passed();
    }

    if (!have_field && !cert) {
      throw Error(ErrorKind::Config, "check needs --field, --certificate or a certificate section");
    }
    write_json(r.out / "check_report.json", doc);
    out << (ok ? "check passed" : "check failed") << '\n';
    return kExitOk;
  });
}

int run_oracle_compare(const CliOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<DiscreteInstance> instances;
    fs::path dir;
    unsigned threads = o.threads.value_or(1);
    QuadratureSettings quad;
    if (!o.config_path.empty()) {
      const Run r = prepare(o);
      instances.push_back(from_model(r.config.model, r.config.grid, r.config.prior, r.config.initial.x[0],
                                     fs::path(o.config_path).stem().string()));
      if (o.level) instances.back().level = *o.level;
      dir = r.out;
      threads = r.config.threads;
      quad = r.config.quadrature;
    } else {
      instances = bundled_instances();
      dir = o.out_dir.empty() ? fs::path("out") : fs::path(o.out_dir);
      fs::create_directories(dir);
    }

    json rows = json::array();
    out.precision(17);
    for (const auto& inst : instances) {
      const ModelSpec spec = to_model(inst);
      const GridSpec grid = build_grids(spec, to_grid_options(inst));
      const SolveReport report = backward_induction(spec, grid, {quad, threads});
      const OracleComparison cmp = compare_with_oracle(inst, report);
      const double exact = exact_value(inst);
      const double solved = interpolate(spec, report.field, State{0.0, Coord{inst.x0}}, Prior(inst.prior));
      rows.push_back({{"instance", inst.name},
                      {"exact_value", exact},
                      {"solver_value", solved},
                      {"compared", cmp.compared},
                      {"skipped", cmp.skipped},
                      {"max_abs_diff", cmp.max_abs_diff}});
      out << inst.name << ": exact " << exact << " solver " << solved << " max diff " << cmp.max_abs_diff
          << " over " << cmp.compared << " nodes\n";
    }
    write_json(dir / "oracle_compare.json", {{"instances", rows}});
    return kExitOk;
  });
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Finite-horizon impulse control with Bayesian learning"};
  app.require_subcommand(1);
  CliOptions o;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  int level = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration (JSON)");
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--seed", seed, "override simulation.seed");
    sub->add_option("--threads", threads, "worker cap")->check(CLI::PositiveNumber);
    sub->add_option("--level", level, "override grid.level")->check(CLI::NonNegativeNumber);
  };
  auto* solve = app.add_subcommand("solve", "backward induction; writes value_field.bin and solve_report.json");
  auto* policy = app.add_subcommand("policy", "extract the feedback policy from a solved field");
  auto* sim = app.add_subcommand("simulate", "one path under a stored policy; writes trajectory.csv");
  auto* eval = app.add_subcommand("evaluate", "Monte Carlo value of a stored policy");
  auto* check = app.add_subcommand("check", "QVI residuals of a field and/or a comparison certificate");
  auto* oracle = app.add_subcommand("oracle-compare", "solver against exact expectimax on discrete instances");
  for (auto* sub : {solve, policy, sim, eval, check, oracle}) common(sub);
  policy->add_option("--field", o.field_path, "value field file");
  sim->add_option("--policy", o.policy_path, "policy file");
  eval->add_option("--policy", o.policy_path, "policy file");
  eval->add_option("--field", o.field_path, "value field file for the performance band");
  check->add_option("--field", o.field_path, "value field file");
  check->add_option("--certificate", o.certificate_path, "certificate JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  for (auto* sub : {solve, policy, sim, eval, check, oracle}) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed") > 0) o.seed = seed;
    if (sub->count("--threads") > 0) o.threads = threads;
    if (sub->count("--level") > 0) o.level = level;
  }

  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
  if (solve->parsed()) return run_solve(o, out, err);
  if (policy->parsed()) return run_policy(o, out, err);
  if (sim->parsed()) return run_simulate(o, out, err);
  if (eval->parsed()) return run_evaluate(o, out, err);
  if (check->parsed()) return run_check(o, out, err);
  return run_oracle_compare(o, out, err);
}

}  // namespace bimp
