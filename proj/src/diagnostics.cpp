#include "bimp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bimp/errors.hpp"

namespace bimp {

void ResidualStats::add(double r, const NodeLocation& where) {
  if (count == 0 || r < min) {
    min = r;
    argmin = where;
  }
  if (count == 0 || r > max) max = r;
  if (count == 0 || std::abs(r) > max_abs) {
    max_abs = std::abs(r);
    argmax_abs = where;
  }
  mean_abs += std::abs(r);
  ++count;
}

void ResidualStats::finish() {
  if (count > 0) mean_abs /= static_cast<double>(count);
}

namespace {

struct Tap {
  std::size_t index;
  double coef;
};

std::vector<Tap> first_difference(std::size_t i, std::size_t n, double h) {
  if (i > 0 && i + 1 < n) return {{i - 1, -0.5 / h}, {i + 1, 0.5 / h}};
  if (n < 3) return i == 0 ? std::vector<Tap>{{0, -1.0 / h}, {1, 1.0 / h}}
                           : std::vector<Tap>{{n - 2, -1.0 / h}, {n - 1, 1.0 / h}};
  if (i == 0) return {{0, -1.5 / h}, {1, 2.0 / h}, {2, -0.5 / h}};
  return {{n - 3, 0.5 / h}, {n - 2, -2.0 / h}, {n - 1, 1.5 / h}};
}

std::vector<Tap> second_difference(std::size_t i, std::size_t n, double h) {
  const double h2 = h * h;
  if (i > 0 && i + 1 < n) return {{i - 1, 1.0 / h2}, {i, -2.0 / h2}, {i + 1, 1.0 / h2}};
  if (n < 3) return {};
  if (n == 3) return {{0, 1.0 / h2}, {1, -2.0 / h2}, {2, 1.0 / h2}};
  if (i == 0) return {{0, 2.0 / h2}, {1, -5.0 / h2}, {2, 4.0 / h2}, {3, -1.0 / h2}};
  return {{n - 4, -1.0 / h2}, {n - 3, 4.0 / h2}, {n - 2, -5.0 / h2}, {n - 1, 2.0 / h2}};
}

// ℒ_h applied to slice j+1 (space part) plus the forward difference in time.
double discrete_generator(const ValueField& field, const ModelSpec& spec, std::size_t j,
                          std::size_t s, std::size_t p) {
  const GridSpec& g = field.grid;
  const std::size_t d = g.dim();
  const auto later = field.slice(j + 1);
  const std::size_t stride = g.simplex.size();
  const auto idx = g.space_multi_index(s);
  auto read = [&](std::array<std::size_t, kMaxDim> m) {
    return later[g.space_flat_index(std::span<const std::size_t>(m.data(), d)) * stride + p];
  };
  const State here{g.time(j), g.space_point(s)};
  const Coord mu = drift(spec, here);
  const std::vector<double> sig = diffusion(spec, here);

  double value = (field.at(j + 1, s, p) - field.at(j, s, p)) / g.time_step();
  for (std::size_t k = 0; k < d; ++k) {
    if (mu[k] == 0.0) continue;
    double dv = 0.0;
    for (const Tap& tap : first_difference(idx[k], g.axes[k].nodes, g.axes[k].spacing())) {
      auto m = idx;
      m[k] = tap.index;
      dv += tap.coef * read(m);
    }
    value += mu[k] * dv;
  }
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t l = 0; l < d; ++l) {
      double a = 0.0;
      for (std::size_t r = 0; r < d; ++r) a += sig[k * d + r] * sig[l * d + r];
      if (a == 0.0) continue;
      double dv = 0.0;
      if (k == l) {
        for (const Tap& tap : second_difference(idx[k], g.axes[k].nodes, g.axes[k].spacing())) {
          auto m = idx;
          m[k] = tap.index;
          dv += tap.coef * read(m);
        }
      } else {
        for (const Tap& tk : first_difference(idx[k], g.axes[k].nodes, g.axes[k].spacing())) {
          for (const Tap& tl : first_difference(idx[l], g.axes[l].nodes, g.axes[l].spacing())) {
            auto m = idx;
            m[k] = tk.index;
            m[l] = tl.index;
            dv += tk.coef * tl.coef * read(m);
          }
        }
      }
      value += 0.5 * a * dv;
    }
  }
  return value;
}

bool on_box_face(const GridSpec& g, std::size_t s) {
  const auto idx = g.space_multi_index(s);
  for (std::size_t k = 0; k < g.dim(); ++k) {
    if (idx[k] == 0 || idx[k] + 1 == g.axes[k].nodes) return true;
  }
  return false;
}

}  // namespace

QviReport qvi_residuals(const ValueField& field, const ModelSpec& spec, const QuadratureSettings& quadrature) {
  const GridSpec& g = field.grid;
  const NodeEvaluator eval(spec, g, quadrature);
  QviReport report;
  report.combined_values.assign(field.values.size(), 0.0);
  for (std::size_t j = 0; j <= g.last_time(); ++j) {
    for (std::size_t s = 0; s < g.space_count(); ++s) {
      const bool face = on_box_face(g, s);
      for (std::size_t p = 0; p < g.simplex.size(); ++p) {
        const NodeLocation where{j, s, p};
        const double v = field.at(j, s, p);
        const double r2 = v - eval.best_impulse(field, j, s, p);
        report.impulse.add(r2, where);
        double first;
        if (j == g.last_time()) {
          first = v - terminal_gain(spec, State{g.time(j), g.space_point(s)}, g.simplex.node(p));
          report.terminal.add(first, where);
        } else {
          first = -discrete_generator(field, spec, j, s, p);
          report.pde.add(first, where);
        }
        const double r = std::min(first, r2);
        report.combined_values[field.index(j, s, p)] = r;
        report.combined.add(r, where);
        if (!face) report.combined_interior.add(r, where);
      }
    }
  }
  for (ResidualStats* st : {&report.combined, &report.combined_interior, &report.pde, &report.impulse,
                            &report.terminal}) {
    st->finish();
  }
  return report;
}

double CertificateFamily::operator()(double horizon, double t, const Coord& x) const {
  double poly = constant;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i < linear.size()) poly += linear[i] * x[i];
    poly += quadratic * x[i] * x[i];
  }
  return std::exp(time_rate * (2.0 * horizon - t)) * poly;
}

ComparisonCertificate::ComparisonCertificate(CertificateFamily psi, double rho, double delta)
    : psi_(std::move(psi)), rho_(rho), delta_(delta) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorKind::InvalidCertificate, "rho must be positive");
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorKind::InvalidCertificate, "delta must be positive");
  }
  for (double v : {psi_.time_rate, psi_.constant, psi_.quadratic}) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidCertificate, "certificate coefficients must be finite");
  }
}

const ConditionResult& CertificateReport::condition(const std::string& name) const {
  for (const ConditionResult& c : conditions) {
    if (c.name == name) return c;
  }
  throw Error(ErrorKind::InvalidCertificate, "no condition named " + name);
}

bool CertificateReport::passed() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const ConditionResult& c) { return !c.checked || c.pass; });
}

namespace {

struct Worst {
  double margin = std::numeric_limits<double>::infinity();
  double t = 0.0;
  Coord x;
  std::vector<double> prior;

  void offer(double m, double tt, const Coord& xx, std::span<const double> w) {
    if (m < margin) {
      margin = m;
      t = tt;
      x = xx;
      prior.assign(w.begin(), w.end());
    }
  }
};

ConditionResult make_result(const std::string& name, const Worst& w, bool pass) {
  ConditionResult r;
  r.name = name;
  r.pass = pass;
  r.margin = w.margin;
  r.t = w.t;
  r.x = w.x;
  r.prior = w.prior;
  return r;
}

// ℒΨ by finite differences with the grid steps (Ψ is analytic, so the
// stencil is centered everywhere, including the box faces).
double certificate_generator(const CertificateFamily& psi, const ModelSpec& spec, const GridSpec& g,
                             double t, const Coord& x) {
  const double T = spec.horizon;
  const std::size_t d = spec.dim;
  const double H = g.time_step();
  double value = (psi(T, t + H, x) - psi(T, t, x)) / H;
  const State here{t, x};
  const Coord mu = drift(spec, here);
  const std::vector<double> sig = diffusion(spec, here);
  auto shifted = [&](std::size_t k, double dk, std::size_t l, double dl) {
    Coord y = x;
    y[k] += dk;
    y[l] += dl;
    return psi(T, t, y);
  };
  for (std::size_t k = 0; k < d; ++k) {
    const double h = g.axes[k].spacing();
    value += mu[k] * (shifted(k, h, k, 0.0) - shifted(k, -h, k, 0.0)) / (2.0 * h);
    for (std::size_t l = 0; l < d; ++l) {
      double a = 0.0;
      for (std::size_t r = 0; r < d; ++r) a += sig[k * d + r] * sig[l * d + r];
      if (a == 0.0) continue;
      const double hl = g.axes[l].spacing();
      double dv;
      if (k == l) {
        dv = (shifted(k, h, k, 0.0) - 2.0 * psi(T, t, x) + shifted(k, -h, k, 0.0)) / (h * h);
      } else {
        dv = (shifted(k, h, l, hl) - shifted(k, h, l, -hl) - shifted(k, -h, l, hl) + shifted(k, -h, l, -hl)) /
             (4.0 * h * hl);
      }
      value += 0.5 * a * dv;
    }
  }
  return value;
}

}  // namespace

CertificateReport check_certificate(const ComparisonCertificate& cert, const ModelSpec& spec,
                                    const GridSpec& grid, const QuadratureSettings& quadrature) {
  const CertificateFamily& psi = cert.psi();
  const double T = spec.horizon;
  const double rho = cert.rho();
  CertificateReport report;

  ConditionResult smooth;
  smooth.name = "i";
  smooth.checked = false;
  smooth.pass = true;
  smooth.note = "smoothness follows from the declared family; not checked numerically";
  report.conditions.push_back(smooth);

  Worst ii;
  for (std::size_t j = 0; j <= grid.last_time(); ++j) {
    const double t = grid.time(j);
    for (std::size_t s = 0; s < grid.space_count(); ++s) {
      const Coord x = grid.space_point(s);
      ii.offer(rho * psi(T, t, x) - certificate_generator(psi, spec, grid, t, x), t, x, {});
    }
  }
  report.conditions.push_back(make_result("ii", ii, ii.margin >= 0.0));

  const Continuation psi_at = [&](const State& z, const Prior&) { return psi(T, z.t, z.x); };
  Worst iii;
  for (std::size_t j = 0; j <= grid.last_time(); ++j) {
    const double t = grid.time(j);
    for (std::size_t s = 0; s < grid.space_count(); ++s) {
      const Coord x = grid.space_point(s);
      const double here = psi(T, t, x);
      for (std::size_t p = 0; p < grid.simplex.size(); ++p) {
        const Prior& m = grid.simplex.node(p);
        double best = -std::numeric_limits<double>::infinity();
        for (const Impulse& a : spec.actions) {
          best = std::max(best, apply_impulse_operator(psi_at, spec, grid, State{t, x}, m, a, quadrature));
        }
        iii.offer(here - best - cert.delta(), t, x, m.weights());
      }
    }
  }
  report.conditions.push_back(make_result("iii", iii, iii.margin >= 0.0));

  Worst iv;
  for (std::size_t j = 0; j <= grid.last_time(); ++j) {
    const double t = T + grid.time(j);
    for (std::size_t s = 0; s < grid.space_count(); ++s) {
      const Coord x = grid.space_point(s);
      for (std::size_t p = 0; p < grid.simplex.size(); ++p) {
        const Prior& m = grid.simplex.node(p);
        iv.offer(psi(T, t, x) - std::exp(rho * t) * terminal_gain(spec, State{t, x}, m), t, x, m.weights());
      }
    }
  }
  report.conditions.push_back(make_result("iv", iv, iv.margin >= 0.0));

  // inf over x of C + ⟨c, x⟩ + q|x|², then the time factor exp(a(2T - t)) on [0, 2T].
  ConditionResult v;
  v.name = "v";
  double lin2 = 0.0;
  for (double c : psi.linear) lin2 += c * c;
  double poly_inf;
  if (psi.quadratic > 0.0) {
    poly_inf = psi.constant - lin2 / (4.0 * psi.quadratic);
  } else if (psi.quadratic == 0.0 && lin2 == 0.0) {
    poly_inf = psi.constant;
  } else {
    poly_inf = -std::numeric_limits<double>::infinity();
  }
  const double lo_factor = std::min(1.0, std::exp(2.0 * psi.time_rate * T));
  const double hi_factor = std::max(1.0, std::exp(2.0 * psi.time_rate * T));
  v.margin = poly_inf >= 0.0 ? poly_inf * lo_factor : poly_inf * hi_factor;
  v.pass = std::isfinite(v.margin);
  v.x = Coord(spec.dim);
  v.note = "margin is the infimum of the certificate over [0, 2T] x R^d";
  report.conditions.push_back(v);
  return report;
}

}  // namespace bimp
