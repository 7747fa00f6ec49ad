#include "bimp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "bimp/errors.hpp"

namespace bimp {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw Error(ErrorKind::Config, (path.empty() ? std::string("config") : path) + ": " + why);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::vector<double> as_vector(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

Coord as_coord(const json& j, const std::string& path) {
  const std::vector<double> v = as_vector(j, path);
  if (v.empty() || v.size() > kMaxDim) fail(path, "expected 1 to " + std::to_string(kMaxDim) + " entries");
  return Coord::from(v);
}

// Object reader that remembers which keys were consumed so that leftovers
// (typos included) are reported by name.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  const json* find(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  const json& require(const std::string& key) {
    const json* v = find(key);
    if (!v) fail(join(path_, key), "missing required key");
    return *v;
  }

  double number(const std::string& key, double def) {
    const json* v = find(key);
    return v ? as_double(*v, join(path_, key)) : def;
  }
  std::size_t count(const std::string& key, std::size_t def) {
    const json* v = find(key);
    return v ? as_count(*v, join(path_, key)) : def;
  }
  bool flag(const std::string& key, bool def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(join(path_, key), "expected true or false");
    return v->get<bool>();
  }
  std::string text(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (!v) return def;
    if (!v->is_string()) fail(join(path_, key), "expected a string");
    return v->get<std::string>();
  }
  std::vector<double> vector(const std::string& key, std::vector<double> def) {
    const json* v = find(key);
    return v ? as_vector(*v, join(path_, key)) : def;
  }
  Coord coord(const std::string& key, Coord def) {
    const json* v = find(key);
    return v ? as_coord(*v, join(path_, key)) : def;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(path_, "unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<std::size_t> as_counts(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of integers");
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(as_count(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

GainSpec parse_gain(Section& s, std::size_t d) {
  GainSpec g;
  g.x_coef = s.coord("x_coef", Coord(d, 0.0));
  g.quadratic = s.number("quadratic", 0.0);
  g.u_coef = s.number("u_coef", 0.0);
  g.noise_coef = s.number("noise_coef", 0.0);
  g.noise_nodes = s.count("noise_nodes", 8);
  g.constant = s.number("constant", 0.0);
  g.late_penalty = s.number("late_penalty", 0.0);
  g.info_penalty = s.number("info_penalty", 0.0);
  g.bound = s.number("bound", 1e6);
  s.finish();
  return g;
}

ModelSpec parse_model(const json& doc) {
  Section s(doc, "model");
  ModelSpec spec;
  const std::string family = s.text("family", "");
  spec.horizon = s.number("horizon", 1.0);
  spec.dim = s.count("dimension", 1);
  if (spec.dim == 0 || spec.dim > kMaxDim) fail(s.path("dimension"), "must be between 1 and 3");
  const std::size_t d = spec.dim;
  try {
    spec.parameters = ParameterSet(as_vector(s.require("parameters"), s.path("parameters")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(s.path("parameters"), e.what());
  }
  spec.drift = AffineDrift{std::vector<double>(d * d, 0.0), Coord(d, 0.0)};
  if (const json* dr = s.find("drift")) {
    Section ds(*dr, s.path("drift"));
    spec.drift.matrix = ds.vector("matrix", spec.drift.matrix);
    spec.drift.offset = ds.coord("offset", spec.drift.offset);
    ds.finish();
  }
  spec.diffusion = ConstantDiffusion{std::vector<double>(d * d, 0.0)};
  if (const json* df = s.find("diffusion")) {
    Section ds(*df, s.path("diffusion"));
    spec.diffusion.matrix = ds.vector("matrix", spec.diffusion.matrix);
    ds.finish();
  }
  Section is(s.require("impulse"), s.path("impulse"));
  if (family == "censored_execution") {
    spec.impulse = CensoredExecution{is.coord("cost", Coord(d, 0.0))};
  } else if (family == "gaussian_impact") {
    GaussianImpact g;
    g.cost = is.coord("cost", Coord(d, 0.0));
    g.noise_scale = is.number("noise_scale", 0.0);
    spec.impulse = g;
  } else if (family == "tabular") {
    TabularImpact tab;
    const json& tables = is.require("tables");
    if (!tables.is_array()) fail(is.path("tables"), "expected an array of outcome tables");
    for (std::size_t a = 0; a < tables.size(); ++a) {
      const std::string tpath = is.path("tables") + "[" + std::to_string(a) + "]";
      if (!tables[a].is_array()) fail(tpath, "expected an array of outcomes");
      std::vector<TabularOutcome> rows;
      for (std::size_t o = 0; o < tables[a].size(); ++o) {
        Section rs(tables[a][o], tpath + "[" + std::to_string(o) + "]");
        TabularOutcome r;
        r.delay = rs.number("delay", 0.0);
        r.shift = rs.coord("shift", Coord(d, 0.0));
        r.base_weight = rs.number("base_weight", 1.0);
        r.likelihood = as_vector(rs.require("likelihood"), rs.path("likelihood"));
        rs.finish();
        rows.push_back(std::move(r));
      }
      tab.tables.push_back(std::move(rows));
    }
    spec.impulse = tab;
  } else {
    fail(s.path("family"), "unknown model family '" + family +
                               "' (expected censored_execution, gaussian_impact or tabular)");
  }
  is.finish();
  const json& actions = s.require("actions");
  if (!actions.is_array()) fail(s.path("actions"), "expected an array");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    Section as(actions[i], s.path("actions") + "[" + std::to_string(i) + "]");
    Impulse a;
    a.duration = as.number("duration", 0.0);
    a.order = as.coord("order", Coord(d, 0.0));
    as.finish();
    spec.actions.push_back(a);
  }
  {
    const json* g = s.find("gain");
    const json empty = json::object();
    Section gs(g ? *g : empty, s.path("gain"));
    spec.gain = parse_gain(gs, d);
  }
  if (const json* dom = s.find("domain")) {
    Section ds(*dom, s.path("domain"));
    StateDomain domain;
    domain.lower = as_coord(ds.require("lower"), ds.path("lower"));
    domain.upper = as_coord(ds.require("upper"), ds.path("upper"));
    domain.extrapolate = ds.flag("extrapolate", true);
    ds.finish();
    spec.domain = domain;
  }
  s.finish();
  try {
    validate(spec);
  } catch (const Error& e) {
    fail("model", e.what());
  }
  return spec;
}

json coord_json(const Coord& c) { return std::vector<double>(c.begin(), c.end()); }

}  // namespace

CertificateConfig parse_certificate(const json& doc, const std::string& where) {
  Section s(doc, where);
  CertificateConfig c;
  c.psi.time_rate = s.number("time_rate", 0.0);
  c.psi.constant = s.number("constant", 0.0);
  c.psi.linear = Coord::from(s.vector("linear", {}));
  c.psi.quadratic = s.number("quadratic", 0.0);
  c.rho = s.number("rho", 1.0);
  c.delta = s.number("delta", 1.0);
  s.finish();
  return c;
}

json certificate_to_json(const CertificateConfig& c) {
  return {{"time_rate", c.psi.time_rate}, {"constant", c.psi.constant},
          {"linear", coord_json(c.psi.linear)}, {"quadratic", c.psi.quadratic},
          {"rho", c.rho}, {"delta", c.delta}};
}

RunConfig parse_config(const json& doc) {
  Section s(doc, "");
  RunConfig c;
  const std::size_t version = s.count("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) {
    fail("schema_version", "unsupported version " + std::to_string(version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  }
  c.model = parse_model(s.require("model"));
  const std::size_t d = c.model.dim;
  c.prior = as_vector(s.require("prior"), "prior");
  if (c.prior.size() != c.model.parameter_count()) fail("prior", "expected one weight per parameter");
  try {
    Prior check(c.prior);
  } catch (const Error& e) {
    fail("prior", e.what());
  }
  {
    Section is(s.require("initial_state"), "initial_state");
    c.initial.t = is.number("t", 0.0);
    c.initial.x = as_coord(is.require("x"), "initial_state.x");
    if (c.initial.x.size() != d) fail("initial_state.x", "expected " + std::to_string(d) + " entries");
    is.finish();
  }
  {
    const json empty = json::object();
    const json* g = s.find("grid");
    Section gs(g ? *g : empty, "grid");
    c.grid.level = static_cast<int>(gs.count("level", 1));
    c.grid.lower = gs.vector("lower", std::vector<double>(d, -1.0));
    c.grid.upper = gs.vector("upper", std::vector<double>(d, 1.0));
    if (const json* n = gs.find("space_nodes")) {
      c.grid.space_nodes = as_counts(*n, "grid.space_nodes");
    } else {
      c.grid.space_nodes.assign(d, 17);
    }
    c.grid.simplex_nodes = gs.count("simplex_nodes", 5);
    c.grid.clamp = gs.flag("clamp", true);
    gs.finish();
    if (c.grid.lower.size() != d || c.grid.upper.size() != d || c.grid.space_nodes.size() != d) {
      fail("grid", "lower, upper and space_nodes need one entry per dimension");
    }
    try {
      build_grids(c.model, c.grid);
    } catch (const Error& e) {
      fail("grid", e.what());
    }
  }
  if (const json* q = s.find("quadrature")) {
    Section qs(*q, "quadrature");
    c.quadrature.kernel_nodes = qs.count("kernel_nodes", 0);
    c.quadrature.hermite_nodes = qs.count("hermite_nodes", 5);
    c.quadrature.euler_substeps = qs.count("euler_substeps", 4);
    qs.finish();
    if (c.quadrature.hermite_nodes == 0) fail("quadrature.hermite_nodes", "must be positive");
    if (c.quadrature.euler_substeps == 0) fail("quadrature.euler_substeps", "must be positive");
  }
  if (const json* p = s.find("policy")) {
    Section ps(*p, "policy");
    c.epsilon = ps.number("epsilon", 0.0);
    ps.finish();
    if (!(c.epsilon >= 0.0)) fail("policy.epsilon", "must be nonnegative");
  }
  if (const json* sim = s.find("simulation")) {
    Section ss(*sim, "simulation");
    c.simulation.paths = ss.count("paths", 1000);
    c.simulation.seed = ss.find("seed") ? as_count(*ss.find("seed"), "simulation.seed") : 1;
    if (const json* tp = ss.find("true_parameter")) c.simulation.true_parameter = as_count(*tp, "simulation.true_parameter");
    ss.finish();
    if (c.simulation.true_parameter && *c.simulation.true_parameter >= c.model.parameter_count()) {
      fail("simulation.true_parameter", "index out of range");
    }
  }
  if (const json* cert = s.find("certificate")) c.certificate = parse_certificate(*cert, "certificate");
  c.threads = static_cast<unsigned>(s.count("threads", 1));
  if (c.threads == 0) fail("threads", "must be positive");
  c.output_dir = s.text("output_dir", "");
  s.finish();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::Config, path + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                       ": syntax error: " + e.what());
  }
  return parse_config(doc);
}

json model_to_json(const ModelSpec& spec) {
  json impulse = json::object();
  if (const auto* c = std::get_if<CensoredExecution>(&spec.impulse)) {
    impulse["cost"] = coord_json(c->cost);
  } else if (const auto* g = std::get_if<GaussianImpact>(&spec.impulse)) {
    impulse["cost"] = coord_json(g->cost);
    impulse["noise_scale"] = g->noise_scale;
  } else {
    json tables = json::array();
    for (const auto& table : std::get<TabularImpact>(spec.impulse).tables) {
      json rows = json::array();
      for (const TabularOutcome& r : table) {
        rows.push_back({{"delay", r.delay}, {"shift", coord_json(r.shift)},
                        {"base_weight", r.base_weight}, {"likelihood", r.likelihood}});
      }
      tables.push_back(rows);
    }
    impulse["tables"] = tables;
  }
  json actions = json::array();
  for (const Impulse& a : spec.actions) actions.push_back({{"duration", a.duration}, {"order", coord_json(a.order)}});
  const GainSpec& g = spec.gain;
  json out = {
      {"family", family_name(spec.impulse)},
      {"horizon", spec.horizon},
      {"dimension", spec.dim},
      {"parameters", spec.parameters.values()},
      {"drift", {{"matrix", spec.drift.matrix}, {"offset", coord_json(spec.drift.offset)}}},
      {"diffusion", {{"matrix", spec.diffusion.matrix}}},
      {"impulse", impulse},
      {"actions", actions},
      {"gain",
       {{"x_coef", coord_json(g.x_coef)}, {"quadratic", g.quadratic}, {"u_coef", g.u_coef},
        {"noise_coef", g.noise_coef}, {"noise_nodes", g.noise_nodes}, {"constant", g.constant},
        {"late_penalty", g.late_penalty}, {"info_penalty", g.info_penalty}, {"bound", g.bound}}},
  };
  if (spec.domain) {
    out["domain"] = {{"lower", coord_json(spec.domain->lower)},
                     {"upper", coord_json(spec.domain->upper)},
                     {"extrapolate", spec.domain->extrapolate}};
  }
  return out;
}

json config_to_json(const RunConfig& c) {
  json out = {
      {"schema_version", c.schema_version},
      {"model", model_to_json(c.model)},
      {"prior", c.prior},
      {"initial_state", {{"t", c.initial.t}, {"x", coord_json(c.initial.x)}}},
      {"grid",
       {{"level", c.grid.level}, {"lower", c.grid.lower}, {"upper", c.grid.upper},
        {"space_nodes", c.grid.space_nodes}, {"simplex_nodes", c.grid.simplex_nodes}, {"clamp", c.grid.clamp}}},
      {"quadrature",
       {{"kernel_nodes", c.quadrature.kernel_nodes}, {"hermite_nodes", c.quadrature.hermite_nodes},
        {"euler_substeps", c.quadrature.euler_substeps}}},
      {"policy", {{"epsilon", c.epsilon}}},
      {"simulation",
       {{"paths", c.simulation.paths}, {"seed", c.simulation.seed},
        {"true_parameter", c.simulation.true_parameter ? json(*c.simulation.true_parameter) : json(nullptr)}}},
      {"threads", c.threads},
      {"output_dir", c.output_dir},
  };
  if (c.certificate) out["certificate"] = certificate_to_json(*c.certificate);
  return out;
}

std::uint64_t model_hash(const ModelSpec& spec) {
  const std::string text = model_to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace bimp
