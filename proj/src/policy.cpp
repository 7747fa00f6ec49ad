#include "bimp/policy.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "binary_io.hpp"
#include "bimp/errors.hpp"

namespace bimp {

namespace {

constexpr char kMagic[8] = {'B', 'I', 'M', 'P', 'P', 'O', 'L', '1'};

using nlohmann::json;

json grid_to_json(const GridSpec& g) {
  json axes = json::array();
  for (const SpaceAxis& a : g.axes) axes.push_back({{"lower", a.lower}, {"upper", a.upper}, {"nodes", a.nodes}});
  return {{"horizon", g.horizon},
          {"level", g.level},
          {"clamp", g.clamp},
          {"axes", axes},
          {"parameters", g.simplex.parameter_count()},
          {"simplex_nodes", g.simplex.resolution()}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.horizon = j.at("horizon").get<double>();
  g.level = j.at("level").get<int>();
  g.clamp = j.at("clamp").get<bool>();
  for (const json& a : j.at("axes")) {
    g.axes.push_back(SpaceAxis{a.at("lower").get<double>(), a.at("upper").get<double>(),
                               a.at("nodes").get<std::size_t>()});
  }
  g.simplex = SimplexGrid(j.at("parameters").get<std::size_t>(), j.at("simplex_nodes").get<std::size_t>());
  return g;
}

std::size_t nearest_axis_node(const SpaceAxis& ax, double v, bool clamp, std::size_t k) {
  if (v < ax.lower || v > ax.upper || !std::isfinite(v)) {
    if (!clamp || !std::isfinite(v)) {
      throw Error(ErrorKind::OutOfDomain, "coordinate " + std::to_string(k) + " lies outside the space box");
    }
    v = std::clamp(v, ax.lower, ax.upper);
  }
  const double c = (v - ax.lower) / ax.spacing();
  const auto i = static_cast<std::size_t>(std::max(0.0, std::ceil(c - 0.5)));
  return std::min(i, ax.nodes - 1);
}

}  // namespace

Action Policy::action_at(std::size_t j, std::size_t s, std::size_t p) const {
  const std::int32_t code = table[(j * grid.space_count() + s) * grid.simplex.size() + p];
  if (code == kWaitCode) return Wait{};
  return actions.at(static_cast<std::size_t>(code));
}

Policy extract_policy(const SolveReport& report, const ModelSpec& spec, const GridSpec& grid,
                      double epsilon, std::uint64_t model_hash) {
  if (!(report.field.grid == grid) || report.decisions.size() != grid.node_count()) {
    throw Error(ErrorKind::GridMismatch, "solve report was computed on a different grid");
  }
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::InvalidModelParams, "policy epsilon must be nonnegative");
  Policy policy;
  policy.grid = grid;
  policy.table = report.decisions;
  policy.actions = spec.actions;
  policy.epsilon = epsilon;
  policy.model_hash = model_hash;
  return policy;
}

Action lookup(const Policy& policy, const State& state, const Prior& prior) {
  const GridSpec& g = policy.grid;
  if (state.t > g.horizon) return Wait{};
  if (!(state.t >= 0.0)) throw Error(ErrorKind::OutOfDomain, "negative time in policy lookup");
  const double c = state.t / g.time_step();
  const auto j = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, std::ceil(c - 0.5))), g.last_time());
  std::array<std::size_t, kMaxDim> idx{};
  for (std::size_t k = 0; k < g.dim(); ++k) idx[k] = nearest_axis_node(g.axes[k], state.x[k], g.clamp, k);
  const std::size_t s = g.space_flat_index(std::span<const std::size_t>(idx.data(), g.dim()));
  return policy.action_at(j, s, g.simplex.nearest(prior.weights()));
}

void save_policy(const Policy& policy, const std::string& path) {
  json actions = json::array();
  for (const Impulse& a : policy.actions) {
    actions.push_back({{"duration", a.duration}, {"order", std::vector<double>(a.order.begin(), a.order.end())}});
  }
  const json header = {{"grid", grid_to_json(policy.grid)},
                       {"epsilon", policy.epsilon},
                       {"tie_break", "wait_then_lowest_action_index"},
                       {"model_hash", policy.model_hash},
                       {"actions", actions}};
  const std::string text = header.dump();
  std::ofstream out = io::open_out(path);
  out.write(kMagic, sizeof kMagic);
  io::put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (std::int32_t code : policy.table) io::put<std::int32_t>(out, code);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

Policy load_policy(const std::string& path) {
  std::ifstream in = io::open_in(path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw Error(ErrorKind::Io, path + " is not a policy file");
  const auto length = io::get<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorKind::Io, "truncated policy header in " + path);
  Policy policy;
  try {
    const json header = json::parse(text);
    policy.grid = grid_from_json(header.at("grid"));
    policy.epsilon = header.at("epsilon").get<double>();
    policy.model_hash = header.at("model_hash").get<std::uint64_t>();
    for (const json& a : header.at("actions")) {
      policy.actions.push_back(
          Impulse{a.at("duration").get<double>(), Coord::from(a.at("order").get<std::vector<double>>())});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Io, "malformed policy header in " + path + ": " + e.what());
  }
  policy.table.resize(policy.grid.node_count());
  for (std::int32_t& code : policy.table) {
    code = io::get<std::int32_t>(in);
    if (code < kWaitCode || code >= static_cast<std::int32_t>(policy.actions.size())) {
      throw Error(ErrorKind::Io, "policy table entry out of range in " + path);
    }
  }
  return policy;
}

}  // namespace bimp
