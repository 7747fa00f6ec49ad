#include "bimp/value_field.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "binary_io.hpp"
#include "bimp/errors.hpp"

namespace bimp {

namespace {

constexpr char kMagic[8] = {'B', 'I', 'M', 'P', 'V', 'F', '0', '1'};

double snap_fraction(double f) {
  if (std::abs(f) <= 1e-12) return 0.0;
  if (std::abs(f - 1.0) <= 1e-12) return 1.0;
  return f;
}

}  // namespace

std::size_t space_stencil(const GridSpec& grid, const Coord& x, std::array<Stencil, 8>& out) {
  const std::size_t d = grid.dim();
  std::array<std::size_t, kMaxDim> base{};
  std::array<double, kMaxDim> frac{};
  for (std::size_t k = 0; k < d; ++k) {
    const SpaceAxis& ax = grid.axes[k];
    double v = x[k];
    if (v < ax.lower || v > ax.upper) {
      if (!grid.clamp || !std::isfinite(v)) {
        throw Error(ErrorKind::OutOfDomain, "coordinate " + std::to_string(k) + " = " +
                                                std::to_string(v) + " lies outside the space box");
      }
      v = std::clamp(v, ax.lower, ax.upper);
    }
    const double c = (v - ax.lower) / ax.spacing();
    auto i = static_cast<std::size_t>(std::floor(c));
    if (i > ax.nodes - 2) i = ax.nodes - 2;
    base[k] = i;
    frac[k] = snap_fraction(c - static_cast<double>(i));
  }
  std::size_t n = 0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    for (std::size_t k = 0; k < d; ++k) {
      const bool up = (corner >> (d - 1 - k)) & 1U;
      w *= up ? frac[k] : 1.0 - frac[k];
      flat = flat * grid.axes[k].nodes + base[k] + (up ? 1 : 0);
    }
    if (w > 0.0) out[n++] = {flat, w};
  }
  return n;
}

double interpolate_slice(const GridSpec& grid, std::span<const double> slice, const Coord& x,
                         const Prior& prior) {
  std::array<Stencil, 8> sx;
  std::array<Stencil, 3> sp;
  const std::size_t nx = space_stencil(grid, x, sx);
  const std::size_t np = grid.simplex.stencil(prior.weights(), sp);
  const std::size_t stride = grid.simplex.size();
  double total = 0.0;
  for (std::size_t a = 0; a < nx; ++a) {
    double inner = 0.0;
    for (std::size_t b = 0; b < np; ++b) inner += sp[b].weight * slice[sx[a].index * stride + sp[b].index];
    total += sx[a].weight * inner;
  }
  return total;
}

double interpolate(const ModelSpec& spec, const ValueField& field, const State& state,
                   const Prior& prior) {
  if (state.t > field.grid.horizon) return terminal_gain(spec, state, prior);
  const auto j = time_index(field.grid, state.t);
  if (!j) {
    throw Error(ErrorKind::OutOfDomain, "time " + std::to_string(state.t) + " is not a grid node");
  }
  return interpolate_slice(field.grid, field.slice(*j), state.x, prior);
}

void save_field(const ValueField& field, const std::string& path) {
  std::ofstream out = io::open_out(path);
  const GridSpec& g = field.grid;
  out.write(kMagic, sizeof kMagic);
  io::put<double>(out, g.horizon);
  io::put<std::int32_t>(out, g.level);
  io::put<std::uint32_t>(out, g.clamp ? 1U : 0U);
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(g.dim()));
  for (const SpaceAxis& ax : g.axes) {
    io::put<double>(out, ax.lower);
    io::put<double>(out, ax.upper);
    io::put<std::uint64_t>(out, ax.nodes);
  }
  io::put<std::uint64_t>(out, g.simplex.parameter_count());
  io::put<std::uint64_t>(out, g.simplex.resolution());
  io::put<std::uint64_t>(out, field.values.size());
  for (double v : field.values) io::put<double>(out, v);
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path);
}

ValueField load_field(const std::string& path) {
  std::ifstream in = io::open_in(path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic)) {
    throw Error(ErrorKind::Io, path + " is not a value field file");
  }
  GridSpec g;
  g.horizon = io::get<double>(in);
  g.level = io::get<std::int32_t>(in);
  g.clamp = io::get<std::uint32_t>(in) != 0;
  const auto d = io::get<std::uint32_t>(in);
  if (d == 0 || d > kMaxDim) throw Error(ErrorKind::Io, "bad space dimension in " + path);
  for (std::uint32_t k = 0; k < d; ++k) {
    SpaceAxis ax;
    ax.lower = io::get<double>(in);
    ax.upper = io::get<double>(in);
    ax.nodes = io::get<std::uint64_t>(in);
    g.axes.push_back(ax);
  }
  const auto K = io::get<std::uint64_t>(in);
  const auto r = io::get<std::uint64_t>(in);
  g.simplex = SimplexGrid(K, r);
  ValueField field(g);
  const auto count = io::get<std::uint64_t>(in);
  if (count != field.values.size()) throw Error(ErrorKind::Io, "value count does not match grid in " + path);
  for (double& v : field.values) v = io::get<double>(in);
  return field;
}

void export_field_csv(const ValueField& field, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  const GridSpec& g = field.grid;
  std::fputs("t", f);
  for (std::size_t k = 0; k < g.dim(); ++k) std::fprintf(f, ",x%zu", k);
  for (std::size_t k = 0; k < g.simplex.parameter_count(); ++k) std::fprintf(f, ",w%zu", k);
  std::fputs(",value\n", f);
  for (std::size_t j = 0; j < g.time_count(); ++j) {
    for (std::size_t s = 0; s < g.space_count(); ++s) {
      const Coord x = g.space_point(s);
      for (std::size_t p = 0; p < g.simplex.size(); ++p) {
        std::fprintf(f, "%.17g", g.time(j));
        for (double v : x) std::fprintf(f, ",%.17g", v);
        for (double w : g.simplex.node(p).weights()) std::fprintf(f, ",%.17g", w);
        std::fprintf(f, ",%.17g\n", field.at(j, s, p));
      }
    }
  }
  std::fclose(f);
}

}  // namespace bimp
