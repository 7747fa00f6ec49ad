#include "bimp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bimp/errors.hpp"
#include "bimp/model.hpp"

namespace bimp {

SimplexGrid::SimplexGrid(std::size_t parameter_count, std::size_t resolution)
    : k_(parameter_count), r_(parameter_count == 1 ? 1 : resolution) {
  if (k_ == 0) throw Error(ErrorKind::UnsupportedSimplexDimension, "no parameters");
  if (k_ > 3) {
    throw Error(ErrorKind::UnsupportedSimplexDimension,
                "simplex grids support at most 3 parameters, got " + std::to_string(k_));
  }
  if (k_ > 1 && r_ < 2) throw Error(ErrorKind::UnsupportedSimplexDimension, "simplex resolution must be >= 2");
  const double den = static_cast<double>(r_ - 1);
  if (k_ == 1) {
    nodes_.push_back(Prior::dirac(1, 0));
  } else if (k_ == 2) {
    for (std::size_t i = 0; i < r_; ++i) {
      nodes_.emplace_back(std::vector<double>{static_cast<double>(i) / den,
                                              static_cast<double>(r_ - 1 - i) / den});
    }
  } else {
    for (std::size_t i = 0; i < r_; ++i) {
      for (std::size_t j = 0; i + j < r_; ++j) {
        std::vector<double> w{static_cast<double>(i) / den, static_cast<double>(j) / den,
                              static_cast<double>(r_ - 1 - i - j) / den};
        // Three exact-ish thirds may miss 1 by an ulp; absorb it in the last entry.
        const double excess = w[0] + w[1] + w[2] - 1.0;
        w[2] = std::max(0.0, w[2] - excess);
        nodes_.emplace_back(std::move(w));
      }
    }
  }
}

namespace {

// Weights that are grid multiples up to rounding map exactly onto their node.
double snap(double a) {
  const double r = std::round(a);
  return std::abs(a - r) <= 1e-12 * std::max(1.0, std::abs(a)) ? r : a;
}

}  // namespace

std::size_t SimplexGrid::index_of(std::size_t i, std::size_t j) const {
  return i * r_ - (i == 0 ? 0 : i * (i - 1) / 2) + j;
}

std::size_t SimplexGrid::stencil(std::span<const double> w, std::array<Stencil, 3>& out) const {
  if (k_ == 1) {
    out[0] = {0, 1.0};
    return 1;
  }
  const double scale = static_cast<double>(r_ - 1);
  if (k_ == 2) {
    const double a = snap(std::clamp(w[0] * scale, 0.0, scale));
    std::size_t i = static_cast<std::size_t>(std::floor(a));
    if (i > r_ - 2) i = r_ - 2;
    const double f = a - static_cast<double>(i);
    std::size_t n = 0;
    if (f < 1.0) out[n++] = {i, 1.0 - f};
    if (f > 0.0) out[n++] = {i + 1, f};
    return n;
  }
  double a = snap(std::max(0.0, w[0] * scale));
  double b = snap(std::max(0.0, w[1] * scale));
  if (a + b > scale) {
    const double s = scale / (a + b);
    a *= s;
    b *= s;
  }
  std::size_t i = static_cast<std::size_t>(std::floor(a));
  std::size_t j = static_cast<std::size_t>(std::floor(b));
  while (i + j > r_ - 1) {
    if (j > 0) --j; else --i;
  }
  const double fa = a - static_cast<double>(i);
  const double fb = b - static_cast<double>(j);
  std::size_t n = 0;
  auto push = [&](std::size_t ii, std::size_t jj, double wt) {
    if (wt > 0.0) out[n++] = {index_of(ii, jj), wt};
  };
  if (i + j == r_ - 1) {
    out[n++] = {index_of(i, j), 1.0};
    return n;
  }
  if (fa + fb <= 1.0 || i + j + 2 > r_ - 1) {
    const double sum = fa + fb;
    const double fa2 = sum > 1.0 ? fa / sum : fa;
    const double fb2 = sum > 1.0 ? fb / sum : fb;
    push(i, j, 1.0 - fa2 - fb2);
    push(i + 1, j, fa2);
    push(i, j + 1, fb2);
  } else {
    push(i + 1, j + 1, fa + fb - 1.0);
    push(i + 1, j, 1.0 - fb);
    push(i, j + 1, 1.0 - fa);
  }
  if (n == 0) out[n++] = {index_of(i, j), 1.0};
  return n;
}

std::size_t SimplexGrid::nearest(std::span<const double> w) const {
  if (k_ == 1) return 0;
  const double scale = static_cast<double>(r_ - 1);
  std::size_t best = 0;
  double best_d = 2.0;
  auto consider = [&](std::size_t idx) {
    const double d = total_variation(w, nodes_[idx].weights());
    if (d < best_d || (d == best_d && idx < best)) {
      best_d = d;
      best = idx;
    }
  };
  if (k_ == 2) {
    const double a = std::clamp(w[0] * scale, 0.0, scale);
    const auto i = static_cast<std::ptrdiff_t>(std::floor(a));
    for (std::ptrdiff_t c = i - 1; c <= i + 2; ++c) {
      if (c >= 0 && c < static_cast<std::ptrdiff_t>(r_)) consider(static_cast<std::size_t>(c));
    }
    return best;
  }
  const auto i = static_cast<std::ptrdiff_t>(std::floor(std::max(0.0, w[0] * scale)));
  const auto j = static_cast<std::ptrdiff_t>(std::floor(std::max(0.0, w[1] * scale)));
  const auto r = static_cast<std::ptrdiff_t>(r_);
  for (std::ptrdiff_t ii = i - 1; ii <= i + 2; ++ii) {
    for (std::ptrdiff_t jj = j - 1; jj <= j + 2; ++jj) {
      if (ii >= 0 && jj >= 0 && ii + jj <= r - 1) {
        consider(index_of(static_cast<std::size_t>(ii), static_cast<std::size_t>(jj)));
      }
    }
  }
  return best;
}

std::size_t GridSpec::space_count() const noexcept {
  std::size_t n = 1;
  for (const SpaceAxis& a : axes) n *= a.nodes;
  return n;
}

std::array<std::size_t, kMaxDim> GridSpec::space_multi_index(std::size_t flat) const {
  std::array<std::size_t, kMaxDim> idx{};
  for (std::size_t k = axes.size(); k-- > 0;) {
    idx[k] = flat % axes[k].nodes;
    flat /= axes[k].nodes;
  }
  return idx;
}

std::size_t GridSpec::space_flat_index(std::span<const std::size_t> multi) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < axes.size(); ++k) flat = flat * axes[k].nodes + multi[k];
  return flat;
}

Coord GridSpec::space_point(std::size_t flat) const {
  const auto idx = space_multi_index(flat);
  Coord x(axes.size());
  for (std::size_t k = 0; k < axes.size(); ++k) x[k] = axes[k].node(idx[k]);
  return x;
}

GridSpec build_grids(const ModelSpec& spec, const GridOptions& options) {
  if (options.level < 0 || options.level > 20) {
    throw Error(ErrorKind::InvalidModelParams, "grid.level must lie in [0, 20]");
  }
  const std::size_t d = spec.dim;
  if (options.lower.size() != d || options.upper.size() != d || options.space_nodes.size() != d) {
    throw Error(ErrorKind::InvalidModelParams, "grid bounds and node counts must match the model dimension");
  }
  GridSpec grid;
  grid.horizon = spec.horizon;
  grid.level = options.level;
  grid.clamp = options.clamp;
  for (std::size_t i = 0; i < d; ++i) {
    if (options.space_nodes[i] < 2) throw Error(ErrorKind::InvalidModelParams, "grid.space_nodes must be >= 2");
    if (!(options.lower[i] < options.upper[i])) {
      throw Error(ErrorKind::InvalidModelParams, "grid.lower must be below grid.upper");
    }
    grid.axes.push_back(SpaceAxis{options.lower[i], options.upper[i], options.space_nodes[i]});
  }
  grid.simplex = SimplexGrid(spec.parameters.size(), options.simplex_nodes);
  return grid;
}

NextTime next_grid_time(const GridSpec& grid, double t, bool strict) {
  if (t >= grid.horizon) return {true, 0};
  const double h = grid.time_step();
  auto j = static_cast<std::size_t>(std::max(0.0, std::floor(t / h)));
  while (j < grid.last_time() && grid.time(j) < t) ++j;
  while (j > 0 && grid.time(j - 1) >= t) --j;
  if (strict && grid.time(j) == t) ++j;
  if (j > grid.last_time()) return {true, 0};
  return {false, j};
}

NextTime next_decision_time(const GridSpec& grid, std::size_t origin, double landing_t) {
  if (landing_t >= grid.horizon) return {true, 0};
  const double t0 = grid.time(origin);
  return landing_t > t0 ? next_grid_time(grid, landing_t, false) : next_grid_time(grid, t0, true);
}

std::optional<std::size_t> time_index(const GridSpec& grid, double t) {
  if (t < 0.0 || t > grid.horizon) return std::nullopt;
  const auto j = static_cast<std::size_t>(std::llround(t / grid.time_step()));
  if (j <= grid.last_time() && std::abs(grid.time(j) - t) <= 1e-12 * grid.horizon) return j;
  return std::nullopt;
}

std::size_t substeps_for_gap(double gap, double interval, std::size_t per_interval) {
  if (!(gap > 0.0)) return 0;
  const double ratio = gap / interval * static_cast<double>(per_interval);
  const auto n = static_cast<std::size_t>(std::ceil(ratio - 1e-9));
  return std::max<std::size_t>(1, n);
}

}  // namespace bimp
