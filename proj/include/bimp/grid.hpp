#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bimp/bayes.hpp"
#include "bimp/coord.hpp"

namespace bimp {

struct ModelSpec;

/// Uniform axis lower, lower + h, ..., upper.
struct SpaceAxis {
  double lower = 0.0;
  double upper = 1.0;
  std::size_t nodes = 2;

  double spacing() const noexcept { return (upper - lower) / static_cast<double>(nodes - 1); }
  double node(std::size_t i) const noexcept {
    return i + 1 == nodes ? upper : lower + static_cast<double>(i) * spacing();
  }

  friend bool operator==(const SpaceAxis&, const SpaceAxis&) = default;
};

/// A (node index, weight) pair contributed by an interpolation stencil.
struct Stencil {
  std::size_t index;
  double weight;
};

/// Uniform barycentric grid on the probability simplex for K = 1, 2 or 3.
/// With resolution r the nodes are the weight vectors whose entries are
/// multiples of 1/(r-1). Node ordering: lexicographic in (w_0, w_1).
class SimplexGrid {
 public:
  SimplexGrid() = default;
  /// Throws UnsupportedSimplexDimension when K > 3.
  SimplexGrid(std::size_t parameter_count, std::size_t resolution);

  std::size_t parameter_count() const noexcept { return k_; }
  std::size_t resolution() const noexcept { return r_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  const Prior& node(std::size_t i) const { return nodes_[i]; }

  /// Piecewise-linear stencil (at most 3 entries). Reproduces any function
  /// that is affine in the weights; a node maps to itself with weight 1.
  std::size_t stencil(std::span<const double> weights, std::array<Stencil, 3>& out) const;

  /// Node closest in total variation; ties go to the lowest index.
  std::size_t nearest(std::span<const double> weights) const;

  friend bool operator==(const SimplexGrid& a, const SimplexGrid& b) {
    return a.k_ == b.k_ && a.r_ == b.r_;
  }

 private:
  std::size_t index_of(std::size_t i, std::size_t j) const;

  std::size_t k_ = 1;
  std::size_t r_ = 1;
  std::vector<Prior> nodes_;
};

/// Time grid π_n together with the space box and the prior simplex grid.
struct GridSpec {
  double horizon = 1.0;
  int level = 0;
  std::vector<SpaceAxis> axes;
  SimplexGrid simplex;
  bool clamp = true;

  std::size_t time_count() const noexcept { return (std::size_t{1} << level) + 1; }
  std::size_t last_time() const noexcept { return std::size_t{1} << level; }
  /// t_j = j T / 2^n, computed from integers so levels nest exactly.
  double time(std::size_t j) const noexcept {
    return static_cast<double>(j) * horizon / static_cast<double>(std::size_t{1} << level);
  }
  double time_step() const noexcept { return time(1); }

  std::size_t dim() const noexcept { return axes.size(); }
  std::size_t space_count() const noexcept;
  Coord space_point(std::size_t flat) const;
  std::array<std::size_t, kMaxDim> space_multi_index(std::size_t flat) const;
  std::size_t space_flat_index(std::span<const std::size_t> multi) const;

  std::size_t slice_size() const noexcept { return space_count() * simplex.size(); }
  std::size_t node_count() const noexcept { return time_count() * slice_size(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct GridOptions {
  int level = 1;
  std::vector<double> lower{-1.0};
  std::vector<double> upper{1.0};
  std::vector<std::size_t> space_nodes{17};
  std::size_t simplex_nodes = 5;
  bool clamp = true;
};

GridSpec build_grids(const ModelSpec& spec, const GridOptions& options);

/// Result of a next-decision-time lookup: either a time index or the
/// beyond-horizon marker (any s ≥ T is admissible, where the terminal rule
/// applies).
struct NextTime {
  bool beyond_horizon = false;
  std::size_t index = 0;
};

/// Smallest grid node ≥ t (> t when `strict`); BeyondHorizon when t ≥ T.
NextTime next_grid_time(const GridSpec& grid, double t, bool strict);

/// Next decision time after an action launched at node `origin` lands at
/// `landing_t`: the first node ≥ landing_t that is strictly after the origin.
NextTime next_decision_time(const GridSpec& grid, std::size_t origin, double landing_t);

/// Index j with time(j) == t, if any.
std::optional<std::size_t> time_index(const GridSpec& grid, double t);

/// Number of Euler sub-steps used to cover `gap` when a full grid interval
/// uses `per_interval` steps. Shared by the solver and the simulator.
std::size_t substeps_for_gap(double gap, double interval, std::size_t per_interval);

}  // namespace bimp
