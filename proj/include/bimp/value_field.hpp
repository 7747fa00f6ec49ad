#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bimp/grid.hpp"
#include "bimp/model.hpp"

namespace bimp {

/// v_n tabulated on time × space × simplex nodes, simplex index fastest.
/// Times past T are never stored: reads there use the terminal rule.
struct ValueField {
  GridSpec grid;
  std::vector<double> values;

  ValueField() = default;
  explicit ValueField(GridSpec g) : grid(std::move(g)), values(grid.node_count(), 0.0) {}

  std::size_t index(std::size_t j, std::size_t s, std::size_t p) const noexcept {
    return (j * grid.space_count() + s) * grid.simplex.size() + p;
  }
  double at(std::size_t j, std::size_t s, std::size_t p) const noexcept { return values[index(j, s, p)]; }
  double& at(std::size_t j, std::size_t s, std::size_t p) noexcept { return values[index(j, s, p)]; }

  std::span<const double> slice(std::size_t j) const noexcept {
    return std::span<const double>(values).subspan(j * grid.slice_size(), grid.slice_size());
  }
  std::span<double> slice(std::size_t j) noexcept {
    return std::span<double>(values).subspan(j * grid.slice_size(), grid.slice_size());
  }
};

/// Multilinear stencil in x (at most 2^d entries). Throws OutOfDomain when
/// clamping is off and x leaves the box.
std::size_t space_stencil(const GridSpec& grid, const Coord& x, std::array<Stencil, 8>& out);

/// Interpolate one time slice at (x, prior).
double interpolate_slice(const GridSpec& grid, std::span<const double> slice, const Coord& x,
                         const Prior& prior);

/// Read the field at a time node, or apply the terminal rule when t > T.
/// Throws OutOfDomain if t is neither.
double interpolate(const ModelSpec& spec, const ValueField& field, const State& state,
                   const Prior& prior);

/// Binary layout (all little-endian):
///   8 bytes  magic "BIMPVF01"
///   f64      horizon
///   i32      level
///   u32      clamp flag
///   u32      space dimension d
///   d × (f64 lower, f64 upper, u64 nodes)
///   u64      parameter count K, u64 simplex resolution
///   u64      value count, then that many f64 values
void save_field(const ValueField& field, const std::string& path);
ValueField load_field(const std::string& path);

/// One row per node: t, x_0..x_{d-1}, w_0..w_{K-1}, value (%.17g).
void export_field_csv(const ValueField& field, const std::string& path);

}  // namespace bimp
