#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bimp/solver.hpp"

namespace bimp {

/// Feedback table: one decision code per (time, space, simplex) node.
struct Policy {
  GridSpec grid;
  std::vector<std::int32_t> table;
  std::vector<Impulse> actions;
  double epsilon = 0.0;
  std::uint64_t model_hash = 0;

  Action action_at(std::size_t j, std::size_t s, std::size_t p) const;
};

/// Copies the solver's argmax (Wait preferred, then lowest action index).
/// Throws GridMismatch if the report was solved on a different grid.
Policy extract_policy(const SolveReport& report, const ModelSpec& spec, const GridSpec& grid,
                      double epsilon, std::uint64_t model_hash = 0);

/// Nearest time node, nearest space node per axis (scaled Euclidean) and the
/// nearest simplex node in total variation. Wait for t > T.
Action lookup(const Policy& policy, const State& state, const Prior& prior);

/// Layout: 8-byte magic "BIMPPOL1", u64 header length, JSON header (grid,
/// epsilon, tie-break rule, model hash, action grid), then one little-endian
/// i32 per node in value-field order (-1 is Wait).
void save_policy(const Policy& policy, const std::string& path);
Policy load_policy(const std::string& path);

}  // namespace bimp
