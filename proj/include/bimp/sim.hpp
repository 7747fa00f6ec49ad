#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bimp/policy.hpp"

namespace bimp {

struct SimSettings {
  std::size_t euler_substeps = 4;  // per full grid interval, as in the solver
};

struct ImpulseEvent {
  double tau = 0.0;          // launch time (a grid node)
  std::size_t action = 0;    // index into the action grid
  double theta = 0.0;        // landing time
  State landing;
  std::vector<double> likelihood;  // q(z' | z, a, u_k) at the realized outcome
  Prior posterior;
};

struct PathSample {
  double t = 0.0;
  Coord x;
};

struct Trajectory {
  std::size_t true_parameter = 0;
  std::vector<double> brownian;       // standard normal increments, in draw order
  std::vector<double> impulse_draws;  // uniforms / normals consumed by impulse outcomes
  double terminal_noise = 0.0;
  std::vector<ImpulseEvent> events;
  std::vector<PathSample> path;
  double terminal_time = 0.0;  // T[φ] = max(T, last landing)
  State terminal_state;
  Prior terminal_prior;
  double gain = 0.0;
};

/// One path under `policy` from (z0, m0). υ is drawn from m0 unless pinned.
/// Streams are keyed by (seed, path_index, role), so the result does not
/// depend on which thread simulates which path.
Trajectory simulate(const ModelSpec& spec, const Policy& policy, const State& z0, const Prior& m0,
                    std::uint64_t seed, std::optional<std::size_t> true_parameter = std::nullopt,
                    const SimSettings& settings = {}, std::uint64_t path_index = 0);

/// Throws InadmissibleEvent unless launches are strictly increasing, each
/// launch is at or after the previous landing, and launches sit on grid nodes.
void validate_trajectory(const Trajectory& trajectory, const GridSpec& grid);

struct McResult {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t paths = 0;
  std::uint64_t seed = 0;
};

/// Fixed-shape pairwise summation, independent of thread count.
double pairwise_sum(std::span<const double> values);

McResult evaluate_mc(const ModelSpec& spec, const Policy& policy, const State& z0, const Prior& m0,
                     std::size_t paths, std::uint64_t seed, unsigned threads = 1,
                     std::optional<std::size_t> true_parameter = std::nullopt,
                     const SimSettings& settings = {});

/// CSV with columns kind,index,t,x0..,w0..,action,theta,gain. kind is
/// "sample" for path points, "event" for impulses (t = launch time, x and w
/// the landing state and posterior) and "terminal" for the final row.
std::string trajectory_csv(const Trajectory& trajectory);
void export_trajectory_csv(const Trajectory& trajectory, const std::string& path);

}  // namespace bimp
