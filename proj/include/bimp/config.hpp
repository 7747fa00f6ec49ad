#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bimp/diagnostics.hpp"
#include "bimp/grid.hpp"
#include "bimp/model.hpp"
#include "bimp/solver.hpp"

namespace bimp {

inline constexpr int kSchemaVersion = 1;

struct SimulationConfig {
  std::size_t paths = 1000;
  std::uint64_t seed = 1;
  std::optional<std::size_t> true_parameter;
};

struct CertificateConfig {
  CertificateFamily psi;
  double rho = 1.0;
  double delta = 1.0;
};

/// Everything a run needs. Every key has a documented default except the
/// model section, the prior and the initial state.
struct RunConfig {
  int schema_version = kSchemaVersion;
  ModelSpec model;
  std::vector<double> prior;
  State initial;
  GridOptions grid;
  QuadratureSettings quadrature;
  double epsilon = 0.0;
  SimulationConfig simulation;
  std::optional<CertificateConfig> certificate;
  unsigned threads = 1;
  std::string output_dir;  // empty: fall back to BIMP_OUT_DIR, then "out"
};

/// Throws Error(Config) naming the offending key path (e.g. "model.gain.x_coef").
RunConfig parse_config(const nlohmann::json& doc);
/// Reads a file; syntax errors report the line and column.
RunConfig load_config(const std::string& path);

nlohmann::json model_to_json(const ModelSpec& spec);
nlohmann::json config_to_json(const RunConfig& config);
CertificateConfig parse_certificate(const nlohmann::json& doc, const std::string& where);
nlohmann::json certificate_to_json(const CertificateConfig& cert);

/// FNV-1a 64 over the canonical (sorted-key, compact) dump of the model section.
std::uint64_t model_hash(const ModelSpec& spec);
std::string hash_hex(std::uint64_t hash);

}  // namespace bimp
