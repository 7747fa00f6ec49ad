#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bimp/solver.hpp"

namespace bimp {

struct NodeLocation {
  std::size_t time_index = 0;
  std::size_t space_index = 0;
  std::size_t simplex_index = 0;
};

struct ResidualStats {
  std::size_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  NodeLocation argmin;
  NodeLocation argmax_abs;

  void add(double r, const NodeLocation& where);
  void finish();
};

/// Residuals of min{-ℒv, v - 𝒦v} = 0 on the grid. ℒ uses a forward time
/// difference and central space differences read at t_{j+1} (one-sided at the
/// box faces); 𝒦v re-runs the solver's impulse branch on the stored field.
struct QviReport {
  ResidualStats combined;           // min(r1, r2) for t < T; min(v - 𝒦_T g, v - 𝒦v) at T
  ResidualStats combined_interior;  // same, space nodes on the box faces excluded
  ResidualStats pde;                // r1 = -ℒ_h v for t < T
  ResidualStats impulse;            // r2 = v - 𝒦v at every node (super-solution side)
  ResidualStats terminal;           // v - 𝒦_T g at T
  std::vector<double> combined_values;  // per node, field layout
};

QviReport qvi_residuals(const ValueField& field, const ModelSpec& spec,
                        const QuadratureSettings& quadrature = {});

/// Ψ(t, x) = exp(a (2T - t)) · (C + ⟨c, x⟩ + q |x|²), defined on [0, 2T] × ℝ^d.
struct CertificateFamily {
  double time_rate = 0.0;
  double constant = 0.0;
  Coord linear;
  double quadratic = 0.0;

  double operator()(double horizon, double t, const Coord& x) const;
};

class ComparisonCertificate {
 public:
  /// Throws InvalidCertificate unless rho > 0 and delta > 0.
  ComparisonCertificate(CertificateFamily psi, double rho, double delta);

  const CertificateFamily& psi() const noexcept { return psi_; }
  double rho() const noexcept { return rho_; }
  double delta() const noexcept { return delta_; }

 private:
  CertificateFamily psi_;
  double rho_;
  double delta_;
};

struct ConditionResult {
  std::string name;
  bool checked = true;
  bool pass = false;
  double margin = 0.0;
  double t = 0.0;
  Coord x;
  std::vector<double> prior;
  std::string note;
};

struct CertificateReport {
  std::vector<ConditionResult> conditions;  // (i) .. (v), in order

  const ConditionResult& condition(const std::string& name) const;
  bool passed() const;
};

/// Evaluates the checkable conditions on the grid: (ii) ϱΨ - ℒΨ ≥ 0 by finite
/// differences on t ∈ π_n, (iii) Ψ - 𝒦Ψ ≥ δ with the impulse operator
/// (margin reported as min(Ψ - 𝒦Ψ) - δ), (iv) Ψ ≥ e^{ϱt}𝒦_T g on the nodes
/// T + jT/2^n up to 2T, (v) Ψ bounded below (margin is the analytic inf).
/// (i) is reported as not checked.
CertificateReport check_certificate(const ComparisonCertificate& cert, const ModelSpec& spec,
                                    const GridSpec& grid, const QuadratureSettings& quadrature = {});

}  // namespace bimp
