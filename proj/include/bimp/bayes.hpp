#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bimp {

/// Ordered, distinct parameter points u_1..u_K. The model family decides what
/// a point means (an execution rate, an impact multiplier, ...).
class ParameterSet {
 public:
  ParameterSet() = default;
  explicit ParameterSet(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<double> values_;
};

/// Probability weights over a finite parameter set. Constructed only through
/// normalize() or the checked constructor, so every instance is a valid law.
class Prior {
 public:
  Prior() = default;
  /// Throws DegenerateMass unless the weights are nonnegative and sum to 1
  /// within 1e-12.
  explicit Prior(std::vector<double> weights);

  static Prior dirac(std::size_t size, std::size_t index);
  static Prior uniform(std::size_t size);

  std::size_t size() const noexcept { return weights_.size(); }
  double operator[](std::size_t k) const noexcept { return weights_[k]; }
  std::span<const double> weights() const noexcept { return weights_; }

  friend bool operator==(const Prior&, const Prior&) = default;

 private:
  struct Unchecked {};
  Prior(std::vector<double> weights, Unchecked) : weights_(std::move(weights)) {}

  std::vector<double> weights_;

  friend Prior normalize(std::span<const double>);
  friend Prior bayes_update(const Prior&, std::span<const double>, double);
};

Prior normalize(std::span<const double> raw_weights);

/// Σ_k m_k q_k.
double predictive_density(const Prior& prior, std::span<const double> likelihood);

/// Posterior m'_k = m_k q_k / Σ_j m_j q_j. Weights below `truncate_below`
/// are zeroed and the rest renormalized; the default keeps every weight.
/// Throws DegeneratePosterior when the predictive density is not positive.
Prior bayes_update(const Prior& prior, std::span<const double> likelihood,
                   double truncate_below = 0.0);

/// Total-variation distance, the metric used on priors for diagnostics and
/// nearest-node lookups.
double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace bimp
