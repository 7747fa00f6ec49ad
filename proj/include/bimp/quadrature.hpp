#pragma once

#include <cstddef>
#include <vector>

namespace bimp {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Gauss–Legendre rule on [a, b] with n nodes (exact for degree 2n-1).
QuadratureRule gauss_legendre(std::size_t n, double a, double b);

/// Gauss–Hermite rule for E[f(Z)], Z ~ N(0,1): nodes are already scaled by
/// sqrt(2) and weights sum to 1.
QuadratureRule gauss_hermite_normal(std::size_t n);

/// Tensor product of the standard-normal rule over `dim` coordinates.
/// Nodes are stored row-major, `dim` values per point.
struct TensorRule {
  std::size_t dim = 0;
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return weights.size(); }
  const double* point(std::size_t i) const noexcept { return nodes.data() + i * dim; }
};

TensorRule tensor_normal_rule(std::size_t per_dim, std::size_t dim);

}  // namespace bimp
