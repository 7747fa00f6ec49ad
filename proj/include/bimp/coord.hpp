#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace bimp {

inline constexpr std::size_t kMaxDim = 3;

// Fixed-capacity point in R^d, d <= kMaxDim. Lives on the stack so the
// propagation and interpolation hot loops never allocate.
class Coord {
 public:
  Coord() = default;
  explicit Coord(std::size_t dim, double fill = 0.0) : dim_(dim) {
    assert(dim <= kMaxDim);
    data_.fill(0.0);
    std::fill_n(data_.begin(), dim, fill);
  }
  Coord(std::initializer_list<double> values) : dim_(values.size()) {
    assert(values.size() <= kMaxDim);
    data_.fill(0.0);
    std::copy(values.begin(), values.end(), data_.begin());
  }
  static Coord from(std::span<const double> values) {
    Coord c(values.size());
    std::copy(values.begin(), values.end(), c.data_.begin());
    return c;
  }

  std::size_t size() const noexcept { return dim_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  const double* begin() const noexcept { return data_.data(); }
  const double* end() const noexcept { return data_.data() + dim_; }
  double* begin() noexcept { return data_.data(); }
  double* end() noexcept { return data_.data() + dim_; }
  std::span<const double> span() const noexcept { return {data_.data(), dim_}; }

  friend bool operator==(const Coord& a, const Coord& b) {
    return a.dim_ == b.dim_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<double, kMaxDim> data_{};
  std::size_t dim_ = 0;
};

inline double dot(const Coord& a, const Coord& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace bimp
