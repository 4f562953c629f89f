#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "fwtt/patterns.hpp"
#include "fwtt/tensor.hpp"

namespace fwtt::test {

inline Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

inline DenseTensor random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(static_cast<std::size_t>(shape_size(shape)));
  for (auto& x : v) x = normal(rng);
  return DenseTensor(std::move(shape), std::move(v));
}

inline double max_angle(const std::vector<double>& angles) {
  double m = 0.0;
  for (double a : angles) m = std::max(m, a);
  return m;
}

// Calls f(index) for every multi-index of `shape`, first index fastest.
template <class F>
void for_each_index(const Shape& shape, F&& f) {
  std::vector<Index> idx(shape.size(), 0);
  const Index total = shape_size(shape);
  for (Index count = 0; count < total; ++count) {
    f(idx);
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
}

// First random pattern at `rate` passing validate, searching seeds upward.
inline FiberPattern valid_random_pattern(const Shape& base, double rate, const std::vector<Index>& ranks,
                                         std::uint64_t seed) {
  for (;; ++seed) {
    auto p = random_pattern(base, rate, seed);
    if (validate(p, ranks).overall_valid) return p;
  }
}

// Base shape (6, 6, 6) pattern for ranks (1, 2, 2, 2, 1) whose split-1 slices
// see either rows {0,1,2} or rows {3,4,5}: rows are covered but the overlap
// graph of split 1 falls apart, while every other condition holds.
inline std::vector<std::uint8_t> disconnected_flags() {
  std::vector<std::uint8_t> flags(216, 0);
  for (Index i3 = 0; i3 < 6; ++i3) {
    for (Index i2 = 0; i2 < 6; ++i2) {
      const bool low = i3 == 0 ? i2 < 3 : (i3 == 1 ? i2 >= 3 : true);
      for (Index i1 = 0; i1 < 6; ++i1) {
        if ((i1 < 3) == low) flags[static_cast<std::size_t>(i1 + 6 * (i2 + 6 * i3))] = 1;
      }
    }
  }
  return flags;
}

}  // namespace fwtt::test
