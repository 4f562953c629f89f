#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fwtt {

using Index = Eigen::Index;
using Shape = std::vector<Index>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Product of the extents in `dims` (1 for an empty range).
Index shape_size(std::span<const Index> dims);

/**
 * N-way array of doubles stored first-index-fastest: entry (i_1, ..., i_N)
 * (0-based) lives at i_1 + I_1 * (i_2 + I_2 * (i_3 + ...)).
 *
 * With this layout, the unfolding whose rows enumerate the first n indices is
 * the storage reinterpreted as a column-major J x K matrix, so unfold/fold and
 * all reshapes are copies without index shuffling.
 */
class DenseTensor {
 public:
  DenseTensor() = default;
  /// Zero-filled tensor.
  explicit DenseTensor(Shape shape);
  DenseTensor(Shape shape, std::vector<double> values);

  const Shape& shape() const noexcept { return shape_; }
  Index order() const noexcept { return static_cast<Index>(shape_.size()); }
  Index extent(Index mode) const { return shape_.at(static_cast<std::size_t>(mode)); }
  Index size() const noexcept { return static_cast<Index>(values_.size()); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Linear offset of a 0-based multi-index; throws InvalidArgument when out of bounds.
  Index offset(std::span<const Index> index) const;
  double operator()(std::span<const Index> index) const { return values_[static_cast<std::size_t>(offset(index))]; }
  double& operator()(std::span<const Index> index) { return values_[static_cast<std::size_t>(offset(index))]; }

  /// Storage viewed as a column-major rows x (size/rows) matrix.
  Eigen::Map<const Matrix> as_matrix(Index rows) const;

  double frobenius_norm() const;

  friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// Unfolding X_[1..split ; split+1..N] as a J x K matrix (J = I_1...I_split).
Matrix unfold(const DenseTensor& t, Index split);

/// Inverse of unfold: reinterprets a J x K matrix as a tensor of `shape`.
DenseTensor fold(const Matrix& m, Shape shape);

/// Third-order relabeling (I_1...I_n, I_{n+1}...I_{N-1}, I_N), 1 <= n <= N-2.
DenseTensor reshape3(const DenseTensor& t, Index n);

/// Mode-2 slice `l` of a third-order tensor, a I_1 x I_3 matrix.
Matrix mode2_slice(const DenseTensor& t3, Index l);

/// Horizontal concatenation [X_{:1:} ... X_{:L:}] of all mode-2 slices of a
/// third-order tensor. Column l*I_3 + k of the result is column l + L*k of the
/// first-index-fastest unfolding.
Matrix concat_mode2_slices(const DenseTensor& t3);

/**
 * Tensor-train model: N >= 2 order-3 cores, core n of shape
 * (R_{n-1}, I_n, R_n) with R_0 = R_N = 1.
 */
class TTDecomposition {
 public:
  TTDecomposition() = default;
  explicit TTDecomposition(std::vector<DenseTensor> cores);

  Index order() const noexcept { return static_cast<Index>(cores_.size()); }
  const std::vector<DenseTensor>& cores() const noexcept { return cores_; }
  const DenseTensor& core(Index n) const { return cores_.at(static_cast<std::size_t>(n)); }
  /// (R_0, ..., R_N).
  std::vector<Index> ranks() const;
  /// (I_1, ..., I_N).
  Shape shape() const;
  /// Number of stored floats, sum of R_{n-1} I_n R_n.
  Index storage_size() const;

 private:
  std::vector<DenseTensor> cores_;
};

/// Single entry by left-to-right product of core slices.
double tt_entry(const TTDecomposition& tt, std::span<const Index> index);

/// Contraction of a leading run of cores as a (I_1...I_n) x R_n matrix.
/// An empty run yields the 1 x 1 identity.
Matrix left_partial_product(std::span<const DenseTensor> cores);
Matrix left_partial_product(const TTDecomposition& tt, Index count);

/// Full contraction to a dense tensor.
DenseTensor tt_to_dense(const TTDecomposition& tt);

}  // namespace fwtt
