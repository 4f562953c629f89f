#include "fwtt/tensor.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fwtt/errors.hpp"

namespace fwtt {

Index shape_size(std::span<const Index> dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidArgument("tensor shape must be non-empty");
  for (Index d : shape) {
    if (d < 1) throw InvalidArgument("tensor extents must be >= 1, got " + std::to_string(d));
  }
}

void check_split(const DenseTensor& t, Index split, Index lo, Index hi, const char* what) {
  if (split < lo || split > hi) {
    throw InvalidArgument(std::string(what) + " split " + std::to_string(split) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "] for order-" +
                          std::to_string(t.order()) + " tensor");
  }
}

}  // namespace

DenseTensor::DenseTensor(Shape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  values_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

DenseTensor::DenseTensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape(shape_);
  if (static_cast<Index>(values_.size()) != shape_size(shape_)) {
    throw InvalidArgument("tensor holds " + std::to_string(values_.size()) + " values, shape needs " +
                          std::to_string(shape_size(shape_)));
  }
}

Index DenseTensor::offset(std::span<const Index> index) const {
  if (static_cast<Index>(index.size()) != order()) {
    throw InvalidArgument("index has " + std::to_string(index.size()) + " coordinates, tensor order is " +
                          std::to_string(order()));
  }
  Index off = 0;
  Index stride = 1;
  for (std::size_t n = 0; n < index.size(); ++n) {
    if (index[n] < 0 || index[n] >= shape_[n]) {
      throw InvalidArgument("index " + std::to_string(index[n]) + " out of bounds for mode " + std::to_string(n) +
                            " of extent " + std::to_string(shape_[n]));
    }
    off += index[n] * stride;
    stride *= shape_[n];
  }
  return off;
}

Eigen::Map<const Matrix> DenseTensor::as_matrix(Index rows) const {
  return {values_.data(), rows, size() / rows};
}

double DenseTensor::frobenius_norm() const {
  return Eigen::Map<const Vector>(values_.data(), size()).norm();
}

Matrix unfold(const DenseTensor& t, Index split) {
  check_split(t, split, 1, t.order() - 1, "unfolding");
  const Index rows = shape_size(std::span(t.shape()).first(static_cast<std::size_t>(split)));
  return t.as_matrix(rows);
}

DenseTensor fold(const Matrix& m, Shape shape) {
  if (m.size() != shape_size(shape)) {
    throw InvalidArgument("cannot fold a " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          " matrix into a tensor of " + std::to_string(shape_size(shape)) + " entries");
  }
  return DenseTensor(std::move(shape), std::vector<double>(m.data(), m.data() + m.size()));
}

DenseTensor reshape3(const DenseTensor& t, Index n) {
  check_split(t, n, 1, t.order() - 2, "reshape3");
  const auto& s = t.shape();
  const auto dims = std::span(s);
  const Index rows = shape_size(dims.first(static_cast<std::size_t>(n)));
  const Index mid = shape_size(dims.subspan(static_cast<std::size_t>(n), static_cast<std::size_t>(t.order() - 1 - n)));
  return DenseTensor({rows, mid, s.back()}, std::vector<double>(t.values().begin(), t.values().end()));
}

Matrix mode2_slice(const DenseTensor& t3, Index l) {
  if (t3.order() != 3) throw InvalidArgument("mode2_slice needs a third-order tensor");
  const Index rows = t3.extent(0), slices = t3.extent(1), cols = t3.extent(2);
  if (l < 0 || l >= slices) throw InvalidArgument("slice index " + std::to_string(l) + " out of range");
  Matrix out(rows, cols);
  const auto v = t3.values();
  for (Index k = 0; k < cols; ++k) {
    for (Index a = 0; a < rows; ++a) out(a, k) = v[static_cast<std::size_t>(a + rows * (l + slices * k))];
  }
  return out;
}

Matrix concat_mode2_slices(const DenseTensor& t3) {
  if (t3.order() != 3) throw InvalidArgument("concat_mode2_slices needs a third-order tensor");
  const Index cols = t3.extent(2);
  Matrix out(t3.extent(0), t3.extent(1) * cols);
  for (Index l = 0; l < t3.extent(1); ++l) out.middleCols(l * cols, cols) = mode2_slice(t3, l);
  return out;
}

TTDecomposition::TTDecomposition(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
  if (cores_.size() < 2) throw InvalidArgument("a tensor train needs at least two cores");
  Index left = 1;
  for (std::size_t n = 0; n < cores_.size(); ++n) {
    const auto& c = cores_[n];
    if (c.order() != 3) throw InvalidArgument("core " + std::to_string(n) + " is not third-order");
    if (c.extent(0) != left) {
      throw InvalidArgument("core " + std::to_string(n) + " has left rank " + std::to_string(c.extent(0)) +
                            ", expected " + std::to_string(left));
    }
    left = c.extent(2);
  }
  if (left != 1) throw InvalidArgument("last core must have right rank 1");
}

std::vector<Index> TTDecomposition::ranks() const {
  std::vector<Index> r;
  r.reserve(cores_.size() + 1);
  r.push_back(1);
  for (const auto& c : cores_) r.push_back(c.extent(2));
  return r;
}

Shape TTDecomposition::shape() const {
  Shape s;
  for (const auto& c : cores_) s.push_back(c.extent(1));
  return s;
}

Index TTDecomposition::storage_size() const {
  Index total = 0;
  for (const auto& c : cores_) total += c.size();
  return total;
}

double tt_entry(const TTDecomposition& tt, std::span<const Index> index) {
  if (static_cast<Index>(index.size()) != tt.order()) {
    throw InvalidArgument("index has " + std::to_string(index.size()) + " coordinates, train order is " +
                          std::to_string(tt.order()));
  }
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
  for (Index n = 0; n < tt.order(); ++n) {
    const auto& c = tt.core(n);
    const Index i = index[static_cast<std::size_t>(n)];
    if (i < 0 || i >= c.extent(1)) {
      throw InvalidArgument("index " + std::to_string(i) + " out of bounds for mode " + std::to_string(n));
    }
    const Index rl = c.extent(0), rr = c.extent(2);
    // Slice i of core n is a strided rl x rr block of the storage.
    Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slice(c.values().data() + rl * i, rl, rr,
                                                            Eigen::OuterStride<>(rl * c.extent(1)));
    row = row * slice;
  }
  return row(0);
}

Matrix left_partial_product(std::span<const DenseTensor> cores) {
  Matrix left = Matrix::Identity(1, 1);
  for (const auto& c : cores) {
    const Index rl = c.extent(0);
    if (left.cols() != rl) throw InvalidArgument("left_partial_product: rank mismatch between cores");
    // (prefix x rl) * (rl x I_n R_n) reinterpreted as (prefix I_n) x R_n.
    Matrix prod = left * c.as_matrix(rl);
    left = Eigen::Map<const Matrix>(prod.data(), left.rows() * c.extent(1), c.extent(2));
  }
  return left;
}

Matrix left_partial_product(const TTDecomposition& tt, Index count) {
  if (count < 0 || count > tt.order()) throw InvalidArgument("left_partial_product: core count out of range");
  return left_partial_product(std::span(tt.cores()).first(static_cast<std::size_t>(count)));
}

DenseTensor tt_to_dense(const TTDecomposition& tt) {
  const Matrix full = left_partial_product(tt, tt.order());
  return fold(full, tt.shape());
}

}  // namespace fwtt
