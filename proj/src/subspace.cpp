#include "fwtt/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "fwtt/errors.hpp"
#include "fwtt/numlin.hpp"

namespace fwtt {

namespace {

void check_inputs(std::span<const ObservedSubmatrix> subs, Index ambient, Index rank) {
  if (rank < 1 || rank > ambient) {
    throw InvalidArgument("subspace rank " + std::to_string(rank) + " must lie in [1, " + std::to_string(ambient) + "]");
  }
  for (const auto& s : subs) {
    if (static_cast<Index>(s.rows.size()) != s.values.rows()) {
      throw InvalidArgument("observed submatrix row index count does not match its values");
    }
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      if (s.rows[i] < 0 || s.rows[i] >= ambient || (i > 0 && s.rows[i] <= s.rows[i - 1])) {
        throw InvalidArgument("observed submatrix rows must be strictly increasing and within the ambient space");
      }
    }
    if (!s.values.allFinite()) throw InvalidArgument("observed submatrix contains non-finite values");
  }
}

std::string describe(const ObservedSubmatrix& s) {
  std::string out = "submatrix from slice";
  for (Index src : s.sources) out += " " + std::to_string(src);
  return out;
}

// True when the block can inform a rank-R column space: more than R rows and
// at least R columns.
bool informative(const ObservedSubmatrix& s, Index rank, std::vector<std::string>& warnings) {
  const Index rows = s.values.rows(), cols = s.values.cols();
  if (rows <= rank) {
    warnings.push_back(describe(s) + " skipped: " + std::to_string(rows) + " rows <= rank " + std::to_string(rank));
    return false;
  }
  if (cols < rank) {
    warnings.push_back(describe(s) + " skipped: " + std::to_string(cols) + " columns < rank " + std::to_string(rank));
    return false;
  }
  return true;
}

// False, with a warning, when the block's numerical rank is below R.
bool isorank(const ObservedSubmatrix& s, const Vector& singular, Index rank, double tol,
             std::vector<std::string>& warnings) {
  const Index r = numerical_rank(singular, tol);
  if (r >= rank) return true;
  warnings.push_back(describe(s) + " skipped: numerical rank " + std::to_string(r) + " < rank " + std::to_string(rank));
  return false;
}

[[noreturn]] void fail_identifiability(const char* method, Index used, double gap, double tol) {
  throw IdentifiabilityError(std::string(method) + ": column space not identifiable from " + std::to_string(used) +
                                 " submatrices (gap " + std::to_string(gap) + " <= tol " + std::to_string(tol) +
                                 "); the observed blocks are not informationally complete",
                             "subspace");
}

// R = J: the column space is the whole ambient space.
SubspaceEstimate whole_space(Index ambient) {
  SubspaceEstimate out;
  out.basis = {ambient, Matrix::Identity(ambient, ambient)};
  out.gap = 1.0;
  return out;
}

}  // namespace

SubspaceEstimate constraint_basis(std::span<const ObservedSubmatrix> subs, Index ambient, Index rank, double tol) {
  check_inputs(subs, ambient, rank);
  if (rank == ambient) return whole_space(ambient);
  SubspaceEstimate out;
  std::vector<Matrix> complements;
  std::vector<const ObservedSubmatrix*> used;
  Index constraints = 0;
  for (const auto& s : subs) {
    if (!informative(s, rank, out.warnings)) continue;
    Vector singular;
    Matrix complement = trailing_left_singvecs(s.values, s.values.rows() - rank, &singular);
    if (!isorank(s, singular, rank, tol, out.warnings)) continue;
    complements.push_back(std::move(complement));
    used.push_back(&s);
    constraints += complements.back().cols();
  }
  out.used_submatrices = static_cast<Index>(used.size());
  if (constraints < ambient - rank) fail_identifiability("constraint method", out.used_submatrices, 0.0, tol);

  Matrix stacked = Matrix::Zero(ambient, constraints);
  Index col = 0;
  for (std::size_t l = 0; l < used.size(); ++l) {
    const auto& rows = used[l]->rows;
    const Matrix& c = complements[l];
    for (std::size_t i = 0; i < rows.size(); ++i) stacked.row(rows[i]).segment(col, c.cols()) = c.row(static_cast<Index>(i));
    col += c.cols();
  }

  const Vector s = singular_values(stacked);
  // s_{J-R} in 1-based terms: the smallest singular value that must be nonzero.
  const Index pos = ambient - rank - 1;
  const double margin = pos < 0 ? 1.0 : (pos < s.size() ? s(pos) : 0.0);
  out.gap = pos < 0 ? 1.0 : (s(0) > 0.0 ? margin / s(0) : 0.0);
  if (!(out.gap > tol)) fail_identifiability("constraint method", out.used_submatrices, out.gap, tol);

  out.basis = {ambient, trailing_left_singvecs(stacked, rank)};
  return out;
}

SubspaceEstimate intersection_basis(std::span<const ObservedSubmatrix> subs, Index ambient, Index rank, double tol) {
  check_inputs(subs, ambient, rank);
  if (rank == ambient) return whole_space(ambient);
  SubspaceEstimate out;
  struct Piece {
    const std::vector<Index>* rows;
    Matrix lead;
  };
  std::vector<Piece> pieces;
  Vector missing = Vector::Zero(ambient);
  for (const auto& s : subs) {
    if (!informative(s, rank, out.warnings)) continue;
    auto svd = truncated_svd(s.values, rank);
    if (!isorank(s, svd.S, rank, tol, out.warnings)) continue;
    pieces.push_back({&s.rows, std::move(svd.U)});
    missing.array() += 1.0;
    for (Index r : s.rows) missing(r) -= 1.0;
  }
  out.used_submatrices = static_cast<Index>(pieces.size());
  if (pieces.empty()) fail_identifiability("intersection method", 0, 0.0, tol);

  // Q Q^T applied to a block; the unit-vector columns of every Q_l collapse
  // into the diagonal term.
  const SymmetricOperator gram = [&](const Matrix& x) {
    Matrix y = missing.asDiagonal() * x;
    Matrix gathered;
    for (const auto& p : pieces) {
      const auto& rows = *p.rows;
      const auto n = static_cast<Index>(rows.size());
      gathered.resize(n, x.cols());
      for (Index i = 0; i < n; ++i) gathered.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
      const Matrix back = p.lead * (p.lead.transpose() * gathered);
      for (Index i = 0; i < n; ++i) y.row(rows[static_cast<std::size_t>(i)]) += back.row(i);
    }
    return y;
  };

  const Index count = std::min(rank + 1, ambient);
  const Eigenpairs eig = dominant_eigenpairs(gram, ambient, count);
  const double top = std::sqrt(std::max(eig.values(0), 0.0));
  if (count > rank) {
    const double s_r = std::sqrt(std::max(eig.values(rank - 1), 0.0));
    const double s_next = std::sqrt(std::max(eig.values(rank), 0.0));
    out.gap = top > 0.0 ? (s_r - s_next) / top : 0.0;
  } else {
    out.gap = 1.0;
  }
  if (!(out.gap > tol)) fail_identifiability("intersection method", out.used_submatrices, out.gap, tol);

  Matrix basis = eig.vectors.leftCols(rank);
  canonicalize_signs(basis);
  out.basis = {ambient, std::move(basis)};
  return out;
}

std::vector<ObservedSubmatrix> combine_slice_pairs(std::span<const ObservedSubmatrix> slices, Index rank) {
  std::vector<ObservedSubmatrix> out;
  std::vector<Index> shared;
  std::vector<Index> pos_a, pos_b;
  for (std::size_t a = 0; a < slices.size(); ++a) {
    for (std::size_t b = a + 1; b < slices.size(); ++b) {
      const auto& ra = slices[a].rows;
      const auto& rb = slices[b].rows;
      shared.clear();
      pos_a.clear();
      pos_b.clear();
      for (std::size_t i = 0, j = 0; i < ra.size() && j < rb.size();) {
        if (ra[i] < rb[j]) {
          ++i;
        } else if (rb[j] < ra[i]) {
          ++j;
        } else {
          shared.push_back(ra[i]);
          pos_a.push_back(static_cast<Index>(i++));
          pos_b.push_back(static_cast<Index>(j++));
        }
      }
      if (static_cast<Index>(shared.size()) < rank || shared.empty()) continue;
      const Matrix& va = slices[a].values;
      const Matrix& vb = slices[b].values;
      ObservedSubmatrix pair;
      pair.rows = shared;
      pair.values.resize(static_cast<Index>(shared.size()), va.cols() + vb.cols());
      for (std::size_t i = 0; i < shared.size(); ++i) {
        pair.values.row(static_cast<Index>(i)) << va.row(pos_a[i]), vb.row(pos_b[i]);
      }
      pair.sources = slices[a].sources;
      pair.sources.insert(pair.sources.end(), slices[b].sources.begin(), slices[b].sources.end());
      out.push_back(std::move(pair));
    }
  }
  return out;
}

}  // namespace fwtt
