#pragma once

#include <span>
#include <string>
#include <vector>

#include "fwtt/tensor.hpp"

namespace fwtt {

/// Fully observed block of a J x K matrix: the rows in `rows` (strictly
/// increasing) restricted to some subset of columns.
struct ObservedSubmatrix {
  std::vector<Index> rows;
  Matrix values;               // rows.size() x K_l
  std::vector<Index> sources;  // slice indices the block was taken from
};

/// Orthonormal basis of an estimated column space in R^ambient.
struct SubspaceBasis {
  Index ambient = 0;
  Matrix basis;  // ambient x R
};

struct SubspaceEstimate {
  SubspaceBasis basis;
  /// Identifiability margin at position R, dimensionless; the estimate is
  /// rejected when it is <= tol. Constraint method: s_{J-R}(N) / s_1(N).
  /// Intersection method: (s_R(Q) - s_{R+1}(Q)) / s_1(Q).
  double gap = 0.0;
  Index used_submatrices = 0;
  std::vector<std::string> warnings;
};

/**
 * Column space as the (approximate) kernel of N^T, where N stacks the
 * zero-padded orthogonal complements of every submatrix's rank-R column
 * space. Submatrices with at most R rows carry no constraint and are skipped
 * with a warning. Throws IdentifiabilityError (stage "subspace") when the
 * constraints leave a kernel wider than R at `tol`.
 *
 * Cost grows like J^2 times the number of constraints; meant for moderate J.
 */
SubspaceEstimate constraint_basis(std::span<const ObservedSubmatrix> subs, Index ambient, Index rank, double tol);

/**
 * Column space as the intersection of the subspaces S_l of all completions
 * of each submatrix. S_l is spanned by Q_l = [P_l U_l | E_l], P_l the row
 * embedding, U_l the leading R left singular vectors of the block and E_l
 * unit vectors on the rows it misses. The result is the leading R left
 * singular subspace of Q = [Q_1 ... Q_L], obtained from the operator
 * Q Q^T = sum_l P_l U_l U_l^T P_l^T + diag(missing counts) without forming Q.
 * Same failure modes as constraint_basis.
 */
SubspaceEstimate intersection_basis(std::span<const ObservedSubmatrix> subs, Index ambient, Index rank, double tol);

/// For every pair of blocks sharing at least `rank` rows, the block on the
/// shared rows with both column sets side by side, pairs in lexicographic order.
std::vector<ObservedSubmatrix> combine_slice_pairs(std::span<const ObservedSubmatrix> slices, Index rank);

}  // namespace fwtt
