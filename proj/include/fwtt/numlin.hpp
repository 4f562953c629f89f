#pragma once

#include <functional>
#include <vector>

#include "fwtt/tensor.hpp"

namespace fwtt {

/// Default threshold for numerical rank decisions (sigma ratio).
inline constexpr double kDefaultRankTol = 1e-8;

/// Rank-R factors M ~ U diag(S) Vt with non-increasing S.
struct TruncatedSVD {
  Matrix U;   // J x R, orthonormal columns
  Vector S;   // R
  Matrix Vt;  // R x K, orthonormal rows
};

/// Flips each column of `U` (and the matching row of `Vt`, if given) so that
/// its entry of largest magnitude is positive; ties go to the lowest index.
void canonicalize_signs(Matrix& U, Matrix* Vt = nullptr);

/// All singular values of `m`, non-increasing.
Vector singular_values(const Matrix& m);

/// Best rank-R factorization with canonical signs. Throws InvalidArgument when
/// R exceeds min(J, K) or is negative.
TruncatedSVD truncated_svd(const Matrix& m, Index rank);

/// Orthonormal basis of the left singular subspace belonging to the `keep`
/// smallest singular values of a J x C matrix. When C < J the trailing
/// directions include an orthonormal completion of the kernel of M^T.
/// The singular values are written to `singular` when given.
Matrix trailing_left_singvecs(const Matrix& m, Index keep, Vector* singular = nullptr);

/// Number of singular values with s_i > tol * s_1.
Index numerical_rank(const Vector& s, double tol = kDefaultRankTol);

struct LstsqResult {
  Matrix X;
  double residual = 0.0;  // ||A X - B||_F
  double rcond = 0.0;     // s_min / s_max of A
};

/// Least-squares solution of A X = B. A must have full column rank: throws
/// IdentifiabilityError (stage "lstsq") when s_min / s_max <= tol.
LstsqResult lstsq(const Matrix& a, const Matrix& b, double tol = kDefaultRankTol);

/// Principal angles in [0, pi/2], ascending, between the column spans of two
/// orthonormal-column matrices with the same row count. Small angles come from
/// the sines (singular values of B - A A^T B), large ones from the cosines, so
/// both ends are accurate to machine precision.
std::vector<double> principal_angles(const Matrix& a, const Matrix& b);

/// Symmetric positive semidefinite operator on R^dim applied to a block of columns.
using SymmetricOperator = std::function<Matrix(const Matrix&)>;

struct Eigenpairs {
  Vector values;   // non-increasing
  Matrix vectors;  // dim x count, orthonormal columns
};

/**
 * Largest `count` eigenpairs of a symmetric PSD operator.
 *
 * Small problems are solved densely by materializing the operator. Larger ones
 * use a block Krylov method with full reorthogonalization and restarts, run
 * until every requested Ritz pair has residual <= tol * lambda_max. Starting
 * vectors are fixed, so results are reproducible.
 */
Eigenpairs dominant_eigenpairs(const SymmetricOperator& op, Index dim, Index count, double tol = 1e-13);

}  // namespace fwtt
