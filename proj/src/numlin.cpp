#include "fwtt/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "fwtt/errors.hpp"

namespace fwtt {

namespace {

// Operators up to this dimension are materialized and solved densely.
constexpr Index kDenseEigenLimit = 400;

}  // namespace

void canonicalize_signs(Matrix& U, Matrix* Vt) {
  for (Index j = 0; j < U.cols(); ++j) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < U.rows(); ++i) {
      const double a = std::abs(U(i, j));
      if (a > best_abs) {
        best_abs = a;
        best = i;
      }
    }
    if (U.rows() > 0 && U(best, j) < 0.0) {
      U.col(j) = -U.col(j);
      if (Vt != nullptr) Vt->row(j) = -Vt->row(j);
    }
  }
}

Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector(0);
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues();
}

TruncatedSVD truncated_svd(const Matrix& m, Index rank) {
  if (rank < 0 || rank > std::min(m.rows(), m.cols())) {
    throw InvalidArgument("truncated_svd: rank " + std::to_string(rank) + " exceeds min(" +
                          std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")");
  }
  TruncatedSVD out;
  if (rank == 0) {
    out.U = Matrix(m.rows(), 0);
    out.S = Vector(0);
    out.Vt = Matrix(0, m.cols());
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.U = svd.matrixU().leftCols(rank);
  out.S = svd.singularValues().head(rank);
  out.Vt = svd.matrixV().leftCols(rank).transpose();
  canonicalize_signs(out.U, &out.Vt);
  return out;
}

Matrix trailing_left_singvecs(const Matrix& m, Index keep, Vector* singular) {
  const Index rows = m.rows();
  if (keep < 0 || keep > rows) {
    throw InvalidArgument("trailing_left_singvecs: keep " + std::to_string(keep) + " exceeds row count " +
                          std::to_string(rows));
  }
  Matrix out;
  if (m.cols() == 0) {
    out = Matrix::Identity(rows, rows).rightCols(keep);
    if (singular != nullptr) singular->resize(0);
  } else {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullU);
    out = svd.matrixU().rightCols(keep);
    if (singular != nullptr) *singular = svd.singularValues();
  }
  canonicalize_signs(out);
  return out;
}

Index numerical_rank(const Vector& s, double tol) {
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol * s(0)) ++r;
  }
  return r;
}

LstsqResult lstsq(const Matrix& a, const Matrix& b, double tol) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("lstsq: A has " + std::to_string(a.rows()) + " rows, B has " + std::to_string(b.rows()));
  }
  LstsqResult out;
  const Index n = a.cols();
  if (n == 0) {
    out.X = Matrix(0, b.cols());
    out.residual = b.norm();
    out.rcond = 1.0;
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  out.rcond = (a.rows() < n || s(0) == 0.0) ? 0.0 : s(n - 1) / s(0);
  if (out.rcond <= tol) {
    throw IdentifiabilityError("lstsq: coefficient matrix is rank deficient (s_min/s_max = " +
                                   std::to_string(out.rcond) + ")",
                               "lstsq");
  }
  out.X = svd.matrixV() * (s.cwiseInverse().asDiagonal() * (svd.matrixU().transpose() * b));
  out.residual = (a * out.X - b).norm();
  return out;
}

std::vector<double> principal_angles(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("principal_angles: row counts differ (" + std::to_string(a.rows()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  const Matrix& wide = a.cols() >= b.cols() ? a : b;
  const Matrix& narrow = a.cols() >= b.cols() ? b : a;
  const Index q = narrow.cols();
  if (q == 0) return {};
  const Matrix proj = wide.transpose() * narrow;
  const Vector cosines = singular_values(proj);                            // descending
  const Vector sines = singular_values(narrow - wide * proj);  // descending
  std::vector<double> angles(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) {
    const double c = i < cosines.size() ? std::min(cosines(i), 1.0) : 0.0;
    const double s = std::min(sines(q - 1 - i), 1.0);
    angles[static_cast<std::size_t>(i)] = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

namespace {

Eigenpairs dense_eigenpairs(const SymmetricOperator& op, Index dim, Index count) {
  Matrix m = op(Matrix::Identity(dim, dim));
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  Eigenpairs out;
  out.values = eig.eigenvalues().tail(count).reverse();
  out.vectors = eig.eigenvectors().rightCols(count).rowwise().reverse();
  return out;
}

// Orthonormalizes the columns of `x` against `basis` and each other (two
// passes), dropping columns that vanish. Returns the surviving columns.
Matrix orthonormalize_against(const Matrix& basis, Matrix x) {
  for (int pass = 0; pass < 2; ++pass) {
    if (basis.cols() > 0) x -= basis * (basis.transpose() * x);
  }
  Matrix kept(x.rows(), 0);
  std::vector<Index> survivors;
  for (Index j = 0; j < x.cols(); ++j) {
    Vector v = x.col(j);
    const double before = v.norm();
    if (before == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
      for (Index k = 0; k < kept.cols(); ++k) v -= kept.col(k) * kept.col(k).dot(v);
    }
    const double after = v.norm();
    if (after <= 1e-10 * before) continue;
    kept.conservativeResize(Eigen::NoChange, kept.cols() + 1);
    kept.col(kept.cols() - 1) = v / after;
  }
  return kept;
}

Eigenpairs krylov_eigenpairs(const SymmetricOperator& op, Index dim, Index count, double tol) {
  const Index block = std::min(dim, count + 2);
  const Index max_basis = std::min(dim, std::max<Index>(30 * block, 150));
  constexpr int kMaxSweeps = 400;

  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  Matrix start(dim, block);
  for (Index j = 0; j < block; ++j) {
    for (Index i = 0; i < dim; ++i) start(i, j) = normal(rng);
  }

  Matrix basis(dim, 0), image(dim, 0), projected(0, 0);
  Matrix next = start;
  Eigenpairs best;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    Matrix fresh = orthonormalize_against(basis, next);
    const bool invariant = fresh.cols() == 0;
    if (!invariant) {
      const Matrix fresh_image = op(fresh);
      const Index old = basis.cols(), add = fresh.cols();
      Matrix grown(old + add, old + add);
      grown.topLeftCorner(old, old) = projected;
      grown.bottomRightCorner(add, add) = fresh.transpose() * fresh_image;
      if (old > 0) {
        grown.topRightCorner(old, add) = basis.transpose() * fresh_image;
        grown.bottomLeftCorner(add, old) = grown.topRightCorner(old, add).transpose();
      }
      projected = 0.5 * (grown + grown.transpose());
      basis.conservativeResize(Eigen::NoChange, old + add);
      basis.rightCols(add) = fresh;
      image.conservativeResize(Eigen::NoChange, old + add);
      image.rightCols(add) = fresh_image;
    }

    Eigen::SelfAdjointEigenSolver<Matrix> eig(projected);
    const Index m = projected.rows();
    const Index wanted = std::min(count, m);
    const Index keep = std::min(block, m);
    const Matrix coeffs = eig.eigenvectors().rightCols(keep).rowwise().reverse();
    const Vector theta = eig.eigenvalues().tail(keep).reverse();
    const Matrix ritz = basis * coeffs;
    const Matrix ritz_image = image * coeffs;
    const Matrix residual = ritz_image - ritz * theta.asDiagonal();
    double worst = 0.0;
    for (Index j = 0; j < wanted; ++j) worst = std::max(worst, residual.col(j).norm());

    best.values = theta.head(wanted);
    best.vectors = ritz.leftCols(wanted);
    const double scale = std::max(std::abs(theta(0)), 1e-300);
    if (wanted == count && (worst <= tol * scale || invariant || m == dim)) break;

    if (basis.cols() + block > max_basis) {
      // Thick restart from the leading Ritz block.
      basis = ritz;
      image = ritz_image;
      projected = theta.asDiagonal();
      next = residual;
    } else {
      next = image.rightCols(std::min(block, image.cols()));
    }
  }
  return best;
}

}  // namespace

Eigenpairs dominant_eigenpairs(const SymmetricOperator& op, Index dim, Index count, double tol) {
  if (count < 0 || count > dim) {
    throw InvalidArgument("dominant_eigenpairs: count " + std::to_string(count) + " exceeds dimension " +
                          std::to_string(dim));
  }
  Eigenpairs out = dim <= kDenseEigenLimit ? dense_eigenpairs(op, dim, count) : krylov_eigenpairs(op, dim, count, tol);
  canonicalize_signs(out.vectors);
  return out;
}

}  // namespace fwtt
