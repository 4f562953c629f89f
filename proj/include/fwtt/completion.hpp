#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fwtt/numlin.hpp"
#include "fwtt/patterns.hpp"
#include "fwtt/subspace.hpp"
#include "fwtt/tensor.hpp"

namespace fwtt {

enum class SubspaceMethod { constraint, intersection };
enum class SliceCombination { none, pairs };

std::string to_string(SubspaceMethod m);
std::string to_string(SliceCombination c);
SubspaceMethod parse_method(const std::string& s);
SliceCombination parse_combination(const std::string& s);

struct CompletionConfig {
  std::vector<Index> ranks;  // (R_0, ..., R_N)
  SubspaceMethod method = SubspaceMethod::intersection;
  SliceCombination combine = SliceCombination::none;
  double tol = kDefaultRankTol;
  bool validate_first = true;
};

struct UnfoldingDiagnostics {
  Index split = 0;
  double gap = 0.0;
  Index submatrices = 0;
  std::vector<std::string> warnings;
};

struct SliceResidual {
  Index slice = 0;
  Index rows = 0;
  double residual = 0.0;
  double rcond = 0.0;
};

struct CompletionResult {
  TTDecomposition tt;
  std::vector<UnfoldingDiagnostics> unfoldings;
  /// Singular values of the observed rows of the last unfolding, for rank selection.
  std::vector<double> last_singular_values;
  std::vector<SliceResidual> slice_residuals;
  std::optional<ConditionReport> report;
};

/// Sequential TT-SVD at fixed ranks.
TTDecomposition tt_svd(const DenseTensor& t, const std::vector<Index>& ranks);

/// TT-SVD with independently computed unfolding bases, cores assembled as
/// A^(n)^T reshape(A^(n+1)); the last core is Sigma V^T of the last unfolding.
TTDecomposition parallel_tt_svd(const DenseTensor& t, const std::vector<Index>& ranks);

/// Observed blocks of every slice of the split-n reshaping (one block per
/// slice with at least one observed row). `split` may be 0.
std::vector<ObservedSubmatrix> slice_submatrices(const DenseTensor& data, const FiberPattern& p, Index split);

/**
 * TT decomposition of a tensor whose mode-N fibers are observed according
 * to `p`. Entries of unobserved fibers in `data` are ignored (NaN is fine);
 * observed entries must be finite.
 *
 *  1. For n = 1..N-2 the column space of unfolding n is estimated from the
 *     observed slice blocks (plus pairwise combinations if requested).
 *  2. Cores 1..N-2 are assembled from these bases as in parallel_tt_svd.
 *  3. The last core is the leading right singular subspace of the observed
 *     rows of the last unfolding (orthonormal rows).
 *  4. The penultimate core is solved slice by slice in least squares from
 *     the observed rows of each slice of the split-(N-2) reshaping.
 *
 * Throws ValidationError when cfg.validate_first is set and the pattern fails
 * the combinatorial screen; IdentifiabilityError (stage "last_core",
 * "unfolding <n>" or "slice <i>") when a numerical rank check fails.
 */
CompletionResult complete(const DenseTensor& data, const FiberPattern& p, const CompletionConfig& cfg);

/// Dense tensor that copies observed fibers from `data` and fills the others
/// from the train.
DenseTensor reconstruct_fibers(const TTDecomposition& tt, const DenseTensor& data, const FiberPattern& p);

}  // namespace fwtt
