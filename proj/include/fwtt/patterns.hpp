#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fwtt/tensor.hpp"

namespace fwtt {

/**
 * Which mode-N fibers of an (I_1, ..., I_N) tensor are observed. The flags
 * are indexed by the fiber's leading multi-index (i_1, ..., i_{N-1}),
 * first-index-fastest, which is also the row index of the last unfolding.
 */
class FiberPattern {
 public:
  FiberPattern() = default;
  /// All fibers observed.
  explicit FiberPattern(Shape base_shape);
  FiberPattern(Shape base_shape, std::vector<std::uint8_t> observed);

  const Shape& base_shape() const noexcept { return base_shape_; }
  Index fiber_count() const noexcept { return static_cast<Index>(observed_.size()); }
  Index observed_count() const noexcept { return observed_count_; }
  bool observed(Index fiber) const { return observed_.at(static_cast<std::size_t>(fiber)) != 0; }
  const std::vector<std::uint8_t>& flags() const noexcept { return observed_; }
  /// Observed fiber indices, ascending.
  std::vector<Index> observed_fibers() const;

  friend bool operator==(const FiberPattern& a, const FiberPattern& b) {
    return a.base_shape_ == b.base_shape_ && a.observed_ == b.observed_;
  }

 private:
  Shape base_shape_;
  std::vector<std::uint8_t> observed_;
  Index observed_count_ = 0;
};

/// Observed rows of one mode-2 slice of the split-n third-order reshaping.
struct SliceObservation {
  Index split = 0;
  Index slice = 0;
  std::vector<Index> rows;  // strictly increasing, into 0..J-1
};

/// Number of rows J = I_1...I_split and slices L = I_{split+1}...I_{N-1}
/// of the split-n reshaping seen from a pattern. `split` may be 0 (J = 1).
struct SliceGeometry {
  Index rows = 1;
  Index slices = 1;
};
SliceGeometry slice_geometry(const FiberPattern& p, Index split);

/// Slices of the split-n reshaping that have at least one observed row, in
/// slice order. Requires 1 <= split <= N-2.
std::vector<SliceObservation> slice_observations(const FiberPattern& p, Index split);

struct SplitReport {
  Index split = 0;
  Index rank = 0;
  Index slice_count = 0;
  Index used_slices = 0;        // slices with >= rank observed rows
  Index min_rows_per_slice = 0;  // over all slices, empty ones count as 0
  Index generic_slice_rank = 0;  // min(R_n, ..., R_{N-1})
  bool slices_isorank = false;   // generic_slice_rank == rank
  bool every_slice_has_rank_rows = false;
  bool overlap_graph_connected = false;
  bool union_covers_all_rows = false;
};

struct ConditionReport {
  std::vector<SplitReport> splits;
  Index observed_fiber_count = 0;
  Index required_fibers = 0;         // R_{N-1}
  bool last_core_ok = false;         // observed fibers >= R_{N-1}
  bool penultimate_ok = false;       // every split-(N-2) slice has >= R_{N-2} rows
  std::vector<Index> penultimate_deficient_slices;
  bool overall_valid = false;
  std::vector<std::string> messages;

  /// Identifiers of the failed conditions, see ValidationError.
  std::vector<std::string> failed_conditions() const;
};

/// Checks (R_0, ..., R_N) against a tensor shape: length, R_0 = R_N = 1,
/// 1 <= R_n <= min(I_1...I_n, I_{n+1}...I_N). Throws InvalidArgument.
void check_ranks(const Shape& shape, const std::vector<Index>& ranks);

/**
 * Combinatorial screen of the generic recovery conditions. For each split n in
 * 1..N-2, a slice has generic rank min(R_n, ..., R_{N-1}), which must equal
 * R_n. Slices with fewer than R_n observed rows are set aside; the rest must
 * cover every row and be connected through overlaps of at least R_n rows.
 * Additionally at least R_{N-1} fibers must be observed and every slice of the
 * split-(N-2) reshaping needs R_{N-2} observed rows.
 *
 * A passing report means the pattern is generically valid; it is not a proof
 * of identifiability for particular values.
 */
ConditionReport validate(const FiberPattern& p, const std::vector<Index>& ranks);

/// Pattern with exactly round(missing_rate * fibers) unobserved fibers chosen
/// uniformly without replacement from a generator seeded with `seed`.
FiberPattern random_pattern(const Shape& base_shape, double missing_rate, std::uint64_t seed);

/// Copy of `t` with every unobserved fiber set to NaN.
DenseTensor mask_apply(const DenseTensor& t, const FiberPattern& p);

/// Pattern read off the NaN entries of `t`. Throws InvalidArgument if some
/// fiber is only partially NaN.
FiberPattern pattern_from_nans(const DenseTensor& t);

/// Throws InvalidArgument unless `p` describes the leading modes of `shape`.
void check_pattern_shape(const FiberPattern& p, const Shape& shape);

}  // namespace fwtt
