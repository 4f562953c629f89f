#include "fwtt/patterns.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "fwtt/errors.hpp"

namespace fwtt {

namespace {

class Bitset {
 public:
  explicit Bitset(Index bits) : words_(static_cast<std::size_t>((bits + 63) / 64), 0) {}
  void set(Index i) { words_[static_cast<std::size_t>(i / 64)] |= std::uint64_t{1} << (i % 64); }
  Index overlap(const Bitset& o) const {
    Index n = 0;
    for (std::size_t w = 0; w < words_.size(); ++w) n += std::popcount(words_[w] & o.words_[w]);
    return n;
  }
  void merge(const Bitset& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
  }
  Index count() const {
    Index n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
  }

 private:
  std::vector<std::uint64_t> words_;
};

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)), components_(n) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    --components_;
  }
  Index components() const { return components_; }

 private:
  std::vector<Index> parent_;
  Index components_;
};

// Observed rows of every slice (including empty ones) of the split reshaping.
std::vector<std::vector<Index>> rows_per_slice(const FiberPattern& p, Index split) {
  const auto geo = slice_geometry(p, split);
  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(geo.slices));
  for (Index f = 0; f < p.fiber_count(); ++f) {
    if (p.observed(f)) rows[static_cast<std::size_t>(f / geo.rows)].push_back(f % geo.rows);
  }
  return rows;
}

SplitReport check_split(const FiberPattern& p, Index split, Index rank) {
  const auto geo = slice_geometry(p, split);
  const auto rows = rows_per_slice(p, split);
  SplitReport rep;
  rep.split = split;
  rep.rank = rank;
  rep.slice_count = geo.slices;
  rep.min_rows_per_slice = std::numeric_limits<Index>::max();
  std::vector<Bitset> used;
  for (const auto& r : rows) {
    const auto n = static_cast<Index>(r.size());
    rep.min_rows_per_slice = std::min(rep.min_rows_per_slice, n);
    if (n < rank) continue;
    Bitset b(geo.rows);
    for (Index a : r) b.set(a);
    used.push_back(std::move(b));
  }
  rep.used_slices = static_cast<Index>(used.size());
  rep.every_slice_has_rank_rows = rep.min_rows_per_slice >= rank;
  if (used.empty()) return rep;

  Bitset cover(geo.rows);
  for (const auto& b : used) cover.merge(b);
  rep.union_covers_all_rows = cover.count() == geo.rows;

  DisjointSets sets(rep.used_slices);
  for (Index u = 0; u < rep.used_slices && sets.components() > 1; ++u) {
    for (Index v = u + 1; v < rep.used_slices && sets.components() > 1; ++v) {
      if (sets.find(u) == sets.find(v)) continue;
      if (used[static_cast<std::size_t>(u)].overlap(used[static_cast<std::size_t>(v)]) >= rank) sets.unite(u, v);
    }
  }
  rep.overlap_graph_connected = sets.components() == 1;
  return rep;
}

}  // namespace

FiberPattern::FiberPattern(Shape base_shape)
    : FiberPattern(base_shape, std::vector<std::uint8_t>(static_cast<std::size_t>(shape_size(base_shape)), 1)) {}

FiberPattern::FiberPattern(Shape base_shape, std::vector<std::uint8_t> observed)
    : base_shape_(std::move(base_shape)), observed_(std::move(observed)) {
  for (Index d : base_shape_) {
    if (d < 1) throw InvalidArgument("pattern extents must be >= 1");
  }
  if (static_cast<Index>(observed_.size()) != shape_size(base_shape_)) {
    throw InvalidArgument("pattern holds " + std::to_string(observed_.size()) + " flags, base shape needs " +
                          std::to_string(shape_size(base_shape_)));
  }
  for (auto& f : observed_) {
    if (f > 1) throw InvalidArgument("pattern flags must be 0 or 1");
    observed_count_ += f;
  }
  if (observed_count_ == 0) throw InvalidArgument("pattern has no observed fibers");
}

std::vector<Index> FiberPattern::observed_fibers() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(observed_count_));
  for (Index f = 0; f < fiber_count(); ++f) {
    if (observed_[static_cast<std::size_t>(f)] != 0) out.push_back(f);
  }
  return out;
}

SliceGeometry slice_geometry(const FiberPattern& p, Index split) {
  const auto base = static_cast<Index>(p.base_shape().size());
  if (split < 0 || split > base) throw InvalidArgument("split " + std::to_string(split) + " out of range");
  const auto dims = std::span(p.base_shape());
  SliceGeometry g;
  g.rows = shape_size(dims.first(static_cast<std::size_t>(split)));
  g.slices = shape_size(dims.subspan(static_cast<std::size_t>(split)));
  return g;
}

std::vector<SliceObservation> slice_observations(const FiberPattern& p, Index split) {
  const auto order = static_cast<Index>(p.base_shape().size()) + 1;
  if (split < 1 || split > order - 2) {
    throw InvalidArgument("slice_observations: split " + std::to_string(split) + " outside [1, " +
                          std::to_string(order - 2) + "]");
  }
  auto rows = rows_per_slice(p, split);
  std::vector<SliceObservation> out;
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (rows[l].empty()) continue;
    out.push_back({split, static_cast<Index>(l), std::move(rows[l])});
  }
  return out;
}

std::vector<std::string> ConditionReport::failed_conditions() const {
  std::vector<std::string> out;
  if (!last_core_ok) out.emplace_back("last_core_fibers");
  if (!penultimate_ok) out.emplace_back("penultimate_rows");
  bool slice_rank = false, slice_rows = false, connectivity = false, coverage = false;
  for (const auto& s : splits) {
    slice_rank |= !s.slices_isorank;
    slice_rows |= s.used_slices == 0;
    connectivity |= !s.overlap_graph_connected;
    coverage |= !s.union_covers_all_rows;
  }
  if (slice_rank) out.emplace_back("slice_rank");
  if (slice_rows) out.emplace_back("slice_rows");
  if (connectivity) out.emplace_back("overlap_connectivity");
  if (coverage) out.emplace_back("row_coverage");
  return out;
}

void check_ranks(const Shape& shape, const std::vector<Index>& ranks) {
  const auto order = static_cast<Index>(shape.size());
  if (static_cast<Index>(ranks.size()) != order + 1) {
    throw InvalidArgument("rank tuple has " + std::to_string(ranks.size()) + " entries, expected " +
                          std::to_string(order + 1));
  }
  if (ranks.front() != 1 || ranks.back() != 1) throw InvalidArgument("rank tuple must start and end with 1");
  const auto dims = std::span(shape);
  for (Index n = 1; n < order; ++n) {
    const Index rows = shape_size(dims.first(static_cast<std::size_t>(n)));
    const Index cols = shape_size(dims.subspan(static_cast<std::size_t>(n)));
    const Index r = ranks[static_cast<std::size_t>(n)];
    if (r < 1 || r > std::min(rows, cols)) {
      throw InvalidArgument("rank R_" + std::to_string(n) + " = " + std::to_string(r) + " infeasible (must be in [1, " +
                            std::to_string(std::min(rows, cols)) + "])");
    }
  }
}

ConditionReport validate(const FiberPattern& p, const std::vector<Index>& ranks) {
  const auto order = static_cast<Index>(p.base_shape().size()) + 1;
  if (static_cast<Index>(ranks.size()) != order + 1 || ranks.front() != 1 || ranks.back() != 1) {
    throw InvalidArgument("validate: malformed rank tuple for an order-" + std::to_string(order) + " tensor");
  }
  for (Index r : ranks) {
    if (r < 1) throw InvalidArgument("validate: ranks must be >= 1");
  }
  auto rank = [&](Index n) { return ranks[static_cast<std::size_t>(n)]; };

  ConditionReport rep;
  rep.observed_fiber_count = p.observed_count();
  rep.required_fibers = rank(order - 1);
  rep.last_core_ok = rep.observed_fiber_count >= rep.required_fibers;
  if (!rep.last_core_ok) {
    rep.messages.push_back("last core: " + std::to_string(rep.observed_fiber_count) +
                           " observed fibers, at least " + std::to_string(rep.required_fibers) + " required");
  }

  for (Index n = 1; n <= order - 2; ++n) {
    auto s = check_split(p, n, rank(n));
    s.generic_slice_rank = *std::min_element(ranks.begin() + n, ranks.end() - 1);
    s.slices_isorank = s.generic_slice_rank == s.rank;
    const std::string where = "unfolding " + std::to_string(n) + ": ";
    if (!s.slices_isorank) {
      rep.messages.push_back(where + "slices have generic rank " + std::to_string(s.generic_slice_rank) + " < R_" +
                             std::to_string(n) + " = " + std::to_string(s.rank) + " (needs R_" + std::to_string(n) +
                             " <= R_k for every later k)");
    }
    if (s.used_slices == 0) {
      rep.messages.push_back(where + "no slice has " + std::to_string(s.rank) + " observed rows");
    } else {
      if (!s.union_covers_all_rows) rep.messages.push_back(where + "usable slices do not cover every row");
      if (!s.overlap_graph_connected) {
        rep.messages.push_back(where + "slices are not connected through overlaps of " + std::to_string(s.rank) +
                               " rows");
      }
    }
    rep.splits.push_back(s);
  }

  const Index pen = order - 2;
  const auto rows = rows_per_slice(p, pen);
  for (std::size_t l = 0; l < rows.size(); ++l) {
    if (static_cast<Index>(rows[l].size()) < rank(pen)) rep.penultimate_deficient_slices.push_back(static_cast<Index>(l));
  }
  rep.penultimate_ok = rep.penultimate_deficient_slices.empty();
  if (!rep.penultimate_ok) {
    rep.messages.push_back("penultimate core: " + std::to_string(rep.penultimate_deficient_slices.size()) +
                           " slice(s) have fewer than " + std::to_string(rank(pen)) + " observed rows (first: slice " +
                           std::to_string(rep.penultimate_deficient_slices.front()) + ")");
  }

  rep.overall_valid = rep.last_core_ok && rep.penultimate_ok;
  for (const auto& s : rep.splits) {
    rep.overall_valid = rep.overall_valid && s.slices_isorank && s.used_slices > 0 && s.union_covers_all_rows &&
                        s.overlap_graph_connected;
  }
  return rep;
}

FiberPattern random_pattern(const Shape& base_shape, double missing_rate, std::uint64_t seed) {
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw InvalidArgument("missing rate must lie in [0, 1)");
  const Index total = shape_size(base_shape);
  const auto missing = static_cast<Index>(std::llround(missing_rate * static_cast<double>(total)));
  if (missing >= total) throw InvalidArgument("missing rate leaves no observed fibers");
  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < missing; ++i) {
    std::uniform_int_distribution<Index> pick(i, total - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(total), 1);
  for (Index i = 0; i < missing; ++i) flags[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = 0;
  return FiberPattern(base_shape, std::move(flags));
}

void check_pattern_shape(const FiberPattern& p, const Shape& shape) {
  if (shape.size() < 2 || !std::equal(p.base_shape().begin(), p.base_shape().end(), shape.begin(), shape.end() - 1) ||
      p.base_shape().size() + 1 != shape.size()) {
    throw InvalidArgument("pattern base shape does not match the leading modes of the tensor");
  }
}

DenseTensor mask_apply(const DenseTensor& t, const FiberPattern& p) {
  check_pattern_shape(p, t.shape());
  DenseTensor out = t;
  auto v = out.values();
  const Index fibers = p.fiber_count();
  const Index len = t.shape().back();
  for (Index f = 0; f < fibers; ++f) {
    if (p.observed(f)) continue;
    for (Index k = 0; k < len; ++k) v[static_cast<std::size_t>(f + fibers * k)] = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

FiberPattern pattern_from_nans(const DenseTensor& t) {
  if (t.order() < 2) throw InvalidArgument("pattern_from_nans needs a tensor of order >= 2");
  const Shape base(t.shape().begin(), t.shape().end() - 1);
  const Index fibers = shape_size(base);
  const Index len = t.shape().back();
  const auto v = t.values();
  std::vector<std::uint8_t> flags(static_cast<std::size_t>(fibers), 1);
  for (Index f = 0; f < fibers; ++f) {
    Index nans = 0;
    for (Index k = 0; k < len; ++k) nans += std::isnan(v[static_cast<std::size_t>(f + fibers * k)]) ? 1 : 0;
    if (nans != 0 && nans != len) {
      throw InvalidArgument("fiber " + std::to_string(f) + " is partially NaN; only whole mode-N fibers may be missing");
    }
    flags[static_cast<std::size_t>(f)] = nans == 0 ? 1 : 0;
  }
  return FiberPattern(base, std::move(flags));
}

}  // namespace fwtt
