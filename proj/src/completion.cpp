#include "fwtt/completion.hpp"

#include <cmath>
#include <string>

#include "fwtt/errors.hpp"

namespace fwtt {

std::string to_string(SubspaceMethod m) { return m == SubspaceMethod::constraint ? "constraint" : "intersection"; }
std::string to_string(SliceCombination c) { return c == SliceCombination::pairs ? "pairs" : "none"; }

SubspaceMethod parse_method(const std::string& s) {
  if (s == "constraint") return SubspaceMethod::constraint;
  if (s == "intersection") return SubspaceMethod::intersection;
  throw InvalidArgument("unknown subspace method '" + s + "' (expected constraint or intersection)");
}

SliceCombination parse_combination(const std::string& s) {
  if (s == "none") return SliceCombination::none;
  if (s == "pairs") return SliceCombination::pairs;
  throw InvalidArgument("unknown slice combination '" + s + "' (expected none or pairs)");
}

namespace {

Index rank_at(const std::vector<Index>& ranks, Index n) { return ranks[static_cast<std::size_t>(n)]; }

DenseTensor make_core(const Matrix& m, Index left, Index mode, Index right) {
  return DenseTensor({left, mode, right}, std::vector<double>(m.data(), m.data() + m.size()));
}

// W = A_n^T reshape(A_{n+1}, [J_n, I_{n+1} R_{n+1}]) as a (R_n, I_{n+1}, R_{n+1}) core.
DenseTensor transfer_core(const Matrix& a, const Matrix& next, Index mode) {
  const Eigen::Map<const Matrix> reshaped(next.data(), a.rows(), mode * next.cols());
  return make_core(a.transpose() * reshaped, a.cols(), mode, next.cols());
}

}  // namespace

TTDecomposition tt_svd(const DenseTensor& t, const std::vector<Index>& ranks) {
  check_ranks(t.shape(), ranks);
  const Index order = t.order();
  std::vector<DenseTensor> cores;
  Matrix carry = t.as_matrix(1);
  for (Index n = 0; n + 1 < order; ++n) {
    const Index rows = rank_at(ranks, n) * t.extent(n);
    const Eigen::Map<const Matrix> current(carry.data(), rows, carry.size() / rows);
    auto svd = truncated_svd(current, rank_at(ranks, n + 1));
    cores.push_back(make_core(svd.U, rank_at(ranks, n), t.extent(n), rank_at(ranks, n + 1)));
    carry = svd.S.asDiagonal() * svd.Vt;
  }
  cores.push_back(make_core(carry, rank_at(ranks, order - 1), t.extent(order - 1), 1));
  return TTDecomposition(std::move(cores));
}

TTDecomposition parallel_tt_svd(const DenseTensor& t, const std::vector<Index>& ranks) {
  check_ranks(t.shape(), ranks);
  const Index order = t.order();
  std::vector<Matrix> bases;
  Matrix last_factor;
  for (Index n = 1; n < order; ++n) {
    auto svd = truncated_svd(unfold(t, n), rank_at(ranks, n));
    if (n == order - 1) last_factor = svd.S.asDiagonal() * svd.Vt;
    bases.push_back(std::move(svd.U));
  }
  std::vector<DenseTensor> cores;
  cores.push_back(make_core(bases.front(), 1, t.extent(0), rank_at(ranks, 1)));
  for (std::size_t n = 0; n + 1 < bases.size(); ++n) {
    cores.push_back(transfer_core(bases[n], bases[n + 1], t.extent(static_cast<Index>(n) + 1)));
  }
  cores.push_back(make_core(last_factor, rank_at(ranks, order - 1), t.extent(order - 1), 1));
  return TTDecomposition(std::move(cores));
}

std::vector<ObservedSubmatrix> slice_submatrices(const DenseTensor& data, const FiberPattern& p, Index split) {
  check_pattern_shape(p, data.shape());
  const auto geo = slice_geometry(p, split);
  const Index fibers = p.fiber_count();
  const Index len = data.shape().back();
  const auto v = data.values();

  std::vector<std::vector<Index>> rows(static_cast<std::size_t>(geo.slices));
  for (Index f = 0; f < fibers; ++f) {
    if (p.observed(f)) rows[static_cast<std::size_t>(f / geo.rows)].push_back(f % geo.rows);
  }
  std::vector<ObservedSubmatrix> out;
  for (Index l = 0; l < geo.slices; ++l) {
    auto& r = rows[static_cast<std::size_t>(l)];
    if (r.empty()) continue;
    ObservedSubmatrix sub;
    sub.values.resize(static_cast<Index>(r.size()), len);
    for (Index k = 0; k < len; ++k) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        sub.values(static_cast<Index>(i), k) = v[static_cast<std::size_t>(r[i] + geo.rows * l + fibers * k)];
      }
    }
    sub.rows = std::move(r);
    sub.sources = {l};
    out.push_back(std::move(sub));
  }
  return out;
}

CompletionResult complete(const DenseTensor& data, const FiberPattern& p, const CompletionConfig& cfg) {
  const Index order = data.order();
  if (order < 2) throw InvalidArgument("completion needs a tensor of order >= 2");
  check_pattern_shape(p, data.shape());
  check_ranks(data.shape(), cfg.ranks);
  if (!(cfg.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const auto& ranks = cfg.ranks;
  const Index fibers = p.fiber_count();
  const Index len = data.shape().back();
  const auto values = data.values();
  for (Index f = 0; f < fibers; ++f) {
    if (!p.observed(f)) continue;
    for (Index k = 0; k < len; ++k) {
      if (!std::isfinite(values[static_cast<std::size_t>(f + fibers * k)])) {
        throw InvalidArgument("observed fiber " + std::to_string(f) + " contains non-finite values");
      }
    }
  }

  CompletionResult result;
  if (cfg.validate_first) {
    auto report = validate(p, ranks);
    if (!report.overall_valid) {
      std::string msg = "observation pattern fails the recovery conditions";
      for (const auto& m : report.messages) msg += "; " + m;
      throw ValidationError(msg, report.failed_conditions());
    }
    result.report = std::move(report);
  }

  const Index last_rank = rank_at(ranks, order - 1);
  if (p.observed_count() < last_rank) {
    throw IdentifiabilityError("last core: " + std::to_string(p.observed_count()) + " observed fibers, at least " +
                                   std::to_string(last_rank) + " required",
                               "last_core");
  }

  // Column spaces of unfoldings 1..N-2.
  std::vector<Matrix> bases;
  for (Index n = 1; n <= order - 2; ++n) {
    auto subs = slice_submatrices(data, p, n);
    if (cfg.combine == SliceCombination::pairs) {
      auto pairs = combine_slice_pairs(subs, rank_at(ranks, n));
      subs.insert(subs.end(), std::make_move_iterator(pairs.begin()), std::make_move_iterator(pairs.end()));
    }
    const Index ambient = shape_size(std::span(data.shape()).first(static_cast<std::size_t>(n)));
    SubspaceEstimate est;
    try {
      est = cfg.method == SubspaceMethod::constraint ? constraint_basis(subs, ambient, rank_at(ranks, n), cfg.tol)
                                                     : intersection_basis(subs, ambient, rank_at(ranks, n), cfg.tol);
    } catch (const IdentifiabilityError& e) {
      throw IdentifiabilityError("unfolding " + std::to_string(n) + ": " + e.what(), "unfolding " + std::to_string(n));
    }
    result.unfoldings.push_back({n, est.gap, est.used_submatrices, std::move(est.warnings)});
    bases.push_back(std::move(est.basis.basis));
  }

  std::vector<DenseTensor> cores;
  if (!bases.empty()) cores.push_back(make_core(bases.front(), 1, data.extent(0), rank_at(ranks, 1)));
  for (std::size_t n = 0; n + 1 < bases.size(); ++n) {
    cores.push_back(transfer_core(bases[n], bases[n + 1], data.extent(static_cast<Index>(n) + 1)));
  }

  // Last core: orthonormal basis for the observed rows of the last unfolding.
  const auto observed = p.observed_fibers();
  Matrix rows(static_cast<Index>(observed.size()), len);
  for (Index k = 0; k < len; ++k) {
    for (std::size_t i = 0; i < observed.size(); ++i) {
      rows(static_cast<Index>(i), k) = values[static_cast<std::size_t>(observed[i] + fibers * k)];
    }
  }
  const Vector sv = singular_values(rows);
  result.last_singular_values.assign(sv.data(), sv.data() + sv.size());
  if (numerical_rank(sv, cfg.tol) < last_rank) {
    throw IdentifiabilityError("last core: observed rows of the last unfolding have numerical rank " +
                                   std::to_string(numerical_rank(sv, cfg.tol)) + " < " + std::to_string(last_rank),
                               "last_core");
  }
  const Matrix last = truncated_svd(rows, last_rank).Vt;

  // Penultimate core from the per-slice least-squares systems.
  const Index pen = order - 2;
  const Index pen_left = rank_at(ranks, pen);
  const Index pen_mode = data.extent(order - 2);
  const Matrix left = left_partial_product(cores);
  Matrix pen_core(pen_left, pen_mode * last_rank);
  auto subs = slice_submatrices(data, p, pen);
  Index expected = 0;
  for (const auto& s : subs) {
    const Index i = s.sources.front();
    if (i != expected) {
      throw IdentifiabilityError("slice " + std::to_string(expected) + " of the penultimate reshaping has no observed rows",
                                 "slice " + std::to_string(expected));
    }
    ++expected;
    Matrix lhs(static_cast<Index>(s.rows.size()), pen_left);
    for (std::size_t r = 0; r < s.rows.size(); ++r) lhs.row(static_cast<Index>(r)) = left.row(s.rows[r]);
    const Matrix rhs = s.values * last.transpose();
    LstsqResult sol;
    try {
      sol = lstsq(lhs, rhs, cfg.tol);
    } catch (const IdentifiabilityError&) {
      throw IdentifiabilityError("slice " + std::to_string(i) + " of the penultimate reshaping: " +
                                     std::to_string(s.rows.size()) + " observed rows do not determine the core slice (need " +
                                     std::to_string(pen_left) + " independent rows)",
                                 "slice " + std::to_string(i));
    }
    // Core slice i sits at columns i, i + I, i + 2I, ... of the R x (I R') storage.
    for (Index b = 0; b < last_rank; ++b) pen_core.col(i + pen_mode * b) = sol.X.col(b);
    result.slice_residuals.push_back({i, static_cast<Index>(s.rows.size()), sol.residual, sol.rcond});
  }
  if (expected != pen_mode) {
    throw IdentifiabilityError("slice " + std::to_string(expected) + " of the penultimate reshaping has no observed rows",
                               "slice " + std::to_string(expected));
  }
  cores.push_back(make_core(pen_core, pen_left, pen_mode, last_rank));
  cores.push_back(make_core(last, last_rank, len, 1));
  result.tt = TTDecomposition(std::move(cores));
  return result;
}

DenseTensor reconstruct_fibers(const TTDecomposition& tt, const DenseTensor& data, const FiberPattern& p) {
  check_pattern_shape(p, data.shape());
  if (tt.shape() != data.shape()) throw InvalidArgument("train shape does not match the data tensor");
  DenseTensor out = tt_to_dense(tt);
  auto dst = out.values();
  const auto src = data.values();
  const Index fibers = p.fiber_count();
  const Index len = data.shape().back();
  for (Index f = 0; f < fibers; ++f) {
    if (!p.observed(f)) continue;
    for (Index k = 0; k < len; ++k) dst[static_cast<std::size_t>(f + fibers * k)] = src[static_cast<std::size_t>(f + fibers * k)];
  }
  return out;
}

}  // namespace fwtt
