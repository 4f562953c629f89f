// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fwtt/completion.hpp"
#include "fwtt/errors.hpp"
#include "fwtt/harness.hpp"
#include "fwtt/numlin.hpp"
#include "fwtt/patterns.hpp"
#include "fwtt/subspace.hpp"

using namespace fwtt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Trials may only fail because the random pattern itself is not recoverable.
struct SweepSummary {
  std::vector<SweepPoint> points;
  Index invalid_patterns = 0;
  Index numerical_failures = 0;
};

SweepSummary sweep(const ExperimentSpec& spec, unsigned threads) {
  const auto results = run_sweep(spec, threads);
  SweepSummary s{summarize(spec, results), 0, 0};
  for (const auto& r : results) {
    if (r.failure.empty()) continue;
    (r.valid_pattern ? s.numerical_failures : s.invalid_patterns) += 1;
  }
  return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FiberPattern valid_pattern(const Shape& base, double rate, const std::vector<Index>& ranks, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    auto p = random_pattern(base, rate, s);
    if (validate(p, ranks).overall_valid) return p;
  }
}

// 1. Noiseless exact recovery at paper scale.
Outcome noiseless_recovery() {
  const Shape shape{15, 15, 15, 15, 15};
  const std::vector<Index> ranks{1, 3, 3, 3, 4, 1};
  const auto truth = tt_to_dense(random_tt(shape, ranks, 2024));
  const auto p = valid_pattern({15, 15, 15, 15}, 0.4, ranks, 2025);
  const auto data = mask_apply(truth, p);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = complete(data, p, {ranks});
  const double time = seconds_since(t0);
  const double err = relative_error(truth, tt_to_dense(out.tt));
  return {err <= 1e-9 && time <= 5.0, fmt("error %.3g (<= 1e-9), time %.2f s (<= 5 s)", err, time)};
}

// 2. Median error along the SNR sweep against the published curve.
Outcome snr_sweep(unsigned threads) {
  ExperimentSpec spec;
  spec.shape = {15, 15, 15, 15, 15};
  spec.ranks_true = spec.ranks_fit = {1, 3, 3, 3, 4, 1};
  spec.snr_db = {0, 10, 20, 30, 40, 50};
  spec.missing_rate = {0.4};
  spec.trials = 30;
  spec.seed = 7;
  const std::vector<double> paper{0.408, 0.0560, 0.0321, 0.0161, 0.0070, 0.0028};
  const auto t0 = std::chrono::steady_clock::now();
  const auto sw = sweep(spec, threads);
  const auto& points = sw.points;
  bool pass = sw.numerical_failures == 0;
  std::string detail = "medians";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double m = points[i].median_error;
    const bool within = m >= paper[i] / 3.0 && m <= paper[i] * 3.0;
    const bool decreasing = i == 0 || m < points[i - 1].median_error;
    pass = pass && within && decreasing && points[i].succeeded >= 25;
    detail += fmt(" %gdB:%.4g(%s%s)", points[i].snr_db, m, within ? "ok" : "off", decreasing ? "" : ",not decreasing");
  }
  detail += fmt("; invalid patterns %ld, numerical failures %ld; %.0f s", static_cast<long>(sw.invalid_patterns),
                static_cast<long>(sw.numerical_failures), seconds_since(t0));
  return {pass, detail};
}

// 3. Accuracy and cost as the tensor grows.
Outcome scalability(Index trials) {
  const std::vector<Index> sizes{10, 20, 30, 40, 50};
  std::vector<double> err, time;
  bool clean = true;
  for (Index i : sizes) {
    ExperimentSpec spec;
    spec.shape = {i, i, i, i};
    spec.ranks_true = spec.ranks_fit = {1, 4, 4, 4, 1};
    spec.snr_db = {25};
    spec.missing_rate = {0.35};
    spec.trials = trials;
    spec.seed = 11;
    const auto sw = sweep(spec, 1);
    const auto& p = sw.points.front();
    clean = clean && sw.numerical_failures == 0 && p.succeeded * 4 >= trials * 3;
    err.push_back(p.median_error);
    time.push_back(p.median_time_s);
  }
  bool monotone = true;
  for (std::size_t k = 1; k < err.size(); ++k) monotone = monotone && err[k] < err[k - 1];
  const bool ends = err.front() >= 0.0554 / 3 && err.front() <= 0.0554 * 3 && err.back() >= 0.0055 / 3 &&
                    err.back() <= 0.0055 * 3;
  const double ratio = time[4] / time[2];
  std::string detail = "medians";
  for (std::size_t k = 0; k < sizes.size(); ++k) detail += fmt(" I=%ld:%.4g", static_cast<long>(sizes[k]), err[k]);
  detail += fmt("; monotone %s, endpoints %s; time(50)/time(30) = %.2f/%.2f s = %.2f (<= 10)", monotone ? "yes" : "no",
                ends ? "ok" : "off", time[4], time[2], ratio);
  return {monotone && ends && ratio <= 10.0 && clean, detail};
}

struct RandomCase {
  Shape shape;
  std::vector<Index> ranks;
};

// Order 4 or 5, extents 3..7, non-decreasing ranks <= 5 so every slice is isorank.
RandomCase random_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index order = (seed % 2 == 0) ? 4 : 5;
  std::uniform_int_distribution<Index> extent(3, order == 4 ? 7 : 5);
  RandomCase c;
  for (Index n = 0; n < order; ++n) c.shape.push_back(extent(rng));
  const Index cap = std::min<Index>({5, c.shape.front(), c.shape.back()});
  std::uniform_int_distribution<Index> rank(1, cap);
  std::vector<Index> inner;
  for (Index n = 1; n < order; ++n) inner.push_back(rank(rng));
  std::sort(inner.begin(), inner.end());
  c.ranks.push_back(1);
  c.ranks.insert(c.ranks.end(), inner.begin(), inner.end());
  c.ranks.push_back(1);
  return c;
}

// 4. Constraint and intersection methods agree and hit the true column spaces.
Outcome method_equivalence() {
  double worst_recon = 0.0, worst_angle = 0.0;
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = random_case(1000 + seed);
    const auto truth = tt_to_dense(random_tt(c.shape, c.ranks, seed));
    const Shape base(c.shape.begin(), c.shape.end() - 1);
    const auto p = valid_pattern(base, 0.3, c.ranks, seed * 97);
    const auto data = mask_apply(truth, p);
    try {
      const auto a = tt_to_dense(complete(data, p, {c.ranks, SubspaceMethod::constraint}).tt);
      const auto b = tt_to_dense(complete(data, p, {c.ranks, SubspaceMethod::intersection}).tt);
      worst_recon = std::max(worst_recon, relative_error(a, b));
      for (Index n = 1; n + 1 < static_cast<Index>(c.shape.size()); ++n) {
        const Index r = c.ranks[static_cast<std::size_t>(n)];
        const Matrix exact = truncated_svd(unfold(truth, n), r).U;
        const auto subs = slice_submatrices(data, p, n);
        const Index ambient = exact.rows();
        for (const auto& est : {constraint_basis(subs, ambient, r, kDefaultRankTol),
                                intersection_basis(subs, ambient, r, kDefaultRankTol)}) {
          for (double angle : principal_angles(est.basis.basis, exact)) worst_angle = std::max(worst_angle, angle);
        }
      }
    } catch (const Error& e) {
      ++failures;
      std::printf("  instance %lu failed: %s\n", static_cast<unsigned long>(seed), e.what());
    }
  }
  return {failures == 0 && worst_recon <= 1e-8 && worst_angle <= 1e-9,
          fmt("50 instances, %d failures; max reconstruction difference %.3g (<= 1e-8), max principal angle %.3g "
              "(<= 1e-9)",
              failures, worst_recon, worst_angle)};
}

// 5. Full observation degenerates to the parallel algorithm, which matches TT-SVD.
Outcome full_observation() {
  double worst_complete = 0.0, worst_svd = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto c = random_case(5000 + seed);
    const auto truth = tt_to_dense(random_tt(c.shape, c.ranks, 100 + seed));
    const FiberPattern p(Shape(c.shape.begin(), c.shape.end() - 1));
    const auto parallel = tt_to_dense(parallel_tt_svd(truth, c.ranks));
    worst_complete = std::max(worst_complete, relative_error(parallel, tt_to_dense(complete(truth, p, {c.ranks}).tt)));
    worst_svd = std::max(worst_svd, relative_error(tt_to_dense(tt_svd(truth, c.ranks)), parallel));
  }
  return {worst_complete <= 1e-12 && worst_svd <= 1e-12,
          fmt("20 instances; complete vs parallel %.3g, parallel vs sequential %.3g (<= 1e-12)", worst_complete,
              worst_svd)};
}

// 6. The rank-one example recovers span{(1,2,3)}.
Outcome example_one() {
  ObservedSubmatrix a{{0, 1}, Matrix(2, 1), {0}}, b{{1, 2}, Matrix(2, 1), {1}};
  a.values << 1, 2;
  b.values << 4, 6;
  const std::vector<ObservedSubmatrix> subs{a, b};
  Matrix truth(3, 1);
  truth << 1, 2, 3;
  truth.normalize();
  const double c = principal_angles(constraint_basis(subs, 3, 1, kDefaultRankTol).basis.basis, truth)[0];
  const double i = principal_angles(intersection_basis(subs, 3, 1, kDefaultRankTol).basis.basis, truth)[0];
  return {c <= 1e-12 && i <= 1e-12, fmt("principal angle constraint %.3g, intersection %.3g (<= 1e-12)", c, i)};
}

// Counterexample for criterion 7 with the condition it breaks.
struct Counterexample {
  std::string name;
  FiberPattern pattern;
  std::string condition;  // expected failed validate condition
  std::string stage;      // expected stage without the validate screen
  bool isolated;          // the condition is the only one violated
};

std::vector<Index> permutation(Index n, std::mt19937_64& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

// Base shape (6,6,6) with ranks (1,2,2,2,1).
std::vector<Counterexample> counterexamples() {
  std::vector<Counterexample> out;
  const Index fibers = 216;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto order = permutation(fibers, rng);

    // Fewer than R_{N-1} = 2 fibers.
    std::vector<std::uint8_t> one(fibers, 0);
    one[static_cast<std::size_t>(order[0])] = 1;
    out.push_back({"too few fibers", FiberPattern({6, 6, 6}, one), "last_core_fibers", "last_core", false});

    // A penultimate slice with fewer than R_{N-2} = 2 rows.
    const Index slice = static_cast<Index>(seed % 6);
    const Index keep = static_cast<Index>(rng() % 36);
    std::vector<std::uint8_t> pen(fibers, 1);
    for (Index r = 0; r < 36; ++r) {
      if (r != keep || seed % 2 == 0) pen[static_cast<std::size_t>(r + 36 * slice)] = 0;
    }
    out.push_back({"penultimate slice short of rows", FiberPattern({6, 6, 6}, pen), "penultimate_rows",
                   "slice " + std::to_string(slice), true});

    // Split-1 slices fall into two groups with disjoint rows.
    const auto p1 = permutation(6, rng), p2 = permutation(6, rng), p3 = permutation(6, rng);
    std::vector<std::uint8_t> dis(fibers, 0);
    for (Index i3 = 0; i3 < 6; ++i3) {
      for (Index i2 = 0; i2 < 6; ++i2) {
        const bool low = i3 == 0 ? i2 < 3 : (i3 == 1 ? i2 >= 3 : true);
        for (Index i1 = 0; i1 < 6; ++i1) {
          if ((i1 < 3) != low) continue;
          dis[static_cast<std::size_t>(p1[static_cast<std::size_t>(i1)] +
                                       6 * (p2[static_cast<std::size_t>(i2)] + 6 * p3[static_cast<std::size_t>(i3)]))] = 1;
        }
      }
    }
    out.push_back({"disconnected overlap graph", FiberPattern({6, 6, 6}, dis), "overlap_connectivity", "unfolding 1",
                   true});
  }
  return out;
}

// 7. Each violated condition is flagged and makes completion fail with the matching error.
Outcome condition_enforcement() {
  const std::vector<Index> ranks{1, 2, 2, 2, 1};
  const auto truth = tt_to_dense(random_tt({6, 6, 6, 5}, ranks, 77));
  int total = 0, detected = 0;
  for (const auto& c : counterexamples()) {
    ++total;
    const auto rep = validate(c.pattern, ranks);
    const auto failed = rep.failed_conditions();
    bool ok = !rep.overall_valid && std::find(failed.begin(), failed.end(), c.condition) != failed.end();
    if (c.isolated) ok = ok && failed.size() == 1;
    const auto data = mask_apply(truth, c.pattern);
    try {
      complete(data, c.pattern, {ranks});
      ok = false;
    } catch (const ValidationError& e) {
      ok = ok && std::find(e.conditions().begin(), e.conditions().end(), c.condition) != e.conditions().end();
    } catch (const Error&) {
      ok = false;
    }
    for (auto method : {SubspaceMethod::intersection, SubspaceMethod::constraint}) {
      try {
        complete(data, c.pattern, {ranks, method, SliceCombination::none, kDefaultRankTol, false});
        ok = false;
      } catch (const IdentifiabilityError& e) {
        ok = ok && e.stage() == c.stage;
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) {
      ++detected;
    } else {
      std::printf("  missed: %s\n", c.name.c_str());
    }
  }
  return {detected == total, fmt("%d/%d counterexamples flagged by validate and rejected by complete", detected, total)};
}

// 8. Pairwise slice combination lowers the noisy error.
Outcome slice_pairs(unsigned threads) {
  ExperimentSpec spec;
  spec.shape = {16, 16, 16, 16};
  spec.ranks_true = spec.ranks_fit = {1, 3, 3, 4, 1};
  spec.snr_db = {25};
  spec.missing_rate = {0.6};
  spec.trials = 30;
  spec.seed = 12;
  const auto none = sweep(spec, threads);
  spec.combine = SliceCombination::pairs;
  const auto pairs = sweep(spec, threads);
  const auto& a = none.points.front();
  const auto& b = pairs.points.front();
  const double ratio = b.median_error / a.median_error;
  const bool clean = none.numerical_failures == 0 && pairs.numerical_failures == 0 && a.succeeded >= 20;
  return {ratio <= 0.7 && clean,
          fmt("median none %.4g, pairs %.4g, ratio %.3f (<= 0.7); %ld/30 patterns invalid and excluded, numerical "
              "failures %ld/%ld",
              a.median_error, b.median_error, ratio, static_cast<long>(none.invalid_patterns),
              static_cast<long>(none.numerical_failures), static_cast<long>(pairs.numerical_failures))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  Index scale_trials = 20;
  std::vector<int> only;
  app.add_option("--threads", threads, "Workers for sweeps without timing criteria");
  app.add_option("--scale-trials", scale_trials, "Trials per size for the scalability criterion");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"noiseless exact recovery", noiseless_recovery},
      {"SNR sweep reproduction", [&] { return snr_sweep(threads); }},
      {"scalability trend", [&] { return scalability(scale_trials); }},
      {"method equivalence", method_equivalence},
      {"full-observation degeneracy", full_observation},
      {"rank-one example oracle", example_one},
      {"condition enforcement", condition_enforcement},
      {"slice-combination gain", [&] { return slice_pairs(threads); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
