#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <type_traits>

#include "fwtt/completion.hpp"
#include "fwtt/errors.hpp"
#include "fwtt/harness.hpp"
#include "test_util.hpp"

using namespace fwtt;

namespace {

DenseTensor dense_tt(const Shape& shape, const std::vector<Index>& ranks, std::uint64_t seed) {
  return tt_to_dense(random_tt(shape, ranks, seed));
}

double completion_error(const DenseTensor& truth, const FiberPattern& p, const CompletionConfig& cfg) {
  return relative_error(truth, tt_to_dense(complete(mask_apply(truth, p), p, cfg).tt));
}

// Core n reshaped to (R_{n-1} I_n) x R_n.
Matrix left_unfolded(const DenseTensor& core) {
  return core.as_matrix(core.extent(0) * core.extent(1));
}

template <class E>
std::string stage_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const E& e) {
    if constexpr (std::is_same_v<E, IdentifiabilityError>) {
      return e.stage();
    } else {
      return "thrown";
    }
  }
  return "";
}

}  // namespace

TEST_SUITE("completion") {
  TEST_CASE("tt_svd at exact ranks") {
    const auto rank1 = dense_tt({3, 4, 5}, {1, 1, 1, 1}, 1);
    CHECK(relative_error(rank1, tt_to_dense(tt_svd(rank1, {1, 1, 1, 1}))) <= 1e-14);
    const std::vector<Index> ranks{1, 2, 3, 2, 1};
    const auto t = dense_tt({4, 5, 3, 4}, ranks, 2);
    const auto tt = tt_svd(t, ranks);
    CHECK(tt.ranks() == ranks);
    CHECK(relative_error(t, tt_to_dense(tt)) <= 1e-12);
    CHECK_THROWS_AS(tt_svd(t, {1, 5, 3, 2, 1}), InvalidArgument);
  }

  TEST_CASE("parallel_tt_svd reproduces tt_svd") {
    const std::vector<Index> ranks{1, 3, 4, 3, 1};
    const auto t = dense_tt({5, 4, 6, 5}, ranks, 3);
    const auto a = tt_to_dense(tt_svd(t, ranks));
    const auto b = tt_to_dense(parallel_tt_svd(t, ranks));
    CHECK(relative_error(t, b) <= 1e-12);
    CHECK(relative_error(a, b) <= 1e-12);

    const auto rank1 = dense_tt({3, 3, 3}, {1, 1, 1, 1}, 4);
    CHECK(relative_error(tt_to_dense(tt_svd(rank1, {1, 1, 1, 1})), tt_to_dense(parallel_tt_svd(rank1, {1, 1, 1, 1}))) <=
          1e-14);
    const auto full = fwtt::test::random_tensor({3, 4, 2}, 5);
    CHECK(relative_error(full, tt_to_dense(parallel_tt_svd(full, {1, 3, 2, 1}))) <= 1e-13);
  }

  TEST_CASE("full observation reduces to parallel_tt_svd") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::vector<Index> ranks{1, 2, 3, 3, 1};
      const auto t = dense_tt({5, 4, 5, 6}, ranks, seed);
      const FiberPattern p({5, 4, 5});
      for (auto method : {SubspaceMethod::intersection, SubspaceMethod::constraint}) {
        const auto c = tt_to_dense(complete(t, p, {ranks, method}).tt);
        CHECK(relative_error(tt_to_dense(parallel_tt_svd(t, ranks)), c) <= 1e-12);
      }
    }
  }

  TEST_CASE("noiseless recovery with missing fibers") {
    struct Case {
      Shape shape;
      std::vector<Index> ranks;
      double rate;
    };
    for (const auto& c : {Case{{8, 8, 8, 8}, {1, 2, 3, 3, 1}, 0.4}, Case{{6, 6, 6, 6, 6}, {1, 2, 2, 3, 3, 1}, 0.4},
                          Case{{10, 9, 8}, {1, 3, 4, 1}, 0.5}}) {
      const auto t = dense_tt(c.shape, c.ranks, 10);
      const Shape base(c.shape.begin(), c.shape.end() - 1);
      const auto p = fwtt::test::valid_random_pattern(base, c.rate, c.ranks, 11);
      const double ei = completion_error(t, p, {c.ranks, SubspaceMethod::intersection});
      const double ec = completion_error(t, p, {c.ranks, SubspaceMethod::constraint});
      const double ep = completion_error(t, p, {c.ranks, SubspaceMethod::intersection, SliceCombination::pairs});
      CHECK(ei <= 1e-9);
      CHECK(ec <= 1e-9);
      CHECK(ep <= 1e-9);
    }
  }

  TEST_CASE("order two needs every fiber") {
    const std::vector<Index> ranks{1, 2, 1};
    const auto t = dense_tt({5, 4}, ranks, 2);
    CHECK(relative_error(t, tt_to_dense(complete(t, FiberPattern({5}), {ranks}).tt)) <= 1e-13);
    const FiberPattern missing({5}, {1, 1, 0, 1, 1});
    CHECK_THROWS_AS(complete(mask_apply(t, missing), missing, {ranks}), ValidationError);
    CHECK(stage_of<IdentifiabilityError>([&] { complete(mask_apply(t, missing), missing, {ranks, SubspaceMethod::intersection, SliceCombination::none, 1e-8, false}); }) ==
          "slice 2");
  }

  TEST_CASE("orthonormal cores and diagnostics") {
    const std::vector<Index> ranks{1, 3, 3, 4, 1};
    const auto t = dense_tt({7, 6, 7, 8}, ranks, 5);
    const auto p = fwtt::test::valid_random_pattern({7, 6, 7}, 0.3, ranks, 6);
    const auto out = complete(mask_apply(t, p), p, {ranks});
    for (Index n = 0; n < 2; ++n) {
      const Matrix g = left_unfolded(out.tt.core(n));
      CHECK((g.transpose() * g - Matrix::Identity(g.cols(), g.cols())).norm() < 1e-12);
    }
    const Matrix last = out.tt.core(3).as_matrix(4);
    CHECK((last * last.transpose() - Matrix::Identity(4, 4)).norm() < 1e-12);
    REQUIRE(out.unfoldings.size() == 2);
    for (const auto& u : out.unfoldings) CHECK(u.gap > 1e-8);
    CHECK(out.slice_residuals.size() == 7);
    for (const auto& s : out.slice_residuals) CHECK(s.residual <= 1e-9 * t.frobenius_norm());
    CHECK(out.last_singular_values.size() == 8);
    CHECK(out.last_singular_values[4] <= 1e-10 * out.last_singular_values[0]);
    REQUIRE(out.report.has_value());
    CHECK(out.report->overall_valid);
  }

  TEST_CASE("scale equivariance and determinism") {
    const std::vector<Index> ranks{1, 2, 3, 3, 1};
    const auto t = dense_tt({6, 5, 6, 5}, ranks, 7);
    const auto noisy = add_noise(t, 20.0, 8);
    const auto p = fwtt::test::valid_random_pattern({6, 5, 6}, 0.35, ranks, 9);
    auto scaled = noisy;
    for (auto& x : scaled.values()) x *= -2.5;
    const auto a = tt_to_dense(complete(mask_apply(noisy, p), p, {ranks}).tt);
    auto b = tt_to_dense(complete(mask_apply(scaled, p), p, {ranks}).tt);
    for (auto& x : b.values()) x /= -2.5;
    CHECK(relative_error(a, b) <= 1e-12);
    const auto again = tt_to_dense(complete(mask_apply(noisy, p), p, {ranks}).tt);
    CHECK(again == a);
  }

  TEST_CASE("unobserved entries are ignored") {
    const std::vector<Index> ranks{1, 2, 2, 3, 1};
    const auto t = dense_tt({5, 5, 5, 5}, ranks, 12);
    const auto p = fwtt::test::valid_random_pattern({5, 5, 5}, 0.3, ranks, 13);
    auto garbage = t;
    for (Index f = 0; f < p.fiber_count(); ++f) {
      if (!p.observed(f)) garbage.values()[f] = 1e6;
    }
    const auto a = tt_to_dense(complete(mask_apply(t, p), p, {ranks}).tt);
    const auto b = tt_to_dense(complete(garbage, p, {ranks}).tt);
    CHECK(a == b);
    auto bad = mask_apply(t, p);
    bad.values()[p.observed_fibers().front()] = std::nan("");
    CHECK_THROWS_AS(complete(bad, p, {ranks}), InvalidArgument);
  }

  TEST_CASE("failure modes name their stage") {
    const std::vector<Index> ranks{1, 2, 2, 2, 1};
    const auto t = dense_tt({6, 6, 6, 5}, ranks, 14);
    CompletionConfig no_check{ranks, SubspaceMethod::intersection, SliceCombination::none, 1e-8, false};

    SUBCASE("too few fibers") {
      std::vector<std::uint8_t> flags(216, 0);
      flags[7] = 1;
      const FiberPattern p({6, 6, 6}, flags);
      try {
        complete(mask_apply(t, p), p, {ranks});
        FAIL("accepted");
      } catch (const ValidationError& e) {
        CHECK(e.conditions().front() == "last_core_fibers");
      }
      CHECK(stage_of<IdentifiabilityError>([&] { complete(mask_apply(t, p), p, no_check); }) == "last_core");
    }
    SUBCASE("penultimate slice") {
      std::vector<std::uint8_t> flags(216, 1);
      for (Index r = 1; r < 36; ++r) flags[static_cast<std::size_t>(r + 36 * 4)] = 0;
      const FiberPattern p({6, 6, 6}, flags);
      try {
        complete(mask_apply(t, p), p, {ranks});
        FAIL("accepted");
      } catch (const ValidationError& e) {
        CHECK(e.conditions() == std::vector<std::string>{"penultimate_rows"});
      }
      CHECK(stage_of<IdentifiabilityError>([&] { complete(mask_apply(t, p), p, no_check); }) == "slice 4");
    }
    SUBCASE("disconnected overlaps") {
      const FiberPattern p({6, 6, 6}, fwtt::test::disconnected_flags());
      try {
        complete(mask_apply(t, p), p, {ranks});
        FAIL("accepted");
      } catch (const ValidationError& e) {
        CHECK(e.conditions() == std::vector<std::string>{"overlap_connectivity"});
      }
      CHECK(stage_of<IdentifiabilityError>([&] { complete(mask_apply(t, p), p, no_check); }) == "unfolding 1");
      auto constraint = no_check;
      constraint.method = SubspaceMethod::constraint;
      CHECK(stage_of<IdentifiabilityError>([&] { complete(mask_apply(t, p), p, constraint); }) == "unfolding 1");
    }
    SUBCASE("rank structure") {
      const std::vector<Index> bad{1, 3, 2, 3, 1};
      const auto u = dense_tt({6, 6, 6, 5}, bad, 15);
      const FiberPattern p({6, 6, 6});
      CHECK_THROWS_AS(complete(u, p, {bad}), ValidationError);
      CompletionConfig cfg{bad, SubspaceMethod::intersection, SliceCombination::none, 1e-8, false};
      CHECK(stage_of<IdentifiabilityError>([&] { complete(u, p, cfg); }) == "unfolding 1");
    }
    SUBCASE("bad configuration") {
      const FiberPattern p({6, 6, 6});
      CHECK_THROWS_AS(complete(t, p, {{1, 2, 2, 1}}), InvalidArgument);
      CHECK_THROWS_AS(complete(t, FiberPattern({6, 6}), {ranks}), InvalidArgument);
      CompletionConfig zero_tol{ranks};
      zero_tol.tol = 0.0;
      CHECK_THROWS_AS(complete(t, p, zero_tol), InvalidArgument);
    }
  }

  TEST_CASE("reconstruct_fibers") {
    const std::vector<Index> ranks{1, 2, 2, 1};
    const auto truth = dense_tt({4, 5, 6}, ranks, 16);
    const auto p = fwtt::test::valid_random_pattern({4, 5}, 0.4, ranks, 17);
    const auto data = mask_apply(add_noise(truth, 30.0, 18), p);
    const auto tt = complete(data, p, {ranks}).tt;
    const auto out = reconstruct_fibers(tt, data, p);
    const auto dense = tt_to_dense(tt);
    for (Index f = 0; f < 20; ++f) {
      for (Index k = 0; k < 6; ++k) {
        const double v = out.values()[f + 20 * k];
        CHECK(std::isfinite(v));
        CHECK(v == (p.observed(f) ? data.values()[f + 20 * k] : dense.values()[f + 20 * k]));
      }
    }
    const auto noisy = add_noise(truth, 30.0, 18);
    CHECK(reconstruct_fibers(tt, noisy, FiberPattern({4, 5})) == noisy);
    CHECK_THROWS_AS(reconstruct_fibers(tt, DenseTensor({4, 5, 5}), FiberPattern({4, 5})), InvalidArgument);
  }

  TEST_CASE("slice_submatrices") {
    const auto t = fwtt::test::random_tensor({3, 2, 4}, 19);
    const FiberPattern p({3, 2}, {1, 0, 1, 0, 0, 0});
    const auto subs = slice_submatrices(t, p, 1);
    REQUIRE(subs.size() == 1);
    CHECK(subs[0].rows == std::vector<Index>{0, 2});
    CHECK(subs[0].sources == std::vector<Index>{0});
    for (Index k = 0; k < 4; ++k) {
      CHECK(subs[0].values(0, k) == t.values()[0 + 6 * k]);
      CHECK(subs[0].values(1, k) == t.values()[2 + 6 * k]);
    }
    CHECK(parse_method("constraint") == SubspaceMethod::constraint);
    CHECK(parse_combination("pairs") == SliceCombination::pairs);
    CHECK(to_string(SubspaceMethod::intersection) == "intersection");
    CHECK_THROWS_AS(parse_method("svd"), InvalidArgument);
    CHECK_THROWS_AS(parse_combination("triples"), InvalidArgument);
  }
}
