// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>

#include "support.hpp"
#include "vlaprune/error.hpp"
#include "vlaprune/estimator.hpp"
#include "vlaprune/selector.hpp"

using namespace vlaprune;
using vlaprune::testing::angle_embeddings;
using vlaprune::testing::brute_min_distance;
using vlaprune::testing::random_embeddings;
using vlaprune::testing::random_scores;

namespace {

PruneConfig budget_config(std::size_t budget, SelectorVariant variant = SelectorVariant::Dual) {
    PruneConfig cfg;
    cfg.budget = budget;
    cfg.variant = variant;
    return cfg;
}

/// Reference top-k: stable sort of (score desc, index asc).
IndexSet sort_top_k(const ScoreVector& s, std::size_t k) {
    IndexSet order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

ScoreVector scaled(const ScoreVector& s, double c) {
    std::vector<double> v(s.begin(), s.end());
    for (double& x : v) {
        x *= c;
    }
    return ScoreVector(std::move(v));
}

}  // namespace

TEST_CASE("top_k_indices") {
    CHECK(top_k_indices(ScoreVector({0.1, 0.9, 0.5, 0.5}), 2) == IndexSet{1, 2});
    CHECK(top_k_indices(ScoreVector({0.3, 0.3, 0.3}), 2) == IndexSet{0, 1});
    CHECK(top_k_indices(ScoreVector({0.3, 0.1}), 2) == IndexSet{0, 1});
    CHECK_THROWS_AS(top_k_indices(ScoreVector({0.3}), 0), ConfigError);
    CHECK_THROWS_AS(top_k_indices(ScoreVector({0.3}), 2), ConfigError);

    Xoshiro256 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 1 + rng.below(64);
        std::vector<double> v(m);
        for (double& x : v) {
            // Coarse values so ties are common.
            x = static_cast<double>(rng.below(8));
        }
        const ScoreVector s(v);
        const std::size_t k = 1 + rng.below(m);
        CHECK(top_k_indices(s, k) == sort_top_k(s, k));
    }
}

TEST_CASE("cosine_distance") {
    const std::vector<double> x{1.0, 0.0};
    const std::vector<double> y{0.0, 1.0};
    const std::vector<double> minus_x{-1.0, 0.0};
    const std::vector<double> scaled_x{5.0, 0.0};
    CHECK(cosine_distance(std::span<const double>(x), std::span<const double>(y)) == doctest::Approx(1.0));
    CHECK(cosine_distance(std::span<const double>(x), std::span<const double>(minus_x)) == doctest::Approx(2.0));
    CHECK(cosine_distance(std::span<const double>(x), std::span<const double>(scaled_x)) == doctest::Approx(0.0));
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(cosine_distance(std::span<const double>(x), std::span<const double>(zero)), ValueError);
    const std::vector<double> three{1.0, 0.0, 0.0};
    CHECK_THROWS_AS(cosine_distance(std::span<const double>(x), std::span<const double>(three)), ShapeError);

    Xoshiro256 rng(43);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<float> u(7), v(7);
        for (std::size_t i = 0; i < 7; ++i) {
            u[i] = static_cast<float>(rng.normal());
            v[i] = static_cast<float>(rng.normal());
        }
        const double d = cosine_distance(std::span<const float>(u), std::span<const float>(v));
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
        CHECK(d == cosine_distance(std::span<const float>(v), std::span<const float>(u)));
    }
}

TEST_CASE("min_redundancy_filter") {
    SUBCASE("four directions, target 2") {
        const Embeddings e = angle_embeddings({0.0, 10.0, 90.0, 180.0});
        const IndexSet pool{0, 1, 2, 3};
        const FilterResult r = min_redundancy_filter(e, pool, 2);
        CHECK(r.selected == IndexSet{0, 3});
        CHECK(r.min_pairwise_distance == doctest::Approx(2.0));
    }
    SUBCASE("pool at or below target is returned unchanged") {
        const Embeddings e = angle_embeddings({0.0, 10.0, 90.0, 180.0});
        const IndexSet pool{1, 2};
        CHECK(min_redundancy_filter(e, pool, 2).selected == pool);
        CHECK(min_redundancy_filter(e, pool, 3).selected == pool);
    }
    SUBCASE("identical embeddings keep the lowest indices") {
        const Embeddings e(5, 3, std::vector<float>(15, 1.0f));
        const IndexSet pool{0, 1, 2, 3, 4};
        const FilterResult r = min_redundancy_filter(e, pool, 3);
        CHECK(r.selected == IndexSet{0, 1, 2});
        CHECK(r.min_pairwise_distance == 0.0);
    }
    SUBCASE("two-element pool, target 1") {
        const Embeddings e = angle_embeddings({0.0, 90.0});
        const IndexSet pool{0, 1};
        CHECK(min_redundancy_filter(e, pool, 1).selected == IndexSet{0});
    }
    SUBCASE("zero-norm rows are counted and sit at distance 0") {
        std::vector<float> v{1, 0, 0, 0, 0, 1, -1, 0};
        const Embeddings e(4, 2, v);
        const IndexSet pool{0, 1, 2, 3};
        const FilterResult r = min_redundancy_filter(e, pool, 2);
        CHECK(r.degenerate_rows == 1);
        CHECK(r.selected == IndexSet{0, 3});
    }
    SUBCASE("greedy min distance equals the brute-force value of its output") {
        Xoshiro256 rng(47);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t m = 3 + rng.below(40);
            const Embeddings e = random_embeddings(m, 1 + rng.below(8), rng);
            IndexSet pool(m);
            std::iota(pool.begin(), pool.end(), std::size_t{0});
            const std::size_t target = 2 + rng.below(m - 1);
            const FilterResult r = min_redundancy_filter(e, pool, target);
            CHECK(r.selected.size() == std::min(target, m));
            CHECK(std::is_sorted(r.selected.begin(), r.selected.end()));
            CHECK(r.min_pairwise_distance == doctest::Approx(brute_min_distance(e, r.selected)).epsilon(1e-9));
        }
    }
    SUBCASE("errors") {
        const Embeddings e = angle_embeddings({0.0, 10.0, 90.0});
        const IndexSet unsorted{2, 1};
        const IndexSet out_of_range{0, 5};
        const IndexSet ok{0, 1};
        CHECK_THROWS_AS(min_redundancy_filter(e, unsorted, 1), ShapeError);
        CHECK_THROWS_AS(min_redundancy_filter(e, out_of_range, 1), ShapeError);
        CHECK_THROWS_AS(min_redundancy_filter(e, ok, 0), ConfigError);
        CHECK_THROWS_AS(min_redundancy_filter(e, IndexSet{}, 1), ValueError);
    }
}

TEST_CASE("select_dual") {
    SUBCASE("union of two disjoint top-k sets is filtered to the budget") {
        const Embeddings e = angle_embeddings({0.0, 20.0, 90.0, 90.0, 180.0, 160.0});
        const ScoreVector s_vl({5, 4, 1, 1, 0, 0});
        const ScoreVector s_act({0, 0, 1, 1, 4, 5});
        const SelectionResult r = select_dual(s_vl, s_act, e, budget_config(2));
        CHECK(r.c_vl == IndexSet{0, 1});
        CHECK(r.c_act == IndexSet{4, 5});
        CHECK(r.pool_size == 4);
        CHECK(r.retained == IndexSet{0, 4});
        CHECK(r.min_pairwise_distance == doctest::Approx(2.0));
    }
    SUBCASE("identical score vectors skip filtering") {
        Xoshiro256 rng(53);
        const ScoreVector s = random_scores(32, rng);
        const Embeddings e = random_embeddings(32, 8, rng);
        const SelectionResult r = select_dual(s, s, e, budget_config(8));
        CHECK(r.pool_size == 8);
        CHECK(r.retained == top_k_indices(s, 8));
    }
    SUBCASE("budget covering every patch keeps everything") {
        const Embeddings e = angle_embeddings({0.0, 20.0, 90.0});
        const ScoreVector s({1, 2, 3});
        CHECK(select_dual(s, s, e, budget_config(3)).retained == IndexSet{0, 1, 2});
        CHECK(select_dual(s, s, e, budget_config(5)).retained == IndexSet{0, 1, 2});
    }
    SUBCASE("shape mismatch") {
        const Embeddings e = angle_embeddings({0.0, 20.0, 90.0});
        CHECK_THROWS_AS(select_dual(ScoreVector({1, 2}), ScoreVector({1, 2, 3}), e, budget_config(1)), ShapeError);
    }
    SUBCASE("exact budget and pool bounds on random inputs") {
        Xoshiro256 rng(59);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t m = 2 + rng.below(100);
            const std::size_t k = 1 + rng.below(m - 1);
            const SelectionResult r =
                select_dual(random_scores(m, rng), random_scores(m, rng), random_embeddings(m, 6, rng),
                            budget_config(k));
            CHECK(r.retained.size() == k);
            CHECK(r.pool_size >= k);
            CHECK(r.pool_size <= std::min(2 * k, m));
            for (std::size_t idx : r.retained) {
                CHECK((std::binary_search(r.c_vl.begin(), r.c_vl.end(), idx) ||
                       std::binary_search(r.c_act.begin(), r.c_act.end(), idx)));
            }
        }
    }
}

TEST_CASE("selector variants") {
    const Embeddings e = angle_embeddings({0.0, 20.0, 90.0, 90.0, 180.0, 160.0});
    const ScoreVector s_vl({5, 4, 1, 1, 0, 0});
    const ScoreVector s_act({0, 0, 1, 1, 4, 5});

    CHECK(select_variant(s_vl, s_act, e, budget_config(2, SelectorVariant::PrefillOnly)).retained ==
          IndexSet{0, 1});
    CHECK(select_variant(s_vl, s_act, e, budget_config(2, SelectorVariant::ActionOnly)).retained ==
          IndexSet{4, 5});
    CHECK(select_variant(s_vl, s_act, e, budget_config(2, SelectorVariant::Dual)).retained == IndexSet{0, 4});

    SUBCASE("score fusion") {
        PruneConfig cfg = budget_config(2, SelectorVariant::ScoreFusion);
        cfg.fusion_weight = 1.0;
        CHECK(select_variant(s_vl, s_act, e, cfg).retained == IndexSet{0, 1});
        cfg.fusion_weight = 0.0;
        CHECK(select_variant(s_vl, s_act, e, cfg).retained == IndexSet{4, 5});
        // Normalized: s_vl -> [1, .8, .2, .2, 0, 0], s_act -> [0, 0, .2, .2, .8, 1]; fused [.5, .4, .2, .2, .4, .5].
        cfg.fusion_weight = 0.5;
        CHECK(select_variant(s_vl, s_act, e, cfg).retained == IndexSet{0, 5});
        cfg.fusion_weight = 1.5;
        CHECK_THROWS_AS(select_variant(s_vl, s_act, e, cfg), ConfigError);
    }
    SUBCASE("small examples") {
        const Embeddings e4 = vlaprune::testing::angle_embeddings({0, 10, 90, 180});
        CHECK(select_variant(ScoreVector({3, 2, 1, 0}), ScoreVector({0, 0, 0, 0}), e4,
                             budget_config(2, SelectorVariant::PrefillOnly))
                  .retained == IndexSet{0, 1});
        // Fused scores tie at 0.5; the lower index wins.
        PruneConfig cfg = budget_config(1, SelectorVariant::ScoreFusion);
        cfg.fusion_weight = 0.5;
        const Embeddings e2 = vlaprune::testing::angle_embeddings({0, 90});
        CHECK(select_variant(ScoreVector({1, 0}), ScoreVector({0, 1}), e2, cfg).retained == IndexSet{0});
    }
    SUBCASE("diversity only ignores scores") {
        const ScoreVector flat({1, 1, 1, 1, 1, 1});
        const SelectionResult a = select_variant(s_vl, s_act, e, budget_config(2, SelectorVariant::DiversityOnly));
        const SelectionResult b = select_variant(flat, flat, e, budget_config(2, SelectorVariant::DiversityOnly));
        CHECK(a.retained == b.retained);
        CHECK(a.pool_size == 6);
        CHECK(a.min_pairwise_distance == doctest::Approx(2.0));
    }
    SUBCASE("names round-trip") {
        for (auto v : {SelectorVariant::Dual, SelectorVariant::PrefillOnly, SelectorVariant::ActionOnly,
                       SelectorVariant::ScoreFusion, SelectorVariant::DiversityOnly}) {
            CHECK(parse_selector_variant(to_string(v)) == v);
        }
        CHECK_THROWS_AS(parse_selector_variant("random"), ConfigError);
        CHECK(parse_warmup_policy("retain-all") == WarmupPolicy::RetainAll);
        CHECK(parse_warmup_policy("prefill-only") == WarmupPolicy::PrefillOnly);
        CHECK_THROWS_AS(parse_warmup_policy("skip"), ConfigError);
    }
}

TEST_CASE("min_max_normalize") {
    CHECK(min_max_normalize(ScoreVector({2, 4, 3})) == ScoreVector({0.0, 1.0, 0.5}));
    CHECK(min_max_normalize(ScoreVector({0.7, 0.7})) == ScoreVector({0.0, 0.0}));
}

TEST_CASE("select_frame warm-up") {
    Xoshiro256 rng(61);
    const std::size_t m = 16;
    const Embeddings e = random_embeddings(m, 4, rng);
    EstimatorState state;  // window 3
    PruneConfig cfg = budget_config(4);

    SUBCASE("retain-all until the window is full") {
        for (int t = 0; t < 3; ++t) {
            const ScoreVector s = random_scores(m, rng);
            const SelectionResult r = select_frame(s, e, state, cfg);
            CHECK(r.warmup_applied);
            CHECK(r.retained.size() == m);
            state.observe(random_scores(m, rng));
        }
        const SelectionResult r = select_frame(random_scores(m, rng), e, state, cfg);
        CHECK_FALSE(r.warmup_applied);
        CHECK(r.retained.size() == 4);
    }
    SUBCASE("prefill-only warm-up") {
        cfg.warmup = WarmupPolicy::PrefillOnly;
        const ScoreVector s = random_scores(m, rng);
        const SelectionResult r = select_frame(s, e, state, cfg);
        CHECK(r.warmup_applied);
        CHECK(r.retained == top_k_indices(s, 4));
    }
    SUBCASE("after warm-up the action estimate is the windowed history") {
        std::vector<ScoreVector> history;
        for (int t = 0; t < 4; ++t) {
            history.push_back(random_scores(m, rng));
            state.observe(history.back());
        }
        const ScoreVector s = random_scores(m, rng);
        const SelectionResult r = select_frame(s, e, state, cfg);
        CHECK(r == select_dual(s, window_estimate(state, 0.8, 3), e, cfg));
    }
    SUBCASE("patch count mismatch") {
        state.observe(random_scores(m + 1, rng));
        CHECK_THROWS_AS(select_frame(random_scores(m, rng), e, state, cfg), ShapeError);
    }
}

TEST_CASE("selections are invariant to positive rescaling of both score vectors") {
    Xoshiro256 rng(67);
    for (auto variant : {SelectorVariant::Dual, SelectorVariant::PrefillOnly, SelectorVariant::ActionOnly,
                         SelectorVariant::ScoreFusion, SelectorVariant::DiversityOnly}) {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t m = 8 + rng.below(60);
            const ScoreVector a = random_scores(m, rng);
            const ScoreVector b = random_scores(m, rng);
            const Embeddings e = random_embeddings(m, 5, rng);
            const double c = std::pow(2.0, static_cast<double>(rng.below(20)) - 10.0);
            const PruneConfig cfg = budget_config(1 + rng.below(m), variant);
            CHECK(select_variant(a, b, e, cfg).retained == select_variant(scaled(a, c), scaled(b, c), e, cfg).retained);
        }
    }
}

TEST_CASE("selections are deterministic") {
    Xoshiro256 rng(71);
    const ScoreVector a = random_scores(128, rng);
    const ScoreVector b = random_scores(128, rng);
    const Embeddings e = random_embeddings(128, 16, rng);
    CHECK(select_dual(a, b, e, budget_config(32)) == select_dual(a, b, e, budget_config(32)));
}

TEST_CASE("budget_from_ratio") {
    CHECK(budget_from_ratio(0.5, 256) == 128);
    CHECK(budget_from_ratio(0.25, 256) == 64);
    CHECK(budget_from_ratio(0.125, 256) == 32);
    CHECK(budget_from_ratio(1.0, 256) == 256);
    CHECK(budget_from_ratio(0.001, 256) == 1);
    CHECK_THROWS_AS(budget_from_ratio(0.0, 256), ConfigError);
    CHECK_THROWS_AS(budget_from_ratio(1.1, 256), ConfigError);
    PruneConfig cfg = budget_config(0);
    CHECK_THROWS_AS(cfg.validate(10), ConfigError);
    cfg.budget = 11;
    CHECK_THROWS_AS(cfg.validate(10), ConfigError);
}
