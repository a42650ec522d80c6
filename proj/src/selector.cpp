// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/selector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vlaprune/error.hpp"

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace vlaprune {

namespace {

template <typename T>
double cosine_distance_impl(std::span<const T> u, std::span<const T> v) {
    if (u.size() != v.size()) {
        throw ShapeError("cosine distance of vectors with lengths " + std::to_string(u.size()) + " and " +
                         std::to_string(v.size()));
    }
    double dot = 0.0;
    double nu = 0.0;
    double nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) {
        throw ValueError("cosine distance is undefined for a zero-norm vector");
    }
    return std::clamp(1.0 - dot / (std::sqrt(nu) * std::sqrt(nv)), 0.0, 2.0);
}

IndexSet all_indices(std::size_t m) {
    IndexSet out(m);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

void check_pool(std::span<const std::size_t> pool, std::size_t m) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool[i] >= m) {
            throw ShapeError("pool index " + std::to_string(pool[i]) + " out of range for " + std::to_string(m) +
                             " patches");
        }
        if (i > 0 && pool[i] <= pool[i - 1]) {
            throw ShapeError("pool indices must be sorted and distinct");
        }
    }
}

// Gram kernel. Each pair is summed over dim chunks of 256; within a chunk, lane j (0..7) accumulates the
// products at offsets k = j mod 8 with fused multiply-adds, and the lanes combine in a fixed tree. Floats
// widen to double exactly and fused multiply-add rounds once on every platform, so the vector and portable
// paths agree bit for bit. Rows are processed in tiles of eight held as doubles in a small buffer while the
// partner row streams in as floats.
constexpr std::size_t kGramChunk = 256;
constexpr std::size_t kGramTile = 8;

using TileLanes = double[kGramTile][8];

double combine_lanes(const double* l) {
    return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7]));
}

void gram_tile_portable(const double* tile, const float* rb, std::size_t body, TileLanes& lanes) {
    for (auto& row : lanes) {
        std::fill(row, row + 8, 0.0);
    }
    for (std::size_t k = 0; k < body; k += 8) {
        for (std::size_t i = 0; i < kGramTile; ++i) {
            for (std::size_t j = 0; j < 8; ++j) {
                lanes[i][j] = std::fma(tile[i * kGramChunk + k + j], static_cast<double>(rb[k + j]), lanes[i][j]);
            }
        }
    }
}

#if defined(__x86_64__)
[[gnu::target("avx2,fma")]] void gram_tile_fma(const double* tile, const float* rb, std::size_t body,
                                               TileLanes& lanes) {
    // Two passes of four rows keep the accumulators in registers.
    for (std::size_t half = 0; half < kGramTile; half += 4) {
        const double* r0 = tile + (half + 0) * kGramChunk;
        const double* r1 = tile + (half + 1) * kGramChunk;
        const double* r2 = tile + (half + 2) * kGramChunk;
        const double* r3 = tile + (half + 3) * kGramChunk;
        __m256d lo0 = _mm256_setzero_pd(), hi0 = lo0, lo1 = lo0, hi1 = lo0, lo2 = lo0, hi2 = lo0, lo3 = lo0,
                hi3 = lo0;
        for (std::size_t k = 0; k < body; k += 8) {
            const __m256d blo = _mm256_cvtps_pd(_mm_loadu_ps(rb + k));
            const __m256d bhi = _mm256_cvtps_pd(_mm_loadu_ps(rb + k + 4));
            lo0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + k), blo, lo0);
            hi0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + k + 4), bhi, hi0);
            lo1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + k), blo, lo1);
            hi1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + k + 4), bhi, hi1);
            lo2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + k), blo, lo2);
            hi2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + k + 4), bhi, hi2);
            lo3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + k), blo, lo3);
            hi3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + k + 4), bhi, hi3);
        }
        _mm256_storeu_pd(lanes[half + 0], lo0);
        _mm256_storeu_pd(lanes[half + 0] + 4, hi0);
        _mm256_storeu_pd(lanes[half + 1], lo1);
        _mm256_storeu_pd(lanes[half + 1] + 4, hi1);
        _mm256_storeu_pd(lanes[half + 2], lo2);
        _mm256_storeu_pd(lanes[half + 2] + 4, hi2);
        _mm256_storeu_pd(lanes[half + 3], lo3);
        _mm256_storeu_pd(lanes[half + 3] + 4, hi3);
    }
}

// One 8-lane register per row: the same lanes as above, in a single instruction.
[[gnu::target("avx512f")]] void gram_tile_avx512(const double* tile, const float* rb, std::size_t body,
                                                 TileLanes& lanes) {
    __m512d acc[kGramTile];
    for (auto& a : acc) {
        a = _mm512_setzero_pd();
    }
    for (std::size_t k = 0; k < body; k += 8) {
        const __m512d b = _mm512_cvtps_pd(_mm256_loadu_ps(rb + k));
        for (std::size_t i = 0; i < kGramTile; ++i) {
            acc[i] = _mm512_fmadd_pd(_mm512_loadu_pd(tile + i * kGramChunk + k), b, acc[i]);
        }
    }
    for (std::size_t i = 0; i < kGramTile; ++i) {
        _mm512_storeu_pd(lanes[i], acc[i]);
    }
}
#endif

using GramTileFn = void (*)(const double*, const float*, std::size_t, TileLanes&);

GramTileFn pick_gram_tile() {
#if defined(__x86_64__)
    if (__builtin_cpu_supports("avx512f")) {
        return gram_tile_avx512;
    }
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return gram_tile_fma;
    }
#endif
    return gram_tile_portable;
}

/// Upper triangle of the Gram matrix of `rows`, diagonal included: out[a * n + b] for a <= b.
void gram_upper(const std::vector<const float*>& rows, std::size_t dim, double* out) {
    static const GramTileFn kernel = pick_gram_tile();
    const std::size_t n = rows.size();
    std::fill(out, out + n * n, 0.0);
    alignas(64) double tile[kGramTile * kGramChunk];
    TileLanes lanes;
    for (std::size_t k0 = 0; k0 < dim; k0 += kGramChunk) {
        const std::size_t len = std::min(kGramChunk, dim - k0);
        const std::size_t body = len - len % 8;
        for (std::size_t a = 0; a < n; a += kGramTile) {
            for (std::size_t i = 0; i < kGramTile; ++i) {
                const float* src = rows[std::min(a + i, n - 1)] + k0;
                std::copy(src, src + len, tile + i * kGramChunk);
            }
            for (std::size_t b = a; b < n; ++b) {
                const float* rb = rows[b] + k0;
                kernel(tile, rb, body, lanes);
                for (std::size_t i = 0; i < kGramTile && a + i <= b; ++i) {
                    double tail = 0.0;
                    for (std::size_t t = body; t < len; ++t) {
                        tail = std::fma(tile[i * kGramChunk + t], static_cast<double>(rb[t]), tail);
                    }
                    out[(a + i) * n + b] += combine_lanes(lanes[i]) + tail;
                }
            }
        }
    }
}

/// Pairwise cosine distances of the pool members; zero-norm rows sit at distance 0 from everything.
struct PoolDistances {
    std::vector<double> dist;  ///< n x n, symmetric, zero diagonal
    std::size_t degenerate_count = 0;

    PoolDistances(const Embeddings& e, std::span<const std::size_t> pool) : dist(pool.size() * pool.size(), 0.0) {
        const std::size_t n = pool.size();
        std::vector<const float*> rows;
        rows.reserve(n);
        for (std::size_t idx : pool) {
            rows.push_back(e.row(idx).data());
        }
        gram_upper(rows, e.dim(), dist.data());
        std::vector<double> norm(n);
        for (std::size_t a = 0; a < n; ++a) {
            norm[a] = std::sqrt(dist[a * n + a]);
            if (norm[a] == 0.0) {
                ++degenerate_count;
            }
        }
        for (std::size_t a = 0; a < n; ++a) {
            dist[a * n + a] = 0.0;
            for (std::size_t b = a + 1; b < n; ++b) {
                const double d = (norm[a] == 0.0 || norm[b] == 0.0)
                                     ? 0.0
                                     : std::clamp(1.0 - dist[a * n + b] / (norm[a] * norm[b]), 0.0, 2.0);
                dist[a * n + b] = d;
                dist[b * n + a] = d;
            }
        }
    }
};

void check_dims(const ScoreVector& s_vl, const ScoreVector& s_act_hat, const Embeddings& e) {
    if (s_vl.size() != e.size() || s_act_hat.size() != e.size()) {
        throw ShapeError("semantic scores (" + std::to_string(s_vl.size()) + "), action scores (" +
                         std::to_string(s_act_hat.size()) + ") and embeddings (" + std::to_string(e.size()) +
                         ") disagree on the patch count");
    }
}

SelectionResult retain_everything(const Embeddings& e) {
    SelectionResult r;
    r.retained = all_indices(e.size());
    r.pool_size = e.size();
    r.min_pairwise_distance = min_pairwise_distance(e, r.retained, &r.degenerate_rows);
    return r;
}

SelectionResult top_k_result(IndexSet retained, const Embeddings& e) {
    SelectionResult r;
    r.pool_size = retained.size();
    r.retained = std::move(retained);
    r.min_pairwise_distance = min_pairwise_distance(e, r.retained, &r.degenerate_rows);
    return r;
}

}  // namespace

Embeddings::Embeddings(std::size_t m, std::size_t dim, std::vector<float> values)
    : m_m(m),
      m_dim(dim),
      m_values(std::move(values)) {
    if (m_values.size() != m * dim) {
        throw ShapeError("embedding payload has " + std::to_string(m_values.size()) + " values, expected " +
                         std::to_string(m) + "x" + std::to_string(dim));
    }
    for (float v : m_values) {
        if (!std::isfinite(v)) {
            throw ValueError("embeddings must be finite");
        }
    }
}

std::string_view to_string(SelectorVariant variant) {
    switch (variant) {
    case SelectorVariant::Dual:
        return "dual";
    case SelectorVariant::PrefillOnly:
        return "prefill-only";
    case SelectorVariant::ActionOnly:
        return "action-only";
    case SelectorVariant::ScoreFusion:
        return "score-fusion";
    case SelectorVariant::DiversityOnly:
        return "diversity-only";
    }
    return "unknown";
}

std::string_view to_string(WarmupPolicy policy) {
    return policy == WarmupPolicy::RetainAll ? "retain-all" : "prefill-only";
}

SelectorVariant parse_selector_variant(std::string_view text) {
    for (auto v : {SelectorVariant::Dual, SelectorVariant::PrefillOnly, SelectorVariant::ActionOnly,
                   SelectorVariant::ScoreFusion, SelectorVariant::DiversityOnly}) {
        if (to_string(v) == text) {
            return v;
        }
    }
    throw ConfigError("unknown selector variant '" + std::string(text) + "'");
}

WarmupPolicy parse_warmup_policy(std::string_view text) {
    if (text == "retain-all") {
        return WarmupPolicy::RetainAll;
    }
    if (text == "prefill-only") {
        return WarmupPolicy::PrefillOnly;
    }
    throw ConfigError("unknown warm-up policy '" + std::string(text) + "' (expected retain-all|prefill-only)");
}

void PruneConfig::validate(std::size_t m_visual) const {
    if (budget == 0 || budget > m_visual) {
        throw ConfigError("budget " + std::to_string(budget) + " outside [1, " + std::to_string(m_visual) + "]");
    }
    if (prune_layer == 0) {
        throw ConfigError("prune layer must be at least 1");
    }
    if (!(fusion_weight >= 0.0 && fusion_weight <= 1.0)) {
        throw ConfigError("fusion weight must lie in [0, 1]");
    }
}

std::size_t budget_from_ratio(double ratio, std::size_t m) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ConfigError("retention ratio must lie in (0, 1]");
    }
    const auto budget = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(m)));
    return std::max<std::size_t>(budget, 1);
}

IndexSet top_k_indices(const ScoreVector& scores, std::size_t k) {
    if (k == 0 || k > scores.size()) {
        throw ConfigError("top-k with k=" + std::to_string(k) + " over " + std::to_string(scores.size()) + " scores");
    }
    IndexSet order = all_indices(scores.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (scores[a] != scores[b]) {
                              return scores[a] > scores[b];
                          }
                          return a < b;
                      });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
    return cosine_distance_impl(u, v);
}

double cosine_distance(std::span<const float> u, std::span<const float> v) {
    return cosine_distance_impl(u, v);
}

double min_pairwise_distance(const Embeddings& embeddings, std::span<const std::size_t> indices,
                             std::size_t* degenerate_rows) {
    for (std::size_t idx : indices) {
        if (idx >= embeddings.size()) {
            throw ShapeError("index " + std::to_string(idx) + " out of range for " +
                             std::to_string(embeddings.size()) + " embeddings");
        }
    }
    const PoolDistances pool(embeddings, indices);
    if (degenerate_rows != nullptr) {
        *degenerate_rows = pool.degenerate_count;
    }
    if (indices.size() < 2) {
        return 0.0;
    }
    const std::size_t n = indices.size();
    const std::vector<double>& dist = pool.dist;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            best = std::min(best, dist[a * n + b]);
        }
    }
    return best;
}

FilterResult min_redundancy_filter(const Embeddings& embeddings, std::span<const std::size_t> pool,
                                   std::size_t target) {
    if (pool.empty()) {
        throw ValueError("redundancy filtering of an empty pool");
    }
    if (target == 0) {
        throw ConfigError("redundancy filtering target must be at least 1");
    }
    check_pool(pool, embeddings.size());

    FilterResult result;
    if (pool.size() <= target) {
        result.selected.assign(pool.begin(), pool.end());
        result.min_pairwise_distance = min_pairwise_distance(embeddings, pool, &result.degenerate_rows);
        return result;
    }

    const std::size_t n = pool.size();
    const PoolDistances distances(embeddings, pool);
    result.degenerate_rows = distances.degenerate_count;
    const std::vector<double>& dist = distances.dist;


    // Seed: largest second-nearest distance. A two-element pool has only a nearest neighbour; use it.
    std::size_t seed = 0;
    double seed_score = -1.0;
    for (std::size_t a = 0; a < n; ++a) {
        double nearest = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) {
                continue;
            }
            const double d = dist[a * n + b];
            if (d < nearest) {
                second = nearest;
                nearest = d;
            } else if (d < second) {
                second = d;
            }
        }
        const double score = n > 2 ? second : nearest;
        if (score > seed_score) {
            seed_score = score;
            seed = a;
        }
    }

    std::vector<bool> taken(n, false);
    std::vector<double> to_selected(dist.begin() + static_cast<std::ptrdiff_t>(seed * n),
                                    dist.begin() + static_cast<std::ptrdiff_t>((seed + 1) * n));
    taken[seed] = true;
    std::vector<std::size_t> picked{seed};
    double min_distance = std::numeric_limits<double>::infinity();

    while (picked.size() < target) {
        std::size_t best = n;
        double best_distance = -1.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!taken[j] && to_selected[j] > best_distance) {
                best_distance = to_selected[j];
                best = j;
            }
        }
        taken[best] = true;
        picked.push_back(best);
        min_distance = std::min(min_distance, best_distance);
        const double* row = dist.data() + best * n;
        for (std::size_t j = 0; j < n; ++j) {
            to_selected[j] = std::min(to_selected[j], row[j]);
        }
    }

    result.selected.reserve(picked.size());
    for (std::size_t p : picked) {
        result.selected.push_back(pool[p]);
    }
    std::sort(result.selected.begin(), result.selected.end());
    result.min_pairwise_distance = picked.size() < 2 ? 0.0 : min_distance;
    return result;
}

ScoreVector min_max_normalize(const ScoreVector& scores) {
    if (scores.empty()) {
        return scores;
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double min = *lo;
    const double range = *hi - *lo;
    std::vector<double> out(scores.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = (scores[i] - min) / range;
        }
    }
    return ScoreVector(std::move(out));
}

SelectionResult select_dual(const ScoreVector& s_vl, const ScoreVector& s_act_hat, const Embeddings& embeddings,
                            const PruneConfig& config) {
    check_dims(s_vl, s_act_hat, embeddings);
    if (config.budget == 0) {
        throw ConfigError("budget must be at least 1");
    }
    const std::size_t m = embeddings.size();
    if (config.budget >= m) {
        return retain_everything(embeddings);
    }

    SelectionResult r;
    r.c_vl = top_k_indices(s_vl, config.budget);
    r.c_act = top_k_indices(s_act_hat, config.budget);
    IndexSet pool;
    pool.reserve(2 * config.budget);
    std::set_union(r.c_vl.begin(), r.c_vl.end(), r.c_act.begin(), r.c_act.end(), std::back_inserter(pool));
    r.pool_size = pool.size();

    FilterResult filtered = min_redundancy_filter(embeddings, pool, config.budget);
    r.retained = std::move(filtered.selected);
    r.min_pairwise_distance = filtered.min_pairwise_distance;
    r.degenerate_rows = filtered.degenerate_rows;
    return r;
}

SelectionResult select_variant(const ScoreVector& s_vl, const ScoreVector& s_act_hat, const Embeddings& embeddings,
                               const PruneConfig& config) {
    check_dims(s_vl, s_act_hat, embeddings);
    if (config.budget == 0) {
        throw ConfigError("budget must be at least 1");
    }
    const std::size_t m = embeddings.size();
    const std::size_t k = std::min(config.budget, m);

    switch (config.variant) {
    case SelectorVariant::Dual:
        return select_dual(s_vl, s_act_hat, embeddings, config);
    case SelectorVariant::PrefillOnly: {
        SelectionResult r = top_k_result(top_k_indices(s_vl, k), embeddings);
        r.c_vl = r.retained;
        return r;
    }
    case SelectorVariant::ActionOnly: {
        SelectionResult r = top_k_result(top_k_indices(s_act_hat, k), embeddings);
        r.c_act = r.retained;
        return r;
    }
    case SelectorVariant::ScoreFusion: {
        if (!(config.fusion_weight >= 0.0 && config.fusion_weight <= 1.0)) {
            throw ConfigError("fusion weight must lie in [0, 1]");
        }
        const ScoreVector a = min_max_normalize(s_vl);
        const ScoreVector b = min_max_normalize(s_act_hat);
        const double lambda = config.fusion_weight;
        std::vector<double> fused(m);
        for (std::size_t i = 0; i < m; ++i) {
            fused[i] = lambda * a[i] + (1.0 - lambda) * b[i];
        }
        SelectionResult r = top_k_result(top_k_indices(ScoreVector(std::move(fused)), k), embeddings);
        r.c_vl = top_k_indices(s_vl, k);
        r.c_act = top_k_indices(s_act_hat, k);
        return r;
    }
    case SelectorVariant::DiversityOnly: {
        const IndexSet everything = all_indices(m);
        FilterResult filtered = min_redundancy_filter(embeddings, everything, k);
        SelectionResult r;
        r.pool_size = m;
        r.retained = std::move(filtered.selected);
        r.min_pairwise_distance = filtered.min_pairwise_distance;
        r.degenerate_rows = filtered.degenerate_rows;
        return r;
    }
    }
    throw ConfigError("unhandled selector variant");
}

SelectionResult select_frame(const ScoreVector& s_vl, const Embeddings& embeddings, const EstimatorState& state,
                             const PruneConfig& config) {
    if (s_vl.size() != embeddings.size()) {
        throw ShapeError("semantic scores and embeddings disagree on the patch count");
    }
    if (state.frames_seen() > 0 && state.patch_count() != s_vl.size()) {
        throw ShapeError("estimator history tracks " + std::to_string(state.patch_count()) + " patches, frame has " +
                         std::to_string(s_vl.size()));
    }
    if (!is_warm(state, state.config().window)) {
        if (config.warmup == WarmupPolicy::RetainAll) {
            SelectionResult r = retain_everything(embeddings);
            r.warmup_applied = true;
            return r;
        }
        PruneConfig fallback = config;
        fallback.variant = SelectorVariant::PrefillOnly;
        SelectionResult r = select_variant(s_vl, s_vl, embeddings, fallback);
        r.warmup_applied = true;
        return r;
    }
    const ScoreVector s_act_hat = estimate(state);
    return select_variant(s_vl, s_act_hat, embeddings, config);
}

}  // namespace vlaprune
