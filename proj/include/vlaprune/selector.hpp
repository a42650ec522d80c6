// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "vlaprune/attention.hpp"
#include "vlaprune/estimator.hpp"

namespace vlaprune {

/// Sorted, distinct, 0-based visual patch indices.
using IndexSet = std::vector<std::size_t>;

/// Visual-token embeddings at the pruning layer, one row per patch.
class Embeddings {
public:
    Embeddings() = default;
    Embeddings(std::size_t m, std::size_t dim, std::vector<float> values);

    std::size_t size() const noexcept {
        return m_m;
    }
    std::size_t dim() const noexcept {
        return m_dim;
    }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(m_values).subspan(i * m_dim, m_dim);
    }
    std::span<const float> values() const noexcept {
        return m_values;
    }

private:
    std::size_t m_m = 0;
    std::size_t m_dim = 0;
    std::vector<float> m_values;
};

enum class SelectorVariant {
    Dual,          ///< combine-then-filter: top-k union followed by max-min filtering
    PrefillOnly,   ///< top-k of semantic scores
    ActionOnly,    ///< top-k of estimated action scores
    ScoreFusion,   ///< top-k of a weighted sum of min-max normalized scores
    DiversityOnly  ///< max-min filtering over every patch, scores ignored
};

enum class WarmupPolicy {
    RetainAll,   ///< keep every token until the estimator is warm
    PrefillOnly  ///< fall back to the prefill-only selector until warm
};

std::string_view to_string(SelectorVariant variant);
std::string_view to_string(WarmupPolicy policy);
SelectorVariant parse_selector_variant(std::string_view text);
WarmupPolicy parse_warmup_policy(std::string_view text);

struct PruneConfig {
    std::size_t budget = 1;       ///< retained token count
    std::size_t prune_layer = 3;  ///< tokens are dropped before this (1-based) layer
    SelectorVariant variant = SelectorVariant::Dual;
    double fusion_weight = 0.5;   ///< weight of the semantic scores, ScoreFusion only
    WarmupPolicy warmup = WarmupPolicy::RetainAll;

    /// Throws ConfigError unless 1 <= budget <= m_visual, prune_layer >= 1 and fusion_weight in [0, 1].
    void validate(std::size_t m_visual) const;
};

/// floor(ratio * m), clamped to at least one token. `ratio` must lie in (0, 1].
std::size_t budget_from_ratio(double ratio, std::size_t m);

struct SelectionResult {
    IndexSet retained;
    std::size_t pool_size = 0;          ///< size of the set handed to the final selection stage
    IndexSet c_vl;                      ///< top-k of semantic scores (empty during RetainAll warm-up)
    IndexSet c_act;                     ///< top-k of estimated action scores (empty when unavailable)
    double min_pairwise_distance = 0.0; ///< over `retained`; 0 with fewer than two tokens
    bool warmup_applied = false;
    std::size_t degenerate_rows = 0;    ///< zero-norm embeddings met while measuring distances

    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

/// Indices of the k largest scores, lowest index first among ties. Returned sorted ascending.
IndexSet top_k_indices(const ScoreVector& scores, std::size_t k);

/// 1 - cos(u, v) clamped to [0, 2]. Throws ValueError when either vector has zero norm.
double cosine_distance(std::span<const double> u, std::span<const double> v);
double cosine_distance(std::span<const float> u, std::span<const float> v);

struct FilterResult {
    IndexSet selected;
    double min_pairwise_distance = 0.0;
    std::size_t degenerate_rows = 0;
};

/**
 * @brief Greedy max-min diversity filtering of a candidate pool down to `target` tokens.
 *
 * Pools no larger than the target are returned unchanged. Otherwise the seed is the candidate whose
 * second-nearest cosine distance inside the pool is largest; each further pick maximizes the minimum
 * distance to the tokens picked so far. Ties go to the lower index. Zero-norm embeddings are treated as
 * distance 0 to every other token and counted in `degenerate_rows`.
 */
FilterResult min_redundancy_filter(const Embeddings& embeddings, std::span<const std::size_t> pool,
                                   std::size_t target);

/// Smallest pairwise cosine distance inside `indices` (0 when fewer than two), zero-norm rows at distance 0.
double min_pairwise_distance(const Embeddings& embeddings, std::span<const std::size_t> indices,
                             std::size_t* degenerate_rows = nullptr);

/// Combine-then-filter selection.
SelectionResult select_dual(const ScoreVector& s_vl, const ScoreVector& s_act_hat, const Embeddings& embeddings,
                            const PruneConfig& config);

/// Dispatches on `config.variant`; Dual forwards to select_dual.
SelectionResult select_variant(const ScoreVector& s_vl, const ScoreVector& s_act_hat, const Embeddings& embeddings,
                               const PruneConfig& config);

/// Selection for one frame given the estimator history accumulated before it. Applies the warm-up policy
/// until `state` has seen `state.config().window` frames.
SelectionResult select_frame(const ScoreVector& s_vl, const Embeddings& embeddings, const EstimatorState& state,
                             const PruneConfig& config);

/// Per-vector min-max normalization to [0, 1]; constant vectors map to zeros.
ScoreVector min_max_normalize(const ScoreVector& scores);

}  // namespace vlaprune
