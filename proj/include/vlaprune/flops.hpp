// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace vlaprune {

/// Transformer shape used by the FLOPs model.
struct ModelDims {
    std::uint64_t layers = 32;       ///< T
    std::uint64_t prune_layer = 3;   ///< K, 1-based; layers K..T see the shortened sequence
    std::uint64_t hidden = 4096;     ///< d
    std::uint64_t ffn = 11008;       ///< m, FFN intermediate width
    std::uint64_t text_tokens = 0;   ///< N, includes the proprioceptive token
    std::uint64_t visual_tokens = 256;  ///< M
    double retain_ratio = 1.0;       ///< rho in (0, 1]
    /// Exact retained visual count when known (e.g. a resolved token budget); overrides floor(rho * M).
    std::optional<std::uint64_t> retained_visual;

    /// Throws ConfigError on K outside [1, T], rho outside (0, 1] or a zero width.
    void validate() const;

    std::uint64_t full_length() const noexcept {
        return text_tokens + visual_tokens;
    }
    /// N + floor(rho * M), or N + retained_visual when set
    std::uint64_t pruned_length() const;
};

/// Dims preset by name. Text token count is left at 0; callers must supply it.
std::optional<ModelDims> model_preset(std::string_view name);

/// Per-layer cost 4nd^2 + 2n^2d + 2ndm. Throws ValueError on 64-bit overflow.
std::uint64_t layer_flops(std::uint64_t n, std::uint64_t d, std::uint64_t m);

std::uint64_t flops_full(const ModelDims& dims);
std::uint64_t flops_pruned(const ModelDims& dims);
double flops_ratio(const ModelDims& dims);

/// Rough operation count of token selection itself; reported apart from the model totals.
struct SelectionOverhead {
    std::uint64_t smoothing = 0;  ///< 2wM for the decaying window sum
    std::uint64_t filtering = 0;  ///< pairwise distances over a pool of at most 2*budget tokens plus greedy updates
    std::uint64_t total() const noexcept {
        return smoothing + filtering;
    }
};

SelectionOverhead selection_overhead(const ModelDims& dims, std::uint64_t window, std::uint64_t embed_dim);

}  // namespace vlaprune
