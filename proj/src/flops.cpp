// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/flops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vlaprune/error.hpp"

namespace vlaprune {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw ValueError("FLOPs count overflows 64 bits");
    }
    return out;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw ValueError("FLOPs count overflows 64 bits");
    }
    return out;
}

}  // namespace

void ModelDims::validate() const {
    if (layers == 0 || hidden == 0 || ffn == 0 || visual_tokens == 0) {
        throw ConfigError("layers, hidden size, FFN size and visual token count must be positive");
    }
    if (prune_layer == 0 || prune_layer > layers) {
        throw ConfigError("prune layer " + std::to_string(prune_layer) + " outside [1, " + std::to_string(layers) +
                          "]");
    }
    if (!(retain_ratio > 0.0 && retain_ratio <= 1.0)) {
        throw ConfigError("retention ratio must lie in (0, 1]");
    }
    if (retained_visual && (*retained_visual == 0 || *retained_visual > visual_tokens)) {
        throw ConfigError("retained visual count outside [1, " + std::to_string(visual_tokens) + "]");
    }
}

std::uint64_t ModelDims::pruned_length() const {
    if (retained_visual) {
        return text_tokens + *retained_visual;
    }
    const auto kept = static_cast<std::uint64_t>(std::floor(retain_ratio * static_cast<double>(visual_tokens)));
    return text_tokens + std::min(kept, visual_tokens);
}

std::optional<ModelDims> model_preset(std::string_view name) {
    if (name == "openvla-7b") {
        ModelDims dims;
        dims.layers = 32;
        dims.hidden = 4096;
        dims.ffn = 11008;
        dims.visual_tokens = 256;
        return dims;
    }
    return std::nullopt;
}

std::uint64_t layer_flops(std::uint64_t n, std::uint64_t d, std::uint64_t m) {
    const std::uint64_t projections = mul(mul(4, n), mul(d, d));
    const std::uint64_t attention = mul(mul(2, mul(n, n)), d);
    const std::uint64_t ffn = mul(mul(2, n), mul(d, m));
    return add(add(projections, attention), ffn);
}

std::uint64_t flops_full(const ModelDims& dims) {
    dims.validate();
    return mul(dims.layers, layer_flops(dims.full_length(), dims.hidden, dims.ffn));
}

std::uint64_t flops_pruned(const ModelDims& dims) {
    dims.validate();
    const std::uint64_t full_layer = layer_flops(dims.full_length(), dims.hidden, dims.ffn);
    const std::uint64_t pruned_layer = layer_flops(dims.pruned_length(), dims.hidden, dims.ffn);
    return add(mul(dims.prune_layer - 1, full_layer), mul(dims.layers - dims.prune_layer + 1, pruned_layer));
}

double flops_ratio(const ModelDims& dims) {
    return static_cast<double>(flops_pruned(dims)) / static_cast<double>(flops_full(dims));
}

SelectionOverhead selection_overhead(const ModelDims& dims, std::uint64_t window, std::uint64_t embed_dim) {
    dims.validate();
    SelectionOverhead out;
    out.smoothing = mul(mul(2, window), dims.visual_tokens);
    const std::uint64_t budget = std::max<std::uint64_t>(dims.pruned_length() - dims.text_tokens, 1);
    const std::uint64_t pool = std::min(mul(2, budget), dims.visual_tokens);
    // Normalization and pairwise dot products, then one min-update sweep per greedy pick.
    out.filtering = add(add(mul(mul(3, pool), embed_dim), mul(mul(pool, pool), embed_dim)), mul(budget, pool));
    return out;
}

}  // namespace vlaprune
