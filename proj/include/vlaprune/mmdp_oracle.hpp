// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "vlaprune/selector.hpp"

namespace vlaprune {

/// Largest pool the exhaustive solver accepts.
inline constexpr std::size_t kMaxOraclePool = 20;

struct OracleSolution {
    IndexSet subset;
    double optimum = 0.0;  ///< max over subsets of the min pairwise cosine distance; 2 for single-token subsets
};

/**
 * Exact max-min diversity subset of `pool` by enumeration of every `target`-subset.
 *
 * Distances come straight from cosine_distance on the raw rows (zero-norm rows count as distance 0).
 * Among equally good subsets the lexicographically smallest wins.
 */
OracleSolution solve_exact(const Embeddings& embeddings, std::span<const std::size_t> pool, std::size_t target);

}  // namespace vlaprune
