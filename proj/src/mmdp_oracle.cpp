// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/mmdp_oracle.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "vlaprune/error.hpp"

namespace vlaprune {

namespace {

bool is_zero(std::span<const float> row) {
    return std::all_of(row.begin(), row.end(), [](float x) { return x == 0.0f; });
}

// Advance `combo` (strictly increasing positions in [0, n)) to the next combination in lexicographic order.
bool next_combination(std::vector<std::size_t>& combo, std::size_t n) {
    const std::size_t k = combo.size();
    for (std::size_t i = k; i-- > 0;) {
        if (combo[i] < n - k + i) {
            ++combo[i];
            for (std::size_t j = i + 1; j < k; ++j) {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    return false;
}

}  // namespace

OracleSolution solve_exact(const Embeddings& embeddings, std::span<const std::size_t> pool, std::size_t target) {
    if (pool.size() > kMaxOraclePool) {
        throw ConfigError("exhaustive MMDP solver accepts at most " + std::to_string(kMaxOraclePool) +
                          " candidates, got " + std::to_string(pool.size()) + "; use the greedy filter instead");
    }
    if (target == 0 || target > pool.size()) {
        throw ConfigError("oracle target " + std::to_string(target) + " outside [1, " + std::to_string(pool.size()) +
                          "]");
    }
    std::vector<std::size_t> sorted(pool.begin(), pool.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ShapeError("oracle pool contains duplicate indices");
    }
    for (std::size_t idx : sorted) {
        if (idx >= embeddings.size()) {
            throw ShapeError("oracle pool index " + std::to_string(idx) + " out of range");
        }
    }

    const std::size_t n = sorted.size();
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        const auto ra = embeddings.row(sorted[a]);
        for (std::size_t b = a + 1; b < n; ++b) {
            const auto rb = embeddings.row(sorted[b]);
            const double d = (is_zero(ra) || is_zero(rb)) ? 0.0 : cosine_distance(ra, rb);
            dist[a * n + b] = d;
            dist[b * n + a] = d;
        }
    }

    std::vector<std::size_t> combo(target);
    for (std::size_t i = 0; i < target; ++i) {
        combo[i] = i;
    }
    std::vector<std::size_t> best_combo = combo;
    double best = -1.0;
    do {
        double worst = 2.0;
        for (std::size_t i = 0; i < target && worst > best; ++i) {
            for (std::size_t j = i + 1; j < target; ++j) {
                worst = std::min(worst, dist[combo[i] * n + combo[j]]);
            }
        }
        if (worst > best) {
            best = worst;
            best_combo = combo;
        }
    } while (next_combination(combo, n));

    OracleSolution solution;
    solution.optimum = best;
    for (std::size_t p : best_combo) {
        solution.subset.push_back(sorted[p]);
    }
    return solution;
}

}  // namespace vlaprune
