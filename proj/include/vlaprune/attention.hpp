// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vlaprune {

/**
 * @brief Per-visual-patch importance scores. Entries are nonnegative and finite.
 *
 * Used both for prefill (semantic-level) scores and for action-decode scores, observed or estimated.
 * Values are always held in double precision regardless of the storage precision of the source trace.
 */
class ScoreVector {
public:
    ScoreVector() = default;
    explicit ScoreVector(std::vector<double> values);

    static ScoreVector zeros(std::size_t m);

    std::size_t size() const noexcept {
        return m_values.size();
    }
    bool empty() const noexcept {
        return m_values.empty();
    }
    double operator[](std::size_t i) const {
        return m_values[i];
    }
    std::span<const double> values() const noexcept {
        return m_values;
    }
    auto begin() const noexcept {
        return m_values.begin();
    }
    auto end() const noexcept {
        return m_values.end();
    }

    friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

private:
    std::vector<double> m_values;
};

/// Dense row-major matrix of post-softmax attention weights (head-averaged).
class AttentionMatrix {
public:
    AttentionMatrix() = default;
    AttentionMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    static AttentionMatrix from_floats(std::size_t rows, std::size_t cols, std::span<const float> values);

    std::size_t rows() const noexcept {
        return m_rows;
    }
    std::size_t cols() const noexcept {
        return m_cols;
    }
    double at(std::size_t row, std::size_t col) const {
        return m_values[row * m_cols + col];
    }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(m_values).subspan(r * m_cols, m_cols);
    }
    std::span<const double> values() const noexcept {
        return m_values;
    }

    /// True when every row sums to one within `tolerance`.
    bool is_row_stochastic(double tolerance = 1e-5) const;

private:
    std::size_t m_rows = 0;
    std::size_t m_cols = 0;
    std::vector<double> m_values;
};

/// Position of the visual patches on the key axis. The proprioceptive token counts as text.
struct TokenLayout {
    std::size_t n_text = 0;
    std::size_t m_visual = 0;
    std::size_t visual_offset = 0;

    std::size_t sequence_length() const noexcept {
        return n_text + m_visual;
    }

    /// Layout where text (and proprioception) precedes the visual block.
    static TokenLayout text_first(std::size_t n_text, std::size_t m_visual) {
        return {n_text, m_visual, n_text};
    }
};

/// Half-open layer interval [begin, end).
struct LayerRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    /// The latter half of `layers` layers: [layers / 2, layers).
    static LayerRange latter_half(std::size_t layers) {
        return {layers / 2, layers};
    }
    static LayerRange all(std::size_t layers) {
        return {0, layers};
    }
};

/// Semantic-level scores: column mean over all (N+M) query rows of a square prefill attention, visual columns only.
/// No causal-mask correction is applied.
ScoreVector prefill_scores(const AttentionMatrix& attention, const TokenLayout& layout);

/// Action-level scores: column mean over the action query rows, visual columns only.
/// Autoregressive callers concatenate per-token rows; flow-matching callers pre-average over steps.
ScoreVector decode_scores(const AttentionMatrix& attention, const TokenLayout& layout);

/// Elementwise mean of `per_layer[range.begin .. range.end)`.
ScoreVector average_layer_scores(std::span<const ScoreVector> per_layer, LayerRange range);

}  // namespace vlaprune
