// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/attention.hpp"

#include <cmath>
#include <string>

#include "vlaprune/error.hpp"

namespace vlaprune {

namespace {

std::string shape_str(std::size_t rows, std::size_t cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

void check_layout(const AttentionMatrix& a, const TokenLayout& layout) {
    if (layout.m_visual == 0) {
        throw ShapeError("token layout has no visual patches");
    }
    if (layout.visual_offset + layout.m_visual > a.cols()) {
        throw ShapeError("visual block [" + std::to_string(layout.visual_offset) + ", " +
                         std::to_string(layout.visual_offset + layout.m_visual) + ") exceeds " +
                         std::to_string(a.cols()) + " attention columns");
    }
}

// Mean over rows of the visual columns. Accumulates in double in row order.
ScoreVector visual_column_mean(const AttentionMatrix& a, const TokenLayout& layout) {
    std::vector<double> sums(layout.m_visual, 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r).subspan(layout.visual_offset, layout.m_visual);
        for (std::size_t m = 0; m < layout.m_visual; ++m) {
            sums[m] += row[m];
        }
    }
    const double inv = 1.0 / static_cast<double>(a.rows());
    for (double& s : sums) {
        s *= inv;
    }
    return ScoreVector(std::move(sums));
}

}  // namespace

ScoreVector::ScoreVector(std::vector<double> values) : m_values(std::move(values)) {
    for (std::size_t i = 0; i < m_values.size(); ++i) {
        if (!std::isfinite(m_values[i]) || m_values[i] < 0.0) {
            throw ValueError("score " + std::to_string(i) + " is negative or non-finite");
        }
    }
}

ScoreVector ScoreVector::zeros(std::size_t m) {
    return ScoreVector(std::vector<double>(m, 0.0));
}

AttentionMatrix::AttentionMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : m_rows(rows),
      m_cols(cols),
      m_values(std::move(values)) {
    if (m_values.size() != rows * cols) {
        throw ShapeError("attention payload has " + std::to_string(m_values.size()) + " values, expected " +
                         shape_str(rows, cols));
    }
    for (double v : m_values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValueError("attention weights must be nonnegative and finite");
        }
    }
}

AttentionMatrix AttentionMatrix::from_floats(std::size_t rows, std::size_t cols, std::span<const float> values) {
    return AttentionMatrix(rows, cols, std::vector<double>(values.begin(), values.end()));
}

bool AttentionMatrix::is_row_stochastic(double tolerance) const {
    for (std::size_t r = 0; r < m_rows; ++r) {
        double sum = 0.0;
        for (double v : row(r)) {
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) {
            return false;
        }
    }
    return true;
}

ScoreVector prefill_scores(const AttentionMatrix& attention, const TokenLayout& layout) {
    const std::size_t expected = layout.sequence_length();
    if (attention.rows() != expected || attention.cols() != expected) {
        throw ShapeError("prefill attention must be " + shape_str(expected, expected) + ", got " +
                         shape_str(attention.rows(), attention.cols()));
    }
    check_layout(attention, layout);
    return visual_column_mean(attention, layout);
}

ScoreVector decode_scores(const AttentionMatrix& attention, const TokenLayout& layout) {
    if (attention.rows() == 0) {
        throw ShapeError("decode attention has no action query rows");
    }
    if (attention.cols() != layout.sequence_length()) {
        throw ShapeError("decode attention must have " + std::to_string(layout.sequence_length()) +
                         " columns, got " + std::to_string(attention.cols()));
    }
    check_layout(attention, layout);
    return visual_column_mean(attention, layout);
}

ScoreVector average_layer_scores(std::span<const ScoreVector> per_layer, LayerRange range) {
    if (per_layer.empty()) {
        throw ShapeError("no per-layer scores to average");
    }
    if (range.begin >= range.end) {
        throw ShapeError("empty layer range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) + ")");
    }
    if (range.end > per_layer.size()) {
        throw ShapeError("layer range end " + std::to_string(range.end) + " exceeds " +
                         std::to_string(per_layer.size()) + " layers");
    }
    const std::size_t m = per_layer.front().size();
    std::vector<double> sums(m, 0.0);
    for (std::size_t l = range.begin; l < range.end; ++l) {
        if (per_layer[l].size() != m) {
            throw ShapeError("layer " + std::to_string(l) + " has " + std::to_string(per_layer[l].size()) +
                             " scores, expected " + std::to_string(m));
        }
        for (std::size_t i = 0; i < m; ++i) {
            sums[i] += per_layer[l][i];
        }
    }
    const double inv = 1.0 / static_cast<double>(range.end - range.begin);
    for (double& s : sums) {
        s *= inv;
    }
    return ScoreVector(std::move(sums));
}

}  // namespace vlaprune
