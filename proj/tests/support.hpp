// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

// Input generators and brute-force references shared by the test binaries.

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <unistd.h>

#include "vlaprune/attention.hpp"
#include "vlaprune/rng.hpp"
#include "vlaprune/selector.hpp"

namespace vlaprune::testing {

inline std::vector<double> random_row_stochastic(std::size_t rows, std::size_t cols, Xoshiro256& rng) {
    std::vector<double> out(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] = rng.uniform() + 1e-3;
            total += out[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out[r * cols + c] /= total;
        }
    }
    return out;
}

inline ScoreVector random_scores(std::size_t m, Xoshiro256& rng) {
    std::vector<double> v(m);
    for (double& x : v) {
        x = rng.uniform();
    }
    return ScoreVector(std::move(v));
}

inline Embeddings random_embeddings(std::size_t m, std::size_t dim, Xoshiro256& rng) {
    std::vector<float> v(m * dim);
    for (float& x : v) {
        x = static_cast<float>(rng.normal());
    }
    return Embeddings(m, dim, std::move(v));
}

/// 2-D unit vectors at the given angles (degrees), one row per angle.
inline Embeddings angle_embeddings(const std::vector<double>& degrees) {
    std::vector<float> v;
    for (double deg : degrees) {
        const double rad = deg * std::numbers::pi / 180.0;
        v.push_back(static_cast<float>(std::cos(rad)));
        v.push_back(static_cast<float>(std::sin(rad)));
    }
    return Embeddings(degrees.size(), 2, std::move(v));
}

/// Column sums computed column-by-column in long double, then divided by the row count.
inline std::vector<double> column_mean_reference(const std::vector<double>& values, std::size_t rows,
                                                 std::size_t cols, std::size_t first_col, std::size_t count) {
    std::vector<double> out;
    for (std::size_t c = first_col; c < first_col + count; ++c) {
        long double sum = 0.0L;
        for (std::size_t r = 0; r < rows; ++r) {
            sum += values[r * cols + c];
        }
        out.push_back(static_cast<double>(sum / static_cast<long double>(rows)));
    }
    return out;
}

inline double relative_error(double got, double expected) {
    const double scale = std::max(std::abs(expected), std::numeric_limits<double>::min());
    return std::abs(got - expected) / scale;
}

/// Min pairwise cosine distance of `subset`, straight from the definition.
inline double brute_min_distance(const Embeddings& e, const std::vector<std::size_t>& subset) {
    double best = 2.0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
            auto a = e.row(subset[i]);
            auto b = e.row(subset[j]);
            double dot = 0.0, na = 0.0, nb = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                dot += static_cast<double>(a[k]) * b[k];
                na += static_cast<double>(a[k]) * a[k];
                nb += static_cast<double>(b[k]) * b[k];
            }
            best = std::min(best, std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0));
        }
    }
    return best;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        m_path = std::filesystem::temp_directory_path() /
                 ("vlaprune-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const {
        return m_path / name;
    }

private:
    std::filesystem::path m_path;
};

}  // namespace vlaprune::testing
