// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vlaprune/error.hpp"
#include "vlaprune/rng.hpp"

namespace vlaprune {

namespace {

constexpr std::size_t kEmbeddingClusters = 8;
constexpr double kClusterSpread = 0.35;
constexpr std::size_t kSemanticBumps = 3;
constexpr double kSemanticAmplitude = 3.0;
constexpr double kActionAmplitude = 4.0;
constexpr double kBumpWidth = 1.5;  // in grid cells
constexpr double kTextLogit = 0.5;

struct Grid {
    std::size_t side;

    explicit Grid(std::size_t m) : side(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m))))) {}

    double squared_distance(std::size_t a, std::size_t b) const {
        const double dx = static_cast<double>(a % side) - static_cast<double>(b % side);
        const double dy = static_cast<double>(a / side) - static_cast<double>(b / side);
        return dx * dx + dy * dy;
    }
};

double bump(const Grid& grid, std::size_t patch, std::size_t center) {
    return std::exp(-grid.squared_distance(patch, center) / (2.0 * kBumpWidth * kBumpWidth));
}

// Softmax over text logits (constant) followed by visual logits, in double, written as float.
void softmax_row(std::span<const double> visual_logits, std::size_t n_text, double noise_sigma, Xoshiro256& rng,
                 std::span<float> out) {
    const std::size_t seq = n_text + visual_logits.size();
    std::vector<double> logits(seq);
    for (std::size_t i = 0; i < seq; ++i) {
        const double base = i < n_text ? kTextLogit : visual_logits[i - n_text];
        logits[i] = noise_sigma > 0.0 ? base + noise_sigma * rng.normal() : base;
    }
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
        l = std::exp(l - peak);
        total += l;
    }
    for (std::size_t i = 0; i < seq; ++i) {
        out[i] = static_cast<float>(logits[i] / total);
    }
}

std::vector<float> make_embeddings(const TraceHeader& h, const Grid& grid, Xoshiro256& rng) {
    const std::size_t clusters = std::min(kEmbeddingClusters, h.m_visual);
    std::vector<std::size_t> seeds(clusters);
    for (auto& s : seeds) {
        s = rng.below(h.m_visual);
    }
    std::vector<double> centers(clusters * h.embed_dim);
    for (double& c : centers) {
        c = rng.normal();
    }
    std::vector<float> out(h.m_visual * h.embed_dim);
    for (std::size_t p = 0; p < h.m_visual; ++p) {
        std::size_t cluster = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < clusters; ++c) {
            const double d = grid.squared_distance(p, seeds[c]);
            if (d < best) {
                best = d;
                cluster = c;
            }
        }
        for (std::size_t k = 0; k < h.embed_dim; ++k) {
            out[p * h.embed_dim + k] =
                static_cast<float>(centers[cluster * h.embed_dim + k] + kClusterSpread * rng.normal());
        }
    }
    return out;
}

}  // namespace

void SynthConfig::validate() const {
    if (frames == 0) {
        throw ConfigError("synthetic trace needs at least one frame");
    }
    if (!(drift_sigma >= 0.0) || !(noise_sigma >= 0.0)) {
        throw ConfigError("drift and noise sigmas must be nonnegative");
    }
    if (shift_every && *shift_every == 0) {
        throw ConfigError("shift period must be positive");
    }
    if (decode_rows == 0) {
        throw ConfigError("decode rows must be positive");
    }
}

std::vector<std::size_t> shift_frames(const SynthConfig& config) {
    std::vector<std::size_t> out;
    if (config.shift_every) {
        for (std::size_t t = *config.shift_every; t < config.frames; t += *config.shift_every) {
            out.push_back(t);
        }
    }
    return out;
}

std::vector<Frame> synthesize_trace(const SynthConfig& config, const TraceHeader& header) {
    config.validate();
    header.validate();
    const std::size_t m = header.m_visual;
    const std::size_t n = header.n_text;
    const std::size_t seq = n + m;
    const Grid grid(m);
    Xoshiro256 rng(config.seed);

    // Per-episode structure, drawn once.
    const std::vector<float> embeddings = make_embeddings(header, grid, rng);
    std::vector<double> semantic(m, 0.0);
    for (std::size_t b = 0; b < kSemanticBumps; ++b) {
        const std::size_t center = rng.below(m);
        for (std::size_t p = 0; p < m; ++p) {
            semantic[p] += kSemanticAmplitude * bump(grid, p, center);
        }
    }
    std::size_t target = rng.below(m);
    std::vector<double> walk(m, 0.0);

    std::vector<Frame> frames;
    frames.reserve(config.frames);
    std::vector<double> action(m);
    for (std::size_t t = 0; t < config.frames; ++t) {
        if (config.shift_every && t > 0 && t % *config.shift_every == 0) {
            target = rng.below(m);
        }
        if (t > 0 && config.drift_sigma > 0.0) {
            for (double& w : walk) {
                w += config.drift_sigma * rng.normal();
            }
        }
        for (std::size_t p = 0; p < m; ++p) {
            action[p] = kActionAmplitude * bump(grid, p, target) + walk[p];
        }

        Frame frame;
        frame.timestep = t;
        frame.embeddings = embeddings;
        std::vector<float> row(seq);
        if (header.payload == PayloadKind::Raw) {
            frame.prefill.resize(seq * seq);
            for (std::size_t r = 0; r < seq; ++r) {
                softmax_row(semantic, n, config.noise_sigma, rng,
                            std::span<float>(frame.prefill).subspan(r * seq, seq));
            }
            frame.decode_rows = config.decode_rows;
            for (std::size_t l = 0; l < header.layers; ++l) {
                std::vector<float> layer(config.decode_rows * seq);
                for (std::size_t r = 0; r < config.decode_rows; ++r) {
                    softmax_row(action, n, config.noise_sigma, rng, std::span<float>(layer).subspan(r * seq, seq));
                }
                frame.decode.push_back(std::move(layer));
            }
        } else {
            softmax_row(semantic, n, config.noise_sigma, rng, row);
            frame.prefill.assign(row.begin() + static_cast<std::ptrdiff_t>(n), row.end());
            for (std::size_t l = 0; l < header.layers; ++l) {
                softmax_row(action, n, config.noise_sigma, rng, row);
                frame.decode.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(n), row.end());
            }
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace vlaprune
