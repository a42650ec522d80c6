// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <string_view>

#include "vlaprune/attention.hpp"

namespace vlaprune {

enum class EstimatorMode {
    Ema,         ///< exponential moving average over every past frame
    DecayWindow  ///< unnormalized sum of gamma^i * S(t-i) over the last w frames
};

std::string_view to_string(EstimatorMode mode);
EstimatorMode parse_estimator_mode(std::string_view text);

struct EstimatorConfig {
    EstimatorMode mode = EstimatorMode::DecayWindow;
    double alpha = 0.5;
    std::size_t window = 3;
    double gamma = 0.8;

    /// Throws ConfigError when alpha or gamma leave [0, 1] or window is zero.
    void validate() const;
};

/**
 * @brief History of observed action-level scores for one episode.
 *
 * Single writer per episode. A new episode starts from a fresh state (or `reset()`); nothing is carried
 * across episode boundaries.
 */
class EstimatorState {
public:
    explicit EstimatorState(EstimatorConfig config = {});

    /// Record the action-level scores observed at the frame that just finished decoding.
    void observe(const ScoreVector& observed);
    void reset();

    const EstimatorConfig& config() const noexcept {
        return m_config;
    }
    /// Most recent observations, oldest first; at most `config().window` entries.
    const std::deque<ScoreVector>& history() const noexcept {
        return m_history;
    }
    /// Smoothed value after the latest observation. Present only in EMA mode once a frame was seen.
    const std::optional<ScoreVector>& ema_value() const noexcept {
        return m_ema;
    }
    std::size_t frames_seen() const noexcept {
        return m_frames_seen;
    }
    /// Patch count M fixed by the first observation, 0 before that.
    std::size_t patch_count() const noexcept {
        return m_patch_count;
    }

private:
    friend ScoreVector ema_estimate(const EstimatorState& state, double alpha);

    EstimatorConfig m_config;
    std::deque<ScoreVector> m_history;
    std::optional<ScoreVector> m_ema;
    // Smoothed value before the latest observation, seeded with the first observation.
    std::optional<ScoreVector> m_ema_before_last;
    std::size_t m_frames_seen = 0;
    std::size_t m_patch_count = 0;
};

/// (1 - alpha) * smoothed(t-1) + alpha * observed(t-1). Requires an EMA-mode state with at least one frame.
ScoreVector ema_estimate(const EstimatorState& state, double alpha);

/// sum_{i=1..w} gamma^i * observed(t-i); missing history terms contribute zero.
ScoreVector window_estimate(const EstimatorState& state, double gamma, std::size_t w);

/// True once `w` frames have been observed.
bool is_warm(const EstimatorState& state, std::size_t w);

/// Estimate with the method and constants of `state.config()`.
ScoreVector estimate(const EstimatorState& state);

}  // namespace vlaprune
