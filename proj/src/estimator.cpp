// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/estimator.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "vlaprune/error.hpp"

namespace vlaprune {

std::string_view to_string(EstimatorMode mode) {
    switch (mode) {
    case EstimatorMode::Ema:
        return "ema";
    case EstimatorMode::DecayWindow:
        return "window";
    }
    return "unknown";
}

EstimatorMode parse_estimator_mode(std::string_view text) {
    if (text == "ema") {
        return EstimatorMode::Ema;
    }
    if (text == "window") {
        return EstimatorMode::DecayWindow;
    }
    throw ConfigError("unknown estimator mode '" + std::string(text) + "' (expected ema|window)");
}

void EstimatorConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1]");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0, 1]");
    }
    if (window == 0) {
        throw ConfigError("window must be at least 1");
    }
}

EstimatorState::EstimatorState(EstimatorConfig config) : m_config(config) {
    m_config.validate();
}

void EstimatorState::reset() {
    m_history.clear();
    m_ema.reset();
    m_ema_before_last.reset();
    m_frames_seen = 0;
    m_patch_count = 0;
}

void EstimatorState::observe(const ScoreVector& observed) {
    if (observed.empty()) {
        throw ShapeError("cannot observe an empty score vector");
    }
    if (m_frames_seen > 0 && observed.size() != m_patch_count) {
        throw ShapeError("observed " + std::to_string(observed.size()) + " scores, estimator tracks " +
                         std::to_string(m_patch_count));
    }
    m_patch_count = observed.size();

    m_history.push_back(observed);
    while (m_history.size() > m_config.window) {
        m_history.pop_front();
    }

    if (m_config.mode == EstimatorMode::Ema) {
        if (!m_ema) {
            m_ema_before_last = observed;
            m_ema = observed;
        } else {
            m_ema_before_last = m_ema;
            const double a = m_config.alpha;
            std::vector<double> next(m_patch_count);
            for (std::size_t i = 0; i < m_patch_count; ++i) {
                next[i] = (1.0 - a) * (*m_ema)[i] + a * observed[i];
            }
            m_ema = ScoreVector(std::move(next));
        }
    }
    ++m_frames_seen;
}

ScoreVector ema_estimate(const EstimatorState& state, double alpha) {
    if (state.frames_seen() == 0) {
        throw ValueError("EMA estimate requested before any observation; use the warm-up path");
    }
    if (state.config().mode != EstimatorMode::Ema) {
        throw ConfigError("EMA estimate requested from a decay-window estimator");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1]");
    }
    const ScoreVector& previous = *state.m_ema_before_last;
    const ScoreVector& last = state.history().back();
    std::vector<double> out(previous.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (1.0 - alpha) * previous[i] + alpha * last[i];
    }
    return ScoreVector(std::move(out));
}

ScoreVector window_estimate(const EstimatorState& state, double gamma, std::size_t w) {
    if (state.frames_seen() == 0) {
        throw ValueError("window estimate requested before any observation; use the warm-up path");
    }
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma must lie in [0, 1]");
    }
    if (w == 0) {
        throw ConfigError("window must be at least 1");
    }
    const auto& history = state.history();
    const std::size_t terms = std::min(w, history.size());
    std::vector<double> out(state.patch_count(), 0.0);
    double weight = 1.0;
    // i = 1 is the newest observation.
    for (std::size_t i = 1; i <= terms; ++i) {
        weight *= gamma;
        const ScoreVector& s = history[history.size() - i];
        for (std::size_t m = 0; m < out.size(); ++m) {
            out[m] += weight * s[m];
        }
    }
    return ScoreVector(std::move(out));
}

bool is_warm(const EstimatorState& state, std::size_t w) {
    return state.frames_seen() >= w;
}

ScoreVector estimate(const EstimatorState& state) {
    const auto& cfg = state.config();
    if (cfg.mode == EstimatorMode::Ema) {
        return ema_estimate(state, cfg.alpha);
    }
    return window_estimate(state, cfg.gamma, cfg.window);
}

}  // namespace vlaprune
