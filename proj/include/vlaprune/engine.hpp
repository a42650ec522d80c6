// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vlaprune/attention.hpp"
#include "vlaprune/estimator.hpp"
#include "vlaprune/selector.hpp"
#include "vlaprune/trace.hpp"

namespace vlaprune {

struct FrameScores {
    ScoreVector semantic;  ///< prefill scores
    ScoreVector action;    ///< decode scores averaged over the requested layers
};

/// Scores of one frame. Raw payloads go through prefill_scores / decode_scores first.
FrameScores score_frame(const TraceHeader& header, const Frame& frame, LayerRange decode_layers);

/// Decode layers used for pruning: the latter half of the recorded layers.
inline LayerRange pruning_decode_layers(const TraceHeader& header) {
    return LayerRange::latter_half(header.layers);
}

Embeddings frame_embeddings(const TraceHeader& header, const Frame& frame);

/**
 * @brief Pruning state of one episode: estimator history plus the selection config.
 *
 * Per frame, call `select` with the frame's semantic scores before decoding and `observe` with the
 * decoded action scores afterwards. One session serves one episode from one thread.
 */
class Session {
public:
    Session(PruneConfig prune, EstimatorConfig estimator);

    SelectionResult select(const ScoreVector& semantic, const Embeddings& embeddings) const;
    void observe(const ScoreVector& action);

    /// Flat-buffer forms for foreign callers: M scores, M x embed_dim row-major embeddings.
    IndexSet select(std::span<const double> semantic, std::span<const float> embeddings, std::size_t embed_dim) const;
    void observe(std::span<const double> action);

    void reset() {
        m_state.reset();
    }
    const EstimatorState& estimator() const noexcept {
        return m_state;
    }
    const PruneConfig& prune_config() const noexcept {
        return m_prune;
    }

private:
    PruneConfig m_prune;
    EstimatorState m_state;
};

struct FrameSelection {
    std::uint64_t timestep = 0;
    SelectionResult selection;
};

/// Replays every frame in timestep order through a fresh session. `prune.budget` must already be resolved.
std::vector<FrameSelection> replay_episode(const Trace& trace, const PruneConfig& prune,
                                           const EstimatorConfig& estimator);

}  // namespace vlaprune
