// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/engine.hpp"

#include <string>

#include "vlaprune/error.hpp"

namespace vlaprune {

FrameScores score_frame(const TraceHeader& header, const Frame& frame, LayerRange decode_layers) {
    validate_frame(header, frame);
    const TokenLayout layout = header.layout();
    const std::size_t seq = layout.sequence_length();

    std::vector<ScoreVector> per_layer;
    per_layer.reserve(frame.decode.size());
    FrameScores out;
    if (header.payload == PayloadKind::Raw) {
        out.semantic = prefill_scores(AttentionMatrix::from_floats(seq, seq, frame.prefill), layout);
        for (const auto& layer : frame.decode) {
            per_layer.push_back(decode_scores(AttentionMatrix::from_floats(frame.decode_rows, seq, layer), layout));
        }
    } else {
        out.semantic = ScoreVector(std::vector<double>(frame.prefill.begin(), frame.prefill.end()));
        for (const auto& layer : frame.decode) {
            per_layer.emplace_back(std::vector<double>(layer.begin(), layer.end()));
        }
    }
    out.action = average_layer_scores(per_layer, decode_layers);
    return out;
}

Embeddings frame_embeddings(const TraceHeader& header, const Frame& frame) {
    return Embeddings(header.m_visual, header.embed_dim, frame.embeddings);
}

Session::Session(PruneConfig prune, EstimatorConfig estimator) : m_prune(prune), m_state(estimator) {}

SelectionResult Session::select(const ScoreVector& semantic, const Embeddings& embeddings) const {
    m_prune.validate(semantic.size());
    return select_frame(semantic, embeddings, m_state, m_prune);
}

void Session::observe(const ScoreVector& action) {
    m_state.observe(action);
}

IndexSet Session::select(std::span<const double> semantic, std::span<const float> embeddings,
                         std::size_t embed_dim) const {
    if (embed_dim == 0 || embeddings.size() != semantic.size() * embed_dim) {
        throw ShapeError("embedding buffer holds " + std::to_string(embeddings.size()) + " values, expected " +
                         std::to_string(semantic.size()) + "x" + std::to_string(embed_dim));
    }
    ScoreVector scores(std::vector<double>(semantic.begin(), semantic.end()));
    Embeddings emb(semantic.size(), embed_dim, std::vector<float>(embeddings.begin(), embeddings.end()));
    return select(scores, emb).retained;
}

void Session::observe(std::span<const double> action) {
    observe(ScoreVector(std::vector<double>(action.begin(), action.end())));
}

std::vector<FrameSelection> replay_episode(const Trace& trace, const PruneConfig& prune,
                                           const EstimatorConfig& estimator) {
    Session session(prune, estimator);
    const LayerRange layers = pruning_decode_layers(trace.header);
    std::vector<FrameSelection> out;
    out.reserve(trace.frames.size());
    for (const Frame& frame : trace.frames) {
        FrameScores scores = score_frame(trace.header, frame, layers);
        FrameSelection record;
        record.timestep = frame.timestep;
        record.selection = session.select(scores.semantic, frame_embeddings(trace.header, frame));
        session.observe(scores.action);
        out.push_back(std::move(record));
    }
    return out;
}

}  // namespace vlaprune
