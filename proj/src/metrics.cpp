// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "vlaprune/engine.hpp"
#include "vlaprune/error.hpp"

namespace vlaprune {

namespace {

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double overlap_ratio(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.empty() || a.size() != b.size()) {
        throw ShapeError("overlap of index sets with sizes " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
    }
    std::vector<std::size_t> sa(a.begin(), a.end());
    std::vector<std::size_t> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<std::size_t> common;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(a.size());
}

std::vector<std::size_t> default_overlap_ks(std::size_t m_visual) {
    return {std::max<std::size_t>(m_visual / 8, 1), std::max<std::size_t>(m_visual / 4, 1),
            std::max<std::size_t>(m_visual / 2, 1)};
}

OverlapReport episode_overlap_report(const Trace& trace, std::size_t k) {
    if (trace.frames.size() < 2) {
        throw ValueError("overlap report needs at least two frames, trace has " +
                         std::to_string(trace.frames.size()));
    }
    OverlapReport report;
    report.k = k;
    const LayerRange layers = LayerRange::all(trace.header.layers);
    IndexSet previous;
    for (std::size_t i = 0; i < trace.frames.size(); ++i) {
        const FrameScores scores = score_frame(trace.header, trace.frames[i], layers);
        const IndexSet semantic = top_k_indices(scores.semantic, k);
        IndexSet action = top_k_indices(scores.action, k);
        report.prefill_vs_decode.push_back(overlap_ratio(semantic, action));
        if (i > 0) {
            report.decode_t_vs_tminus1.push_back(overlap_ratio(action, previous));
        }
        previous = std::move(action);
    }
    report.mean_prefill_vs_decode = mean(report.prefill_vs_decode);
    report.mean_decode_t_vs_tminus1 = mean(report.decode_t_vs_tminus1);
    return report;
}

TrackingReport estimator_tracking(const Trace& trace, const EstimatorConfig& config, std::size_t k,
                                  std::size_t first_frame) {
    TrackingReport report;
    report.k = k;
    EstimatorState state(config);
    const LayerRange layers = pruning_decode_layers(trace.header);
    for (std::size_t i = 0; i < trace.frames.size(); ++i) {
        const ScoreVector actual = score_frame(trace.header, trace.frames[i], layers).action;
        if (i >= first_frame && is_warm(state, config.window)) {
            report.per_frame.push_back(overlap_ratio(top_k_indices(estimate(state), k), top_k_indices(actual, k)));
        }
        state.observe(actual);
    }
    report.mean = mean(report.per_frame);
    return report;
}

}  // namespace vlaprune
