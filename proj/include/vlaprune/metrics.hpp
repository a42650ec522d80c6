// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vlaprune/estimator.hpp"
#include "vlaprune/selector.hpp"
#include "vlaprune/trace.hpp"

namespace vlaprune {

/// |a ∩ b| / k for two index sets of equal size k >= 1.
double overlap_ratio(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct OverlapReport {
    std::size_t k = 0;
    std::vector<double> prefill_vs_decode;     ///< one entry per frame
    std::vector<double> decode_t_vs_tminus1;   ///< one entry per consecutive pair, starting at frame 1
    double mean_prefill_vs_decode = 0.0;
    double mean_decode_t_vs_tminus1 = 0.0;
};

/// Top-k overlaps of semantic vs action scores within each frame and of action scores across consecutive
/// frames. Action scores are averaged over all recorded layers. Needs at least two frames.
OverlapReport episode_overlap_report(const Trace& trace, std::size_t k);

/// 12.5%, 25% and 50% of the visual tokens (each at least 1).
std::vector<std::size_t> default_overlap_ks(std::size_t m_visual);

struct TrackingReport {
    std::size_t k = 0;
    std::vector<double> per_frame;  ///< one entry per warm frame
    double mean = 0.0;
};

/// How well the temporal estimate from past frames predicts the current frame's action top-k.
/// Frames before the estimator is warm, and frames with index below `first_frame`, are skipped.
/// Uses the same decode layers as pruning.
TrackingReport estimator_tracking(const Trace& trace, const EstimatorConfig& config, std::size_t k,
                                  std::size_t first_frame = 0);

}  // namespace vlaprune
