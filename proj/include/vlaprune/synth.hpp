// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "vlaprune/trace.hpp"

namespace vlaprune {

/**
 * @brief Parameters of the synthetic episode generator.
 *
 * Action attention follows a Gaussian bump around a target patch plus a per-patch random walk in logit
 * space (`drift_sigma` per frame). Every `shift_every` frames the target jumps to a freshly drawn patch.
 * `noise_sigma` is i.i.d. logit noise added per frame (and per layer / row) to both stages.
 */
struct SynthConfig {
    std::uint64_t seed = 0;
    std::size_t frames = 50;
    double drift_sigma = 0.05;
    double noise_sigma = 0.3;
    std::optional<std::size_t> shift_every;
    std::size_t decode_rows = 1;  ///< action query rows per layer in raw traces

    void validate() const;
};

/// Deterministic in (config, header): the same inputs produce bit-identical frames on every platform.
std::vector<Frame> synthesize_trace(const SynthConfig& config, const TraceHeader& header);

/// Frames at which the action target jumps (multiples of shift_every, excluding 0).
std::vector<std::size_t> shift_frames(const SynthConfig& config);

}  // namespace vlaprune
