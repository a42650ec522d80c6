// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>

namespace vlaprune {

/**
 * @brief xoshiro256** (Blackman & Vigna) seeded through SplitMix64.
 *
 * Every derived draw is defined here rather than through <random> distributions, whose algorithms differ
 * between standard libraries, so that a seed regenerates the same trace on every platform.
 */
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed);

    static constexpr result_type min() {
        return 0;
    }
    static constexpr result_type max() {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound), bound > 0 (Lemire's multiply-shift with rejection).
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

private:
    std::uint64_t m_state[4];
    double m_spare = 0.0;
    bool m_has_spare = false;
};

}  // namespace vlaprune
