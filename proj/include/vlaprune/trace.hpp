// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlaprune/attention.hpp"

namespace vlaprune {

inline constexpr int kTraceVersion = 1;
inline constexpr std::string_view kTraceFormatTag = "vlat";
/// Overrides the stream buffer size (bytes) of trace files opened by path.
inline constexpr const char* kTraceBufferEnv = "VLAPRUNE_TRACE_BUFFER";

enum class PayloadKind {
    Raw,    ///< full prefill attention plus per-layer decode attention rows
    Scored  ///< precomputed semantic scores plus per-layer action scores
};

enum class DecodeMode { Autoregressive, Chunk, FlowAveraged };

std::string_view to_string(PayloadKind kind);
std::string_view to_string(DecodeMode mode);
PayloadKind parse_payload_kind(std::string_view text);
DecodeMode parse_decode_mode(std::string_view text);

struct TraceHeader {
    int version = kTraceVersion;
    std::size_t m_visual = 0;
    std::size_t n_text = 0;
    std::size_t layers = 1;
    std::size_t embed_dim = 1;
    PayloadKind payload = PayloadKind::Scored;
    DecodeMode decode_mode = DecodeMode::Chunk;
    std::string episode_id;

    void validate() const;
    /// Text and proprioceptive tokens first, then the visual block.
    TokenLayout layout() const {
        return TokenLayout::text_first(n_text, m_visual);
    }

    friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

/**
 * @brief One timestep of recorded model state, stored at 32-bit precision.
 *
 * Raw payload: `prefill` is the last-layer (N+M)x(N+M) attention; each `decode[l]` holds
 * `decode_rows` x (N+M) action-query rows of layer l.
 * Scored payload: `prefill` is the M semantic scores; each `decode[l]` holds M action scores; `decode_rows` is 0.
 * `embeddings` holds M x embed_dim visual hidden states at the pruning layer.
 */
struct Frame {
    std::uint64_t timestep = 0;
    std::vector<float> prefill;
    std::size_t decode_rows = 0;
    std::vector<std::vector<float>> decode;
    std::vector<float> embeddings;

    friend bool operator==(const Frame&, const Frame&) = default;
};

/// Throws ShapeError when `frame` disagrees with the header's declared shapes.
void validate_frame(const TraceHeader& header, const Frame& frame);

class TraceWriter {
public:
    TraceWriter(std::ostream& out, TraceHeader header);

    void write(const Frame& frame);

    const TraceHeader& header() const noexcept {
        return m_header;
    }

private:
    std::ostream& m_out;
    TraceHeader m_header;
    std::optional<std::uint64_t> m_last_timestep;
};

/// Streaming single-cursor reader. The header is parsed on construction.
class TraceReader {
public:
    explicit TraceReader(std::istream& in);

    const TraceHeader& header() const noexcept {
        return m_header;
    }
    /// Next frame, or nullopt at a clean end of stream. Throws FormatError / ShapeError with the record offset.
    std::optional<Frame> next();

private:
    std::optional<std::string> read_record();

    std::istream& m_in;
    std::uint64_t m_offset = 0;
    std::uint64_t m_record_offset = 0;
    TraceHeader m_header;
    std::optional<std::uint64_t> m_last_timestep;
};

struct Trace {
    TraceHeader header;
    std::vector<Frame> frames;
};

void write_trace(std::ostream& out, const TraceHeader& header, const std::vector<Frame>& frames);
void write_trace(const std::filesystem::path& path, const TraceHeader& header, const std::vector<Frame>& frames);
Trace read_trace(std::istream& in);
Trace read_trace(const std::filesystem::path& path);

/// FNV-1a 64 of the bytes, as 16 lowercase hex digits.
std::string checksum_bytes(std::string_view bytes);
std::string checksum_file(const std::filesystem::path& path);

}  // namespace vlaprune
