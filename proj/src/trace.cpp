// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "vlaprune/trace.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "codec.hpp"
#include "vlaprune/error.hpp"

namespace vlaprune {

namespace {

using nlohmann::json;

std::string shape_mismatch(const std::string& what, std::size_t got, std::size_t expected) {
    return what + " has " + std::to_string(got) + " values, expected " + std::to_string(expected);
}

json header_to_json(const TraceHeader& h) {
    return json{{"format", kTraceFormatTag},
                {"version", h.version},
                {"episode_id", h.episode_id},
                {"m_visual", h.m_visual},
                {"n_text", h.n_text},
                {"layers", h.layers},
                {"embed_dim", h.embed_dim},
                {"payload", to_string(h.payload)},
                {"decode_mode", to_string(h.decode_mode)}};
}

json frame_to_json(const TraceHeader& h, const Frame& f) {
    json out{{"t", f.timestep},
             {"prefill", detail::encode_floats(f.prefill)},
             {"embeddings", detail::encode_floats(f.embeddings)}};
    json decode = json::array();
    for (const auto& layer : f.decode) {
        decode.push_back(detail::encode_floats(layer));
    }
    out["decode"] = std::move(decode);
    if (h.payload == PayloadKind::Raw) {
        out["decode_rows"] = f.decode_rows;
    }
    return out;
}

std::vector<float> floats_field(const json& record, const char* key, std::uint64_t offset) {
    const auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
        throw FormatError(std::string("frame field '") + key + "' missing or not a string", offset);
    }
    auto values = detail::decode_floats(it->get_ref<const std::string&>());
    if (!values) {
        throw FormatError(std::string("frame field '") + key + "' is not a valid base-64 float32 payload", offset);
    }
    return std::move(*values);
}

template <typename T>
T required(const json& record, const char* key, std::uint64_t offset) {
    const auto it = record.find(key);
    if (it == record.end()) {
        throw FormatError(std::string("missing field '") + key + "'", offset);
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("field '") + key + "' has the wrong type", offset);
    }
}

std::size_t buffer_size_from_env() {
    if (const char* env = std::getenv(kTraceBufferEnv)) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return 0;
}

}  // namespace

std::string_view to_string(PayloadKind kind) {
    return kind == PayloadKind::Raw ? "raw" : "scored";
}

std::string_view to_string(DecodeMode mode) {
    switch (mode) {
    case DecodeMode::Autoregressive:
        return "autoregressive";
    case DecodeMode::Chunk:
        return "chunk";
    case DecodeMode::FlowAveraged:
        return "flow_averaged";
    }
    return "unknown";
}

PayloadKind parse_payload_kind(std::string_view text) {
    if (text == "raw") {
        return PayloadKind::Raw;
    }
    if (text == "scored") {
        return PayloadKind::Scored;
    }
    throw ConfigError("unknown payload kind '" + std::string(text) + "' (expected raw|scored)");
}

DecodeMode parse_decode_mode(std::string_view text) {
    for (auto mode : {DecodeMode::Autoregressive, DecodeMode::Chunk, DecodeMode::FlowAveraged}) {
        if (to_string(mode) == text) {
            return mode;
        }
    }
    throw ConfigError("unknown decode mode '" + std::string(text) + "'");
}

void TraceHeader::validate() const {
    if (version != kTraceVersion) {
        throw ConfigError("unsupported trace version " + std::to_string(version));
    }
    if (m_visual == 0 || layers == 0 || embed_dim == 0) {
        throw ShapeError("trace header needs m_visual, layers and embed_dim of at least 1");
    }
}

void validate_frame(const TraceHeader& h, const Frame& f) {
    const std::size_t seq = h.n_text + h.m_visual;
    if (h.payload == PayloadKind::Raw) {
        if (f.prefill.size() != seq * seq) {
            throw ShapeError(shape_mismatch("raw prefill attention", f.prefill.size(), seq * seq));
        }
        if (f.decode_rows == 0) {
            throw ShapeError("raw frame declares zero decode rows");
        }
    } else {
        if (f.prefill.size() != h.m_visual) {
            throw ShapeError(shape_mismatch("prefill scores", f.prefill.size(), h.m_visual));
        }
        if (f.decode_rows != 0) {
            throw ShapeError("scored frame must not declare decode rows");
        }
    }
    if (f.decode.size() != h.layers) {
        throw ShapeError("frame has " + std::to_string(f.decode.size()) + " decode layers, header declares " +
                         std::to_string(h.layers));
    }
    const std::size_t per_layer = h.payload == PayloadKind::Raw ? f.decode_rows * seq : h.m_visual;
    for (std::size_t l = 0; l < f.decode.size(); ++l) {
        if (f.decode[l].size() != per_layer) {
            throw ShapeError(shape_mismatch("decode layer " + std::to_string(l), f.decode[l].size(), per_layer));
        }
    }
    if (f.embeddings.size() != h.m_visual * h.embed_dim) {
        throw ShapeError(shape_mismatch("embeddings", f.embeddings.size(), h.m_visual * h.embed_dim));
    }
}

TraceWriter::TraceWriter(std::ostream& out, TraceHeader header) : m_out(out), m_header(std::move(header)) {
    m_header.validate();
    m_out << header_to_json(m_header).dump() << '\n';
}

void TraceWriter::write(const Frame& frame) {
    validate_frame(m_header, frame);
    if (m_last_timestep && frame.timestep <= *m_last_timestep) {
        throw ShapeError("timesteps must be strictly increasing (" + std::to_string(frame.timestep) + " after " +
                         std::to_string(*m_last_timestep) + ")");
    }
    m_last_timestep = frame.timestep;
    m_out << frame_to_json(m_header, frame).dump() << '\n';
    if (!m_out) {
        throw Error("failed writing trace frame " + std::to_string(frame.timestep));
    }
}

TraceReader::TraceReader(std::istream& in) : m_in(in) {
    auto line = read_record();
    if (!line) {
        throw FormatError("empty trace: missing header record", 0);
    }
    json record;
    try {
        record = json::parse(*line);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("header is not valid JSON: ") + e.what(), m_record_offset);
    }
    if (!record.is_object() || record.value("format", std::string()) != kTraceFormatTag) {
        throw FormatError("not a trace file (missing format tag)", m_record_offset);
    }
    m_header.version = required<int>(record, "version", m_record_offset);
    if (m_header.version != kTraceVersion) {
        throw FormatError("unsupported trace version " + std::to_string(m_header.version) + " (reader supports " +
                              std::to_string(kTraceVersion) + ")",
                          m_record_offset);
    }
    m_header.episode_id = required<std::string>(record, "episode_id", m_record_offset);
    m_header.m_visual = required<std::size_t>(record, "m_visual", m_record_offset);
    m_header.n_text = required<std::size_t>(record, "n_text", m_record_offset);
    m_header.layers = required<std::size_t>(record, "layers", m_record_offset);
    m_header.embed_dim = required<std::size_t>(record, "embed_dim", m_record_offset);
    try {
        m_header.payload = parse_payload_kind(required<std::string>(record, "payload", m_record_offset));
        m_header.decode_mode = parse_decode_mode(required<std::string>(record, "decode_mode", m_record_offset));
        m_header.validate();
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("invalid header: ") + e.what(), m_record_offset);
    }
}

std::optional<std::string> TraceReader::read_record() {
    m_record_offset = m_offset;
    std::string line;
    if (!std::getline(m_in, line)) {
        if (!line.empty()) {
            throw FormatError("truncated record", m_record_offset);
        }
        return std::nullopt;
    }
    if (m_in.eof()) {
        // getline hit end of stream before a newline: the writer always terminates records.
        throw FormatError("truncated record (no terminating newline)", m_record_offset);
    }
    m_offset += line.size() + 1;
    return line;
}

std::optional<Frame> TraceReader::next() {
    auto line = read_record();
    if (!line) {
        return std::nullopt;
    }
    const std::uint64_t offset = m_record_offset;
    json record;
    try {
        record = json::parse(*line);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("frame record is not valid JSON: ") + e.what(), offset);
    }
    if (!record.is_object()) {
        throw FormatError("frame record is not an object", offset);
    }
    Frame frame;
    frame.timestep = required<std::uint64_t>(record, "t", offset);
    frame.prefill = floats_field(record, "prefill", offset);
    frame.embeddings = floats_field(record, "embeddings", offset);
    const auto decode = record.find("decode");
    if (decode == record.end() || !decode->is_array()) {
        throw FormatError("frame field 'decode' missing or not an array", offset);
    }
    for (const auto& layer : *decode) {
        if (!layer.is_string()) {
            throw FormatError("decode layer is not a string", offset);
        }
        auto values = detail::decode_floats(layer.get_ref<const std::string&>());
        if (!values) {
            throw FormatError("decode layer is not a valid base-64 float32 payload", offset);
        }
        frame.decode.push_back(std::move(*values));
    }
    if (m_header.payload == PayloadKind::Raw) {
        frame.decode_rows = required<std::size_t>(record, "decode_rows", offset);
    }
    try {
        validate_frame(m_header, frame);
    } catch (const ShapeError& e) {
        throw FormatError(e.what(), offset);
    }
    if (m_last_timestep && frame.timestep <= *m_last_timestep) {
        throw FormatError("timestep " + std::to_string(frame.timestep) + " does not increase", offset);
    }
    m_last_timestep = frame.timestep;
    return frame;
}

void write_trace(std::ostream& out, const TraceHeader& header, const std::vector<Frame>& frames) {
    TraceWriter writer(out, header);
    for (const auto& f : frames) {
        writer.write(f);
    }
}

void write_trace(const std::filesystem::path& path, const TraceHeader& header, const std::vector<Frame>& frames) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    write_trace(out, header, frames);
    out.flush();
    if (!out) {
        throw Error("failed writing '" + path.string() + "'");
    }
}

Trace read_trace(std::istream& in) {
    TraceReader reader(in);
    Trace trace{reader.header(), {}};
    while (auto frame = reader.next()) {
        trace.frames.push_back(std::move(*frame));
    }
    return trace;
}

Trace read_trace(const std::filesystem::path& path) {
    std::unique_ptr<char[]> buffer;
    std::ifstream in;
    if (const std::size_t size = buffer_size_from_env()) {
        buffer = std::make_unique<char[]>(size);
        in.rdbuf()->pubsetbuf(buffer.get(), static_cast<std::streamsize>(size));
    }
    in.open(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open trace '" + path.string() + "'");
    }
    return read_trace(in);
}

std::string checksum_bytes(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kHex[hash & 0xf];
        hash >>= 4;
    }
    return out;
}

std::string checksum_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream content;
    content << in.rdbuf();
    return checksum_bytes(content.str());
}

}  // namespace vlaprune
