// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vlaprune {

/// Base class of every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs whose dimensions disagree with each other or with a declared layout.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values or argument combinations (a caller mistake, not bad data).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numeric inputs violating a value invariant (negative, non-finite, empty history, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated trace stream. Carries the byte offset of the offending record.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::uint64_t byte_offset)
        : Error(what + " (at byte " + std::to_string(byte_offset) + ")"),
          m_offset(byte_offset) {}

    std::uint64_t byte_offset() const noexcept {
        return m_offset;
    }

private:
    std::uint64_t m_offset;
};

}  // namespace vlaprune
