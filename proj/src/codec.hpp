// Copyright (C) 2026 The vlaprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vlaprune::detail {

/// Standard base-64 alphabet with '=' padding.
std::string base64_encode(std::span<const unsigned char> bytes);
std::optional<std::vector<unsigned char>> base64_decode(std::string_view text);

/// Floats as little-endian IEEE-754 binary32, then base-64.
std::string encode_floats(std::span<const float> values);
std::optional<std::vector<float>> decode_floats(std::string_view text);

}  // namespace vlaprune::detail
