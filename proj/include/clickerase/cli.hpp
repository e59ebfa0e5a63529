// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clickerase/semantic_map.hpp"

namespace clickerase::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// "u,v,+" or "u,v,-". Returns nullopt when malformed or out of range.
std::optional<std::pair<Click, Polarity>> parse_click(const std::string& text);

/// Single-image removal. Writes the output image (and maps with --dump-maps),
/// then one JSON summary line on `out`. Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clickerase::cli
