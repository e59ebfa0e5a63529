// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

namespace clickerase {

/// Row-major spatial grid. Cell index = row * width + col.
struct GridShape {
  int height = 0;
  int width = 0;

  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  [[nodiscard]] std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(col);
  }
  [[nodiscard]] int row_of(std::size_t i) const { return static_cast<int>(i / width); }
  [[nodiscard]] int col_of(std::size_t i) const { return static_cast<int>(i % width); }
  [[nodiscard]] std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width);
  }

  friend bool operator==(const GridShape&, const GridShape&) = default;
};

}  // namespace clickerase
