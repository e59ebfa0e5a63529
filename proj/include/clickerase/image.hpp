// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace clickerase {

/// 8-bit interleaved RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  [[nodiscard]] bool empty() const { return width == 0 || height == 0; }
  [[nodiscard]] std::uint8_t& at(int x, int y, int c) {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  [[nodiscard]] std::uint8_t at(int x, int y, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// PNG or JPEG bytes -> RGB. Throws ValidationError when undecodable.
Image decode_image(std::span<const std::uint8_t> bytes);
Image read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_image(const std::filesystem::path& path, const Image& image);

/// Area filter when shrinking, bilinear when enlarging. Same size is a copy.
Image resize_image(const Image& image, int width, int height);
Image crop_image(const Image& image, int x, int y, int width, int height);

/// Gray image from values in [0,1], one pixel per value, row-major.
Image gray_image(std::span<const double> values, int width, int height);

/// Mean absolute per-channel difference in [0,1] units over pixels where
/// mask (image-sized, row-major) is non-zero; all pixels when mask is empty.
double mean_abs_delta(const Image& a, const Image& b, std::span<const std::uint8_t> mask = {});

}  // namespace clickerase
