// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

cv::Mat to_bgr(const Image& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

Image from_bgr(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image out(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::copy_n(rgb.ptr<std::uint8_t>(y), static_cast<std::size_t>(rgb.cols) * 3,
                out.rgb.begin() + static_cast<std::ptrdiff_t>(y) * rgb.cols * 3);
  }
  return out;
}

}  // namespace

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) throw ValidationError("empty image data");
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat bgr;
  try {
    bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  } catch (const cv::Exception&) {
    bgr.release();
  }
  if (bgr.empty()) throw ValidationError("image data is not a decodable PNG or JPEG");
  return from_bgr(bgr);
}

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open image file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", to_bgr(image), out)) throw std::runtime_error("PNG encoding failed");
  return out;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Image resize_image(const Image& image, int width, int height) {
  if (width < 1 || height < 1) throw ArgumentError("resize target must be at least 1x1");
  if (width == image.width && height == image.height) return image;
  cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.rgb.data()));
  cv::Mat resized;
  const bool shrinking = width < image.width && height < image.height;
  cv::resize(rgb, resized, cv::Size(width, height), 0, 0,
             shrinking ? cv::INTER_AREA : cv::INTER_LINEAR);
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    std::copy_n(resized.ptr<std::uint8_t>(y), static_cast<std::size_t>(width) * 3,
                out.rgb.begin() + static_cast<std::ptrdiff_t>(y) * width * 3);
  }
  return out;
}

Image crop_image(const Image& image, int x, int y, int width, int height) {
  if (x < 0 || y < 0 || width < 1 || height < 1 || x + width > image.width ||
      y + height > image.height) {
    throw ValidationError("crop rectangle outside image");
  }
  Image out(width, height);
  for (int row = 0; row < height; ++row) {
    const auto* src = &image.rgb[(static_cast<std::size_t>(y + row) * image.width + x) * 3];
    std::copy_n(src, static_cast<std::size_t>(width) * 3,
                out.rgb.begin() + static_cast<std::ptrdiff_t>(row) * width * 3);
  }
  return out;
}

Image gray_image(std::span<const double> values, int width, int height) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw ShapeError("gray_image: value count does not match dimensions");
  }
  Image out(width, height);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto level = static_cast<std::uint8_t>(
        std::lround(std::clamp(values[i], 0.0, 1.0) * 255.0));
    out.rgb[i * 3] = out.rgb[i * 3 + 1] = out.rgb[i * 3 + 2] = level;
  }
  return out;
}

double mean_abs_delta(const Image& a, const Image& b, std::span<const std::uint8_t> mask) {
  if (a.width != b.width || a.height != b.height) throw ShapeError("image sizes differ");
  const std::size_t pixels = static_cast<std::size_t>(a.width) * a.height;
  if (!mask.empty() && mask.size() != pixels) throw ShapeError("mask size differs from image");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (!mask.empty() && mask[p] == 0) continue;
    for (int c = 0; c < 3; ++c) {
      sum += std::abs(static_cast<int>(a.rgb[p * 3 + c]) - static_cast<int>(b.rgb[p * 3 + c]));
    }
    count += 3;
  }
  return count == 0 ? 0.0 : sum / (255.0 * static_cast<double>(count));
}

}  // namespace clickerase
