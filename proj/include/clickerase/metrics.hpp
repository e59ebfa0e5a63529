// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "clickerase/image.hpp"

namespace clickerase {

/// One row per sample.
using FeatureMatrix = Eigen::MatrixXd;

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd extract(const Image& image) const = 0;
};

/// Area-downsampled 4x4 RGB thumbnail plus per-channel mean and standard
/// deviation, all in [0,1] units (54 dims). Accepts any image size.
class ThumbnailFeatures final : public FeatureExtractor {
 public:
  [[nodiscard]] std::string name() const override { return "thumbnail-54"; }
  [[nodiscard]] Eigen::VectorXd extract(const Image& image) const override;
};

/// ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2). Needs >= 2 rows each.
double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b);

/// Unbiased MMD^2 with the cubic polynomial kernel (x.y / d + 1)^3, averaged
/// over `subsets` random index subsets of size min(n, subset_size). Rows of
/// `a` and `b` are paired by index, so identical inputs give exactly zero.
double kernel_inception_distance(const FeatureMatrix& a, const FeatureMatrix& b,
                                 int subset_size = 1000, int subsets = 100,
                                 std::uint64_t seed = 0);

/// Pluggable FID/KID backend. Must be deterministic for fixed inputs.
class MetricProvider {
 public:
  virtual ~MetricProvider() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual double fid(std::span<const Image> generated,
                                   std::span<const Image> reference) const = 0;
  [[nodiscard]] virtual double kid(std::span<const Image> generated,
                                   std::span<const Image> reference) const = 0;
};

class FeatureMetricProvider final : public MetricProvider {
 public:
  explicit FeatureMetricProvider(std::shared_ptr<const FeatureExtractor> features =
                                     std::make_shared<ThumbnailFeatures>());

  [[nodiscard]] std::string name() const override;
  [[nodiscard]] double fid(std::span<const Image> generated,
                           std::span<const Image> reference) const override;
  [[nodiscard]] double kid(std::span<const Image> generated,
                           std::span<const Image> reference) const override;

 private:
  [[nodiscard]] FeatureMatrix features_of(std::span<const Image> images) const;

  std::shared_ptr<const FeatureExtractor> features_;
};

}  // namespace clickerase
