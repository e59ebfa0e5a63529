// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

constexpr int kThumb = 4;

Eigen::MatrixXd covariance(const FeatureMatrix& x, const Eigen::RowVectorXd& mean) {
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

Eigen::MatrixXd cubic_kernel(const FeatureMatrix& a, const FeatureMatrix& b) {
  const double d = static_cast<double>(a.cols());
  Eigen::MatrixXd k = (a * b.transpose()).array() / d + 1.0;
  return k.array().cube();
}

}  // namespace

Eigen::VectorXd ThumbnailFeatures::extract(const Image& image) const {
  if (image.empty()) throw ValidationError("cannot extract features from an empty image");
  const Image thumb = resize_image(image, kThumb, kThumb);
  Eigen::VectorXd f(kThumb * kThumb * 3 + 6);
  for (std::size_t i = 0; i < thumb.rgb.size(); ++i) {
    f(static_cast<Eigen::Index>(i)) = thumb.rgb[i] / 255.0;
  }
  const std::size_t pixels = static_cast<std::size_t>(image.width) * image.height;
  for (int c = 0; c < 3; ++c) {
    double sum = 0.0;
    double sq = 0.0;
    for (std::size_t p = 0; p < pixels; ++p) {
      const double v = image.rgb[p * 3 + static_cast<std::size_t>(c)] / 255.0;
      sum += v;
      sq += v * v;
    }
    const double mean = sum / static_cast<double>(pixels);
    f(kThumb * kThumb * 3 + c) = mean;
    f(kThumb * kThumb * 3 + 3 + c) = std::sqrt(std::max(0.0, sq / static_cast<double>(pixels) - mean * mean));
  }
  return f;
}

double frechet_distance(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.rows() < 2 || b.rows() < 2) throw ArgumentError("FID needs at least two samples per set");
  if (a.cols() != b.cols()) throw ShapeError("FID feature dimensions differ");
  const Eigen::RowVectorXd mu_a = a.colwise().mean();
  const Eigen::RowVectorXd mu_b = b.colwise().mean();
  const Eigen::MatrixXd cov_a = covariance(a, mu_a);
  const Eigen::MatrixXd cov_b = covariance(b, mu_b);
  const Eigen::MatrixXd root_a = psd_sqrt(cov_a);
  const Eigen::MatrixXd middle = root_a * cov_b * root_a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (middle + middle.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

double kernel_inception_distance(const FeatureMatrix& a, const FeatureMatrix& b, int subset_size,
                                 int subsets, std::uint64_t seed) {
  if (a.rows() != b.rows()) throw ShapeError("KID expects paired sets of equal size");
  if (a.cols() != b.cols()) throw ShapeError("KID feature dimensions differ");
  const auto n = static_cast<int>(a.rows());
  if (n < 2) throw ArgumentError("KID needs at least two samples");
  const int m = std::min(n, subset_size);
  const int rounds = m == n ? 1 : std::max(1, subsets);

  std::mt19937_64 gen(seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int round = 0; round < rounds; ++round) {
    std::iota(order.begin(), order.end(), 0);
    if (m < n) std::shuffle(order.begin(), order.end(), gen);
    FeatureMatrix xa(m, a.cols());
    FeatureMatrix xb(m, b.cols());
    for (int i = 0; i < m; ++i) {
      xa.row(i) = a.row(order[static_cast<std::size_t>(i)]);
      xb.row(i) = b.row(order[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd kaa = cubic_kernel(xa, xa);
    const Eigen::MatrixXd kbb = cubic_kernel(xb, xb);
    const Eigen::MatrixXd kab = cubic_kernel(xa, xb);
    const double within = (kaa.sum() - kaa.trace()) + (kbb.sum() - kbb.trace());
    const double across = 2.0 * (kab.sum() - kab.trace());
    total += (within - across) / (static_cast<double>(m) * (m - 1));
  }
  return total / rounds;
}

FeatureMetricProvider::FeatureMetricProvider(std::shared_ptr<const FeatureExtractor> features)
    : features_(std::move(features)) {}

std::string FeatureMetricProvider::name() const { return "features:" + features_->name(); }

FeatureMatrix FeatureMetricProvider::features_of(std::span<const Image> images) const {
  if (images.empty()) throw ArgumentError("no images to extract features from");
  const Eigen::VectorXd first = features_->extract(images.front());
  FeatureMatrix out(static_cast<Eigen::Index>(images.size()), first.size());
  out.row(0) = first.transpose();
  for (std::size_t i = 1; i < images.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = features_->extract(images[i]).transpose();
  }
  return out;
}

double FeatureMetricProvider::fid(std::span<const Image> generated,
                                  std::span<const Image> reference) const {
  return frechet_distance(features_of(generated), features_of(reference));
}

double FeatureMetricProvider::kid(std::span<const Image> generated,
                                  std::span<const Image> reference) const {
  return kernel_inception_distance(features_of(generated), features_of(reference));
}

}  // namespace clickerase
