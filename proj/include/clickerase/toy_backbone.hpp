// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic CPU backbone with closed-form behaviour.
//
// Encoding is a lossless space-to-depth of patch x patch RGB blocks mapped to
// (p - 128) / 128. Inversion adds a seeded, 2^-8-quantized noise field z with
// dyadic noise levels sigma_i = i * sigma_step, so every unmodulated value is
// exactly representable and invert -> denoise reconstructs bit-exactly.
//
// The noise predictor knows z and estimates the clean content as
// v = x - sigma * z. Each decoder self-attention layer pools v to its grid and
// attends over a (2*radius+1)^2 window with logits -msd(v_q, v_k) / temperature
// (msd = channel-mean squared difference). The prediction is
//
//   eps = z - delta / sigma,   delta = sum_l w_l * up(mean_h (P'_lh - P_lh) v_l)
//
// where P is the unmodulated and P' the redirected attention. Without
// redirection delta is exactly zero; with it, object queries pull their
// content toward the non-suppressed keys of their window.

#include <cstdint>
#include <string>
#include <vector>

#include "clickerase/backbone.hpp"

namespace clickerase {

struct ToyLayerConfig {
  std::string name;
  int downsample = 1;  // latent cells per layer cell along each axis
  int radius = 1;      // Chebyshev attention window radius, in layer cells
  std::vector<double> temperatures{0.05, 0.2};  // one per head
  double weight = 0.5;
};

struct ToyConfig {
  GridShape grid{8, 8};
  int patch = 8;
  double sigma_step = 1.0 / 32.0;
  std::vector<ToyLayerConfig> layers{
      {"up.0.attn1", 2, 1, {0.05, 0.2}, 0.5},
      {"up.1.attn1", 1, 1, {0.05, 0.2}, 0.5},
  };
};

class ToyBackbone final : public Backbone {
 public:
  explicit ToyBackbone(ToyConfig config = {});

  [[nodiscard]] const BackboneDescriptor& descriptor() const override { return descriptor_; }
  [[nodiscard]] const ToyConfig& config() const { return config_; }

  [[nodiscard]] Latent encode(const Image& image) const override;
  [[nodiscard]] Image decode(const Latent& latent) const override;
  [[nodiscard]] Inversion invert(const Latent& clean, int steps, std::uint64_t seed) const override;
  [[nodiscard]] NoisePrediction predict_noise(const LatentState& state,
                                              const LayerModulations* modulation) const override;
  [[nodiscard]] std::vector<AttentionCapture> capture_attention(
      const LatentState& state, const LayerSelector& selector) const override;
  [[nodiscard]] Latent denoise_step(const LatentState& state,
                                    const NoisePrediction& noise) const override;
  [[nodiscard]] std::uint64_t weights_checksum() const override;

  [[nodiscard]] double sigma(int level) const { return level * config_.sigma_step; }

  /// The seeded noise field z shared by inversion and prediction.
  [[nodiscard]] Latent noise_field(std::uint64_t seed) const;

  /// Pre-softmax logits of one head, dense over the layer grid; keys outside
  /// the window are -inf.
  [[nodiscard]] Eigen::MatrixXd head_logits(const Latent& content, const ToyLayerConfig& layer,
                                            double temperature) const;

  /// Clean-content estimate v pooled to the given layer's grid.
  [[nodiscard]] Latent layer_content(const Latent& clean_estimate, const ToyLayerConfig& layer) const;

 private:
  [[nodiscard]] const ToyLayerConfig& layer_config(const std::string& name) const;
  [[nodiscard]] Latent clean_estimate(const LatentState& state, const Latent& z) const;

  ToyConfig config_;
  BackboneDescriptor descriptor_;
};

/// Row-wise softmax; -inf entries become exactly zero.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

}  // namespace clickerase
