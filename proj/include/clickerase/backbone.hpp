// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Adapter contract over denoising backbones.
//
// Noise levels are indexed 0..T for a T-step schedule: level 0 is the clean
// latent, level T the fully inverted one. Denoising step k (0-based) moves
// from level T-k to level T-k-1.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickerase/attention_control.hpp"
#include "clickerase/grid.hpp"
#include "clickerase/image.hpp"
#include "clickerase/semantic_map.hpp"

namespace clickerase {

struct AttentionLayer {
  std::string name;
  GridShape grid;
  int heads = 1;
};

struct BackboneDescriptor {
  std::string preset;
  int native_width = 0;
  int native_height = 0;
  GridShape latent_grid;
  int latent_channels = 0;
  std::vector<AttentionLayer> decoder_self_attention;
  std::string checkpoint;  // public source locator, empty for toy
  int default_steps = 50;

  /// Distinct decoder attention grids, coarsest first.
  [[nodiscard]] std::vector<GridShape> decoder_resolutions() const;
  /// Second-coarsest decoder resolution (the coarsest if there is only one).
  [[nodiscard]] GridShape capture_grid() const;
  [[nodiscard]] std::vector<std::string> layers_at(GridShape grid) const;
  [[nodiscard]] const AttentionLayer* find_layer(std::string_view name) const;

  /// Throws ConfigError if a layer grid does not divide the latent grid.
  void validate() const;
};

/// Latent values stored cell-major: values[cell * channels + c].
struct Latent {
  GridShape grid;
  int channels = 0;
  std::vector<double> values;

  Latent() = default;
  Latent(GridShape g, int c, double fill = 0.0)
      : grid(g), channels(c), values(g.size() * static_cast<std::size_t>(c), fill) {}

  [[nodiscard]] std::span<double> cell(std::size_t i) {
    return {values.data() + i * static_cast<std::size_t>(channels), static_cast<std::size_t>(channels)};
  }
  [[nodiscard]] std::span<const double> cell(std::size_t i) const {
    return {values.data() + i * static_cast<std::size_t>(channels), static_cast<std::size_t>(channels)};
  }
  [[nodiscard]] bool same_shape(const Latent& other) const {
    return grid == other.grid && channels == other.channels;
  }
  [[nodiscard]] bool finite() const;

  friend bool operator==(const Latent&, const Latent&) = default;
};

struct LatentState {
  Latent latent;
  int level = 0;        // noise level index, 0 = clean
  int step = 0;         // denoising step index within the schedule
  int total_steps = 0;  // T
  std::uint64_t seed = 0;
};

enum class PredictionVariant { original, modulated };

struct NoisePrediction {
  Latent noise;
  PredictionVariant variant = PredictionVariant::original;
};

struct Inversion {
  std::vector<Latent> trajectory;  // trajectory[i] is the latent at level i

  [[nodiscard]] int steps() const { return static_cast<int>(trajectory.size()) - 1; }
  [[nodiscard]] const Latent& start() const { return trajectory.back(); }
};

/// Keyed by decoder self-attention layer name. Layers without an entry run unmodulated.
using LayerModulations = std::map<std::string, LogitModulation>;

struct AttentionCapture {
  std::string layer;
  int head = 0;
  GridShape grid;
  AttentionMap probabilities;  // post-softmax, rows sum to 1
};

/// Layer names to capture; empty selects every decoder layer at capture_grid().
struct LayerSelector {
  std::vector<std::string> names;
};

class Backbone {
 public:
  virtual ~Backbone() = default;

  [[nodiscard]] virtual const BackboneDescriptor& descriptor() const = 0;
  /// False when the preset is described but cannot run in this build.
  [[nodiscard]] virtual bool available() const { return true; }

  /// `image` must be at the native resolution.
  [[nodiscard]] virtual Latent encode(const Image& image) const = 0;
  [[nodiscard]] virtual Image decode(const Latent& latent) const = 0;

  /// Deterministic inversion of a clean latent over `steps` levels.
  [[nodiscard]] virtual Inversion invert(const Latent& clean, int steps,
                                         std::uint64_t seed) const = 0;

  /// With `modulation` null the unmodified prediction; otherwise every listed
  /// decoder self-attention layer runs redirect_logits before its softmax.
  [[nodiscard]] virtual NoisePrediction predict_noise(
      const LatentState& state, const LayerModulations* modulation) const = 0;

  [[nodiscard]] virtual std::vector<AttentionCapture> capture_attention(
      const LatentState& state, const LayerSelector& selector) const = 0;

  /// Deterministic sampler update from state.level to state.level - 1.
  [[nodiscard]] virtual Latent denoise_step(const LatentState& state,
                                            const NoisePrediction& noise) const = 0;

  /// Fingerprint of the model parameters.
  [[nodiscard]] virtual std::uint64_t weights_checksum() const = 0;

 protected:
  /// Throws ConfigError unless every entry names an existing layer at its grid.
  void check_modulations(const LayerModulations& modulation) const;
  /// Resolves a selector against the descriptor; throws ConfigError for unknown names.
  [[nodiscard]] std::vector<const AttentionLayer*> resolve(const LayerSelector& selector) const;
};

}  // namespace clickerase
