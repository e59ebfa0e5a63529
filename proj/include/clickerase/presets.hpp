// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "clickerase/backbone.hpp"
#include "clickerase/ddim.hpp"
#include "clickerase/toy_backbone.hpp"

namespace clickerase {

struct PresetEntry {
  BackboneDescriptor descriptor;
  std::optional<ToyConfig> toy;  // set for the toy preset
  std::filesystem::path source;  // empty for built-ins
};

/// Parses one preset config document. Throws ConfigError on schema violations.
PresetEntry parse_preset(std::string_view json_text);

/// $CLICKERASE_CACHE_DIR, else $XDG_CACHE_HOME/clickerase, else ~/.cache/clickerase.
std::filesystem::path checkpoint_cache_dir();

/// $CLICKERASE_PRESET_DIR, else the presets/ directory of the source tree.
std::filesystem::path default_preset_dir();

class PresetRegistry {
 public:
  /// Loads every *.json in `dir`. The toy preset is always present.
  static PresetRegistry load(const std::filesystem::path& dir);
  static PresetRegistry load_default() { return load(default_preset_dir()); }

  [[nodiscard]] const PresetEntry& get(std::string_view name) const;
  [[nodiscard]] bool contains(std::string_view name) const;
  [[nodiscard]] std::vector<std::string> names() const;

  /// Throws ConfigError for unknown presets.
  [[nodiscard]] std::shared_ptr<const Backbone> make_backbone(std::string_view name) const;

 private:
  std::map<std::string, PresetEntry, std::less<>> entries_;
};

/// Stable Diffusion family adapter. The descriptor and DDIM sampler are
/// complete; encode/predict/capture need a UNet+VAE runtime, which this
/// build does not link, so they throw BackboneUnavailable.
class DiffusersBackbone final : public Backbone {
 public:
  explicit DiffusersBackbone(BackboneDescriptor descriptor);

  [[nodiscard]] const BackboneDescriptor& descriptor() const override { return descriptor_; }
  [[nodiscard]] bool available() const override { return false; }

  [[nodiscard]] Latent encode(const Image& image) const override;
  [[nodiscard]] Image decode(const Latent& latent) const override;
  [[nodiscard]] Inversion invert(const Latent& clean, int steps, std::uint64_t seed) const override;
  [[nodiscard]] NoisePrediction predict_noise(const LatentState& state,
                                              const LayerModulations* modulation) const override;
  [[nodiscard]] std::vector<AttentionCapture> capture_attention(
      const LatentState& state, const LayerSelector& selector) const override;
  [[nodiscard]] Latent denoise_step(const LatentState& state,
                                    const NoisePrediction& noise) const override;
  [[nodiscard]] std::uint64_t weights_checksum() const override { return 0; }

 private:
  [[noreturn]] void unavailable(std::string_view what) const;

  BackboneDescriptor descriptor_;
  DdimScheduler scheduler_;
};

}  // namespace clickerase
