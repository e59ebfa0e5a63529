// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/presets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include <spdlog/spdlog.h>

#include "clickerase/errors.hpp"

#ifndef CLICKERASE_SOURCE_PRESET_DIR
#define CLICKERASE_SOURCE_PRESET_DIR "presets"
#endif

namespace clickerase {

namespace {

using nlohmann::json;

GridShape grid_from(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2) {
    throw ConfigError(std::string(field) + " must be a [height, width] pair");
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

ToyConfig parse_toy(const json& j, GridShape latent_grid) {
  ToyConfig cfg;
  cfg.grid = latent_grid;
  cfg.patch = j.value("patch", cfg.patch);
  cfg.sigma_step = j.value("sigma_step", cfg.sigma_step);
  if (j.contains("layers")) {
    cfg.layers.clear();
    for (const auto& l : j.at("layers")) {
      ToyLayerConfig layer;
      layer.name = l.at("name").get<std::string>();
      layer.downsample = l.value("downsample", 1);
      layer.radius = l.value("radius", 1);
      layer.temperatures = l.value("temperatures", layer.temperatures);
      layer.weight = l.value("weight", 1.0 / static_cast<double>(j.at("layers").size()));
      cfg.layers.push_back(std::move(layer));
    }
  }
  return cfg;
}

std::vector<AttentionLayer> expand_layers(const json& list) {
  std::vector<AttentionLayer> out;
  for (const auto& entry : list) {
    const GridShape grid = grid_from(entry.at("grid"), "decoder_self_attention.grid");
    const int heads = entry.value("heads", 1);
    if (entry.contains("name")) {
      out.push_back({entry.at("name").get<std::string>(), grid, heads});
      continue;
    }
    const auto prefix = entry.at("prefix").get<std::string>();
    const int attentions = entry.value("attentions", 1);
    const int blocks = entry.value("transformer_blocks", 1);
    for (int a = 0; a < attentions; ++a) {
      for (int b = 0; b < blocks; ++b) {
        out.push_back({prefix + "." + std::to_string(a) + ".transformer_blocks." +
                           std::to_string(b) + ".attn1",
                       grid, heads});
      }
    }
  }
  return out;
}

}  // namespace

PresetEntry parse_preset(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("preset config is not valid JSON: ") + e.what());
  }
  try {
    PresetEntry entry;
    BackboneDescriptor& d = entry.descriptor;
    d.preset = j.at("preset").get<std::string>();
    const auto& native = j.at("native_resolution");
    d.native_width = native.at(0).get<int>();
    d.native_height = native.at(1).get<int>();
    d.latent_grid = grid_from(j.at("latent_grid"), "latent_grid");
    d.latent_channels = j.at("latent_channels").get<int>();
    if (j.contains("checkpoint") && j["checkpoint"].is_string()) {
      d.checkpoint = j["checkpoint"].get<std::string>();
    }
    if (j.contains("sampler")) d.default_steps = j["sampler"].value("default_steps", d.default_steps);
    d.decoder_self_attention = expand_layers(j.at("decoder_self_attention"));

    if (j.contains("toy")) {
      entry.toy = parse_toy(j["toy"], d.latent_grid);
      // The toy model derives its own descriptor; it must agree with the file.
      const ToyBackbone probe(*entry.toy);
      const auto& derived = probe.descriptor();
      if (derived.native_width != d.native_width || derived.native_height != d.native_height ||
          derived.latent_channels != d.latent_channels) {
        throw ConfigError("toy preset fields disagree with its toy section");
      }
      for (const auto& layer : d.decoder_self_attention) {
        const AttentionLayer* match = derived.find_layer(layer.name);
        if (match == nullptr || !(match->grid == layer.grid) || match->heads != layer.heads) {
          throw ConfigError("toy preset layer " + layer.name + " disagrees with its toy section");
        }
      }
      d.default_steps = j.contains("sampler") ? d.default_steps : derived.default_steps;
    }
    d.validate();
    return entry;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("preset config schema error: ") + e.what());
  }
}

std::filesystem::path checkpoint_cache_dir() {
  if (const char* dir = std::getenv("CLICKERASE_CACHE_DIR"); dir && *dir) return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
    return std::filesystem::path(xdg) / "clickerase";
  }
  if (const char* home = std::getenv("HOME"); home && *home) {
    return std::filesystem::path(home) / ".cache" / "clickerase";
  }
  return std::filesystem::temp_directory_path() / "clickerase-cache";
}

std::filesystem::path default_preset_dir() {
  if (const char* dir = std::getenv("CLICKERASE_PRESET_DIR"); dir && *dir) return dir;
  return CLICKERASE_SOURCE_PRESET_DIR;
}

PresetRegistry PresetRegistry::load(const std::filesystem::path& dir) {
  PresetRegistry registry;
  std::error_code ec;
  if (std::filesystem::is_directory(dir, ec)) {
    for (const auto& file : std::filesystem::directory_iterator(dir)) {
      if (file.path().extension() != ".json") continue;
      std::ifstream in(file.path());
      std::stringstream buffer;
      buffer << in.rdbuf();
      PresetEntry entry = parse_preset(buffer.str());
      entry.source = file.path();
      const std::string name = entry.descriptor.preset;
      registry.entries_.insert_or_assign(name, std::move(entry));
    }
  } else {
    spdlog::warn("preset directory {} not found; only the built-in toy preset is available",
                 dir.string());
  }
  if (!registry.contains("toy")) {
    PresetEntry toy{ToyBackbone(ToyConfig{}).descriptor(), ToyConfig{}, {}};
    registry.entries_.emplace("toy", std::move(toy));
  }
  return registry;
}

const PresetEntry& PresetRegistry::get(std::string_view name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown preset '" + std::string(name) + "'");
  return it->second;
}

bool PresetRegistry::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

std::vector<std::string> PresetRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

std::shared_ptr<const Backbone> PresetRegistry::make_backbone(std::string_view name) const {
  const PresetEntry& entry = get(name);
  if (entry.toy) return std::make_shared<ToyBackbone>(*entry.toy);
  return std::make_shared<DiffusersBackbone>(entry.descriptor);
}

DiffusersBackbone::DiffusersBackbone(BackboneDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
}

void DiffusersBackbone::unavailable(std::string_view what) const {
  throw BackboneUnavailable("preset " + descriptor_.preset + ": " + std::string(what) +
                            " requires a UNet/VAE inference runtime, which this build does not "
                            "include (checkpoint " + descriptor_.checkpoint + ", cache " +
                            checkpoint_cache_dir().string() + ")");
}

Latent DiffusersBackbone::encode(const Image&) const { unavailable("encode"); }
Image DiffusersBackbone::decode(const Latent&) const { unavailable("decode"); }
Inversion DiffusersBackbone::invert(const Latent&, int, std::uint64_t) const { unavailable("invert"); }

NoisePrediction DiffusersBackbone::predict_noise(const LatentState&,
                                                 const LayerModulations* modulation) const {
  if (modulation != nullptr) check_modulations(*modulation);
  unavailable("predict_noise");
}

std::vector<AttentionCapture> DiffusersBackbone::capture_attention(
    const LatentState&, const LayerSelector& selector) const {
  (void)resolve(selector);
  unavailable("capture_attention");
}

Latent DiffusersBackbone::denoise_step(const LatentState& state, const NoisePrediction& noise) const {
  return scheduler_.step(state.latent, noise.noise, state.level, state.total_steps);
}

}  // namespace clickerase
