// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "clickerase/errors.hpp"

namespace clickerase {

std::vector<GridShape> BackboneDescriptor::decoder_resolutions() const {
  std::vector<GridShape> out;
  for (const auto& layer : decoder_self_attention) {
    if (std::find(out.begin(), out.end(), layer.grid) == out.end()) out.push_back(layer.grid);
  }
  std::sort(out.begin(), out.end(),
            [](const GridShape& a, const GridShape& b) { return a.size() < b.size(); });
  return out;
}

GridShape BackboneDescriptor::capture_grid() const {
  const auto resolutions = decoder_resolutions();
  if (resolutions.empty()) throw ConfigError("preset " + preset + " has no decoder attention layers");
  return resolutions.size() > 1 ? resolutions[1] : resolutions[0];
}

std::vector<std::string> BackboneDescriptor::layers_at(GridShape grid) const {
  std::vector<std::string> out;
  for (const auto& layer : decoder_self_attention) {
    if (layer.grid == grid) out.push_back(layer.name);
  }
  return out;
}

const AttentionLayer* BackboneDescriptor::find_layer(std::string_view name) const {
  for (const auto& layer : decoder_self_attention) {
    if (layer.name == name) return &layer;
  }
  return nullptr;
}

void BackboneDescriptor::validate() const {
  if (latent_grid.size() == 0 || latent_channels < 1) {
    throw ConfigError("preset " + preset + ": empty latent grid");
  }
  if (decoder_self_attention.empty()) {
    throw ConfigError("preset " + preset + ": no decoder self-attention layers");
  }
  for (const auto& layer : decoder_self_attention) {
    if (layer.grid.height < 1 || layer.grid.width < 1 ||
        latent_grid.height % layer.grid.height != 0 || latent_grid.width % layer.grid.width != 0) {
      throw ConfigError("preset " + preset + ": layer " + layer.name + " grid " + layer.grid.str() +
                        " does not divide latent grid " + latent_grid.str());
    }
    if (layer.heads < 1) throw ConfigError("preset " + preset + ": layer " + layer.name + " has no heads");
  }
}

bool Latent::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void Backbone::check_modulations(const LayerModulations& modulation) const {
  const auto& desc = descriptor();
  for (const auto& [name, mod] : modulation) {
    const AttentionLayer* layer = desc.find_layer(name);
    if (layer == nullptr) {
      throw ConfigError("modulation targets unknown layer '" + name + "'");
    }
    if (!(layer->grid == mod.grid)) {
      throw ConfigError("modulation for layer '" + name + "' is " + mod.grid.str() +
                        " but the layer runs at " + layer->grid.str());
    }
    if (mod.g_bg.size() != mod.grid.size() || mod.p_ob.size() != mod.grid.size()) {
      throw ShapeError("modulation vectors for layer '" + name + "' do not match its grid");
    }
  }
}

std::vector<const AttentionLayer*> Backbone::resolve(const LayerSelector& selector) const {
  const auto& desc = descriptor();
  std::vector<const AttentionLayer*> out;
  if (selector.names.empty()) {
    const GridShape grid = desc.capture_grid();
    for (const auto& layer : desc.decoder_self_attention) {
      if (layer.grid == grid) out.push_back(&layer);
    }
    return out;
  }
  for (const auto& name : selector.names) {
    const AttentionLayer* layer = desc.find_layer(name);
    if (layer == nullptr) throw ConfigError("unknown attention layer '" + name + "'");
    out.push_back(layer);
  }
  return out;
}

}  // namespace clickerase
