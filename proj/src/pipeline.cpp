// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/pipeline.hpp"

#include <algorithm>
#include <map>
#include <string>

#include <spdlog/spdlog.h>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

Image to_native(const Backbone& backbone, const Image& image, ResizePolicy policy) {
  const auto& desc = backbone.descriptor();
  if (image.empty()) throw ValidationError("input image is empty");
  if (image.width == desc.native_width && image.height == desc.native_height) return image;
  if (policy == ResizePolicy::reject) {
    throw ValidationError("image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + " but preset " + desc.preset +
                          " runs at " + std::to_string(desc.native_width) + "x" +
                          std::to_string(desc.native_height));
  }
  return resize_image(image, desc.native_width, desc.native_height);
}

LatentState state_at(const Latent& latent, int step, int total, std::uint64_t seed) {
  return {latent, total - step, step, total, seed};
}

std::vector<std::uint8_t> upsample_mask(const RemovalMaps& maps, int width, int height) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(width) * height);
  const double sy = static_cast<double>(maps.grid.height) / height;
  const double sx = static_cast<double>(maps.grid.width) / width;
  for (int y = 0; y < height; ++y) {
    const int r = std::min(static_cast<int>(y * sy), maps.grid.height - 1);
    for (int x = 0; x < width; ++x) {
      const int c = std::min(static_cast<int>(x * sx), maps.grid.width - 1);
      out[static_cast<std::size_t>(y) * width + x] = maps.m_ob[maps.grid.index(r, c)];
    }
  }
  return out;
}

}  // namespace

NoisePrediction blend(const NoisePrediction& eps, const NoisePrediction& eps_mod, double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("r must lie in [0,1], got " + std::to_string(r));
  if (!eps.noise.same_shape(eps_mod.noise) || eps.noise.values.size() != eps_mod.noise.values.size()) {
    throw ShapeError("blend: prediction shapes differ");
  }
  NoisePrediction out{eps.noise, r == 0.0 ? PredictionVariant::original : PredictionVariant::modulated};
  const double keep = 1.0 - r;
  for (std::size_t i = 0; i < out.noise.values.size(); ++i) {
    out.noise.values[i] = keep * eps.noise.values[i] + r * eps_mod.noise.values[i];
  }
  return out;
}

RemovalMaps extract_maps(const Backbone& backbone, const Inversion& inversion,
                         const ClickSet& clicks, const PropagationConfig& propagation,
                         std::uint64_t seed) {
  const int total = inversion.steps();
  const int mid = total / 2;
  const LatentState state{inversion.trajectory[static_cast<std::size_t>(mid)], mid, total - mid,
                          total, seed};
  const auto captures = backbone.capture_attention(state, LayerSelector{});
  if (captures.empty()) throw ConfigError("capture_attention returned no maps");
  const GridShape grid = captures.front().grid;
  std::vector<AttentionMap> maps;
  maps.reserve(captures.size());
  for (const auto& c : captures) maps.push_back(c.probabilities);
  const TransitionMatrix transition = aggregate_attention(maps, grid);
  return combine_clicks(transition, clicks, propagation);
}

Image reconstruct(const Backbone& backbone, const Image& image, int steps, std::uint64_t seed,
                  ResizePolicy policy) {
  const Image native = to_native(backbone, image, policy);
  const Inversion inversion = backbone.invert(backbone.encode(native), steps, seed);
  Latent x = inversion.start();
  for (int k = 0; k < steps; ++k) {
    const LatentState state = state_at(x, k, steps, seed);
    x = backbone.denoise_step(state, backbone.predict_noise(state, nullptr));
  }
  return resize_image(backbone.decode(x), image.width, image.height);
}

RemovalResult remove_object(const Backbone& backbone, const RemovalRequest& request,
                            const ProgressCallback& progress) {
  const auto started = std::chrono::steady_clock::now();
  if (request.clicks.positives.empty()) {
    throw PreconditionError("removal needs at least one positive click");
  }
  request.clicks.validate();
  request.propagation.validate();
  const StagePlan plan = build_stage_plan(request.schedule);
  const int total = request.schedule.total_steps;
  const auto& desc = backbone.descriptor();

  const Image native = to_native(backbone, request.image, request.resize_policy);
  const Inversion inversion = backbone.invert(backbone.encode(native), total, request.seed);

  RemovalResult result;
  result.clicks = request.clicks;
  result.maps = extract_maps(backbone, inversion, request.clicks, request.propagation, request.seed);
  result.no_object_found = result.maps.object_empty();
  if (result.no_object_found) {
    spdlog::warn("no object region found for the given clicks; returning a plain reconstruction");
  }

  std::map<std::string, RemovalMaps> layer_maps;
  for (const auto& layer : desc.decoder_self_attention) {
    layer_maps.emplace(layer.name, resize_maps(result.maps, layer.grid));
  }

  Latent x = inversion.start();
  result.steps.reserve(static_cast<std::size_t>(total));
  for (int k = 0; k < total; ++k) {
    const Stage stage = plan.stages[static_cast<std::size_t>(k)];
    if (progress) progress(stage, k, total);
    const LatentState state = state_at(x, k, total, request.seed);
    const bool guided = !result.no_object_found &&
                        (stage == Stage::object_and_bg || stage == Stage::object_only);
    const double alpha = stage == Stage::object_and_bg ? plan.alpha[static_cast<std::size_t>(k)] : 1.0;

    NoisePrediction eps = backbone.predict_noise(state, nullptr);
    if (guided) {
      LayerModulations mods;
      for (const auto& [name, maps] : layer_maps) {
        mods.emplace(name, modulation_for(maps, alpha, request.schedule.lambda));
      }
      const NoisePrediction eps_mod = backbone.predict_noise(state, &mods);
      eps = blend(eps, eps_mod, request.schedule.r);
    }
    x = backbone.denoise_step(state, eps);
    result.steps.push_back({k, stage, alpha, guided});
  }
  result.stage_lengths = plan.lengths();

  result.output = resize_image(backbone.decode(x), request.image.width, request.image.height);
  result.latent = std::move(x);
  result.object_mask = upsample_mask(result.maps, request.image.width, request.image.height);
  result.duration = std::chrono::steady_clock::now() - started;
  return result;
}

RemovalResult progressive_refine(const Backbone& backbone, const RemovalResult& prev,
                                 const ClickSet& added, const RemovalRequest& request,
                                 const ProgressCallback& progress) {
  RemovalRequest next = request;
  next.clicks = prev.clicks;
  next.clicks.merge(added, backbone.descriptor().capture_grid());
  return remove_object(backbone, next, progress);
}

}  // namespace clickerase
