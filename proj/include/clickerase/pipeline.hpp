// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "clickerase/attention_control.hpp"
#include "clickerase/backbone.hpp"
#include "clickerase/image.hpp"
#include "clickerase/semantic_map.hpp"

namespace clickerase {

/// (1 - r) * eps + r * eps_mod, element-wise. Tagged MODULATED unless r == 0.
NoisePrediction blend(const NoisePrediction& eps, const NoisePrediction& eps_mod, double r);

enum class ResizePolicy { resize, reject };

struct RemovalRequest {
  Image image;
  ClickSet clicks;
  GuidanceSchedule schedule;
  PropagationConfig propagation;
  std::string preset = "toy";
  std::uint64_t seed = 0;
  ResizePolicy resize_policy = ResizePolicy::resize;
};

struct StepRecord {
  int step = 0;
  Stage stage = Stage::untouched;
  double alpha = 1.0;
  bool modulated = false;
};

struct RemovalResult {
  Image output;                         // same size as the request image
  Latent latent;                        // final clean latent
  std::vector<std::uint8_t> object_mask;  // M_ob upsampled to image size, {0,1}
  RemovalMaps maps;                     // at the capture grid
  ClickSet clicks;                      // the clicks this result was computed from
  std::vector<StepRecord> steps;
  std::array<int, 4> stage_lengths{};   // indexed by Stage
  bool no_object_found = false;
  std::chrono::duration<double> duration{};
};

/// Called before each denoising step with (stage, step index, total steps).
using ProgressCallback = std::function<void(Stage, int, int)>;

/// Stage 1 of removal: single capture pass at the trajectory mid-point, then
/// maps at the backbone's capture grid.
RemovalMaps extract_maps(const Backbone& backbone, const Inversion& inversion,
                         const ClickSet& clicks, const PropagationConfig& propagation,
                         std::uint64_t seed);

/// Encode, invert and denoise without modulation.
Image reconstruct(const Backbone& backbone, const Image& image, int steps, std::uint64_t seed,
                  ResizePolicy policy = ResizePolicy::resize);

/// Full click-driven removal. Deterministic for a fixed request.
RemovalResult remove_object(const Backbone& backbone, const RemovalRequest& request,
                            const ProgressCallback& progress = {});

/// Re-runs removal on the original image with prev.clicks + added (deduplicated
/// on the backbone's capture grid).
RemovalResult progressive_refine(const Backbone& backbone, const RemovalResult& prev,
                                 const ClickSet& added, const RemovalRequest& request,
                                 const ProgressCallback& progress = {});

}  // namespace clickerase
