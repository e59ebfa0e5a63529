// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "doctest.h"

#include "clickerase/ddim.hpp"
#include "clickerase/errors.hpp"
#include "clickerase/presets.hpp"
#include "clickerase/toy_backbone.hpp"
#include "support.hpp"

using namespace clickerase;

TEST_CASE("toy encode/decode is lossless") {
  const ToyBackbone toy;
  const Image img = clickerase::testing::gradient_scene(64, 16, 16, 16, 16);
  const Latent z = toy.encode(img);
  CHECK(z.grid == GridShape{8, 8});
  CHECK(z.channels == 192);
  CHECK(toy.decode(z) == img);
  CHECK_THROWS_AS(toy.encode(Image(32, 32)), ShapeError);
  CHECK_THROWS_AS(toy.decode(Latent(GridShape{4, 4}, 192)), ShapeError);
}

TEST_CASE("toy inversion followed by unmodulated denoising is exact") {
  const ToyBackbone toy;
  const Image img = clickerase::testing::gradient_scene(64, 8, 24, 24, 16);
  const Latent clean = toy.encode(img);
  for (int steps : {1, 7, 50}) {
    const Inversion inv = toy.invert(clean, steps, 42);
    REQUIRE(inv.steps() == steps);
    CHECK(inv.trajectory.front() == clean);
    Latent x = inv.start();
    for (int k = 0; k < steps; ++k) {
      const LatentState state{x, steps - k, k, steps, 42};
      x = toy.denoise_step(state, toy.predict_noise(state, nullptr));
      CHECK(x == inv.trajectory[static_cast<std::size_t>(steps - k - 1)]);
    }
    CHECK(x == clean);
  }
  CHECK_THROWS_AS(toy.invert(clean, 0, 0), ArgumentError);
}

TEST_CASE("toy noise field is seeded, quantized and bounded") {
  const ToyBackbone toy;
  const Latent a = toy.noise_field(1);
  CHECK(a == toy.noise_field(1));
  CHECK_FALSE(a == toy.noise_field(2));
  for (double v : a.values) {
    CHECK(std::abs(v) <= 4.0);
    CHECK(v * 256.0 == std::round(v * 256.0));
  }
}

TEST_CASE("toy identity modulation leaves the prediction untouched") {
  const ToyBackbone toy;
  const Latent clean = toy.encode(clickerase::testing::gradient_scene(64, 0, 0, 8, 8));
  const Inversion inv = toy.invert(clean, 10, 3);
  const LatentState state{inv.trajectory[5], 5, 5, 10, 3};
  LayerModulations mods;
  for (const auto& layer : toy.descriptor().decoder_self_attention) {
    mods.emplace(layer.name, LogitModulation{layer.grid, std::vector<double>(layer.grid.size(), 1.0),
                                             std::vector<double>(layer.grid.size(), 0.0)});
  }
  const auto plain = toy.predict_noise(state, nullptr);
  const auto modded = toy.predict_noise(state, &mods);
  CHECK(plain.variant == PredictionVariant::original);
  CHECK(modded.variant == PredictionVariant::modulated);
  CHECK(modded.noise == plain.noise);

  LayerModulations bad;
  bad.emplace("nope", mods.begin()->second);
  CHECK_THROWS_AS(toy.predict_noise(state, &bad), ConfigError);
  LayerModulations wrong_grid;
  wrong_grid.emplace("up.0.attn1", mods.at("up.1.attn1"));
  CHECK_THROWS_AS(toy.predict_noise(state, &wrong_grid), ConfigError);
}

TEST_CASE("toy modulated prediction matches the closed form on a two-cell grid") {
  ToyConfig cfg;
  cfg.grid = {1, 2};
  cfg.patch = 1;
  cfg.sigma_step = 0.25;
  cfg.layers = {{"l", 1, 1, {1.0}, 1.0}};
  const ToyBackbone toy(cfg);
  REQUIRE(toy.descriptor().latent_channels == 3);

  Image img(2, 1);
  const std::uint8_t px[2][3] = {{200, 40, 90}, {60, 180, 120}};
  for (int x = 0; x < 2; ++x) {
    for (int c = 0; c < 3; ++c) img.at(x, 0, c) = px[x][c];
  }
  const Latent clean = toy.encode(img);
  const Inversion inv = toy.invert(clean, 4, 9);
  const LatentState state{inv.trajectory[2], 2, 2, 4, 9};
  const Latent z = toy.noise_field(9);

  // v = x - sigma z reproduces the clean latent (exact arithmetic).
  double msd = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double d = clean.values[static_cast<std::size_t>(c)] - clean.values[static_cast<std::size_t>(3 + c)];
    msd += d * d;
  }
  msd /= 3.0;
  const double w_other = std::exp(-msd) / (1.0 + std::exp(-msd));  // base weight on the other key
  const double w_self = 1.0 / (1.0 + std::exp(-msd));

  LayerModulations mods;
  mods.emplace("l", LogitModulation{GridShape{1, 2}, {1.0, 1.0}, {0.0, -1e4}});
  const auto eps = toy.predict_noise(state, &mods);
  const double s = toy.sigma(2);
  for (int c = 0; c < 3; ++c) {
    const double v0 = clean.values[static_cast<std::size_t>(c)];
    const double v1 = clean.values[static_cast<std::size_t>(3 + c)];
    const double delta0 = w_other * (v0 - v1);  // query 0: P' = [1, 0]
    const double delta1 = w_self * (v0 - v1);   // query 1: P' = [1, 0]
    CHECK(eps.noise.values[static_cast<std::size_t>(c)] ==
          doctest::Approx(z.values[static_cast<std::size_t>(c)] - delta0 / s).epsilon(1e-12));
    CHECK(eps.noise.values[static_cast<std::size_t>(3 + c)] ==
          doctest::Approx(z.values[static_cast<std::size_t>(3 + c)] - delta1 / s).epsilon(1e-12));
  }
}

TEST_CASE("toy capture_attention returns stochastic maps at the capture grid") {
  const ToyBackbone toy;
  CHECK(toy.descriptor().capture_grid() == GridShape{8, 8});
  CHECK(toy.descriptor().decoder_resolutions() == std::vector<GridShape>{{4, 4}, {8, 8}});
  const Latent clean = toy.encode(clickerase::testing::gradient_scene(64, 16, 16, 16, 16));
  const Inversion inv = toy.invert(clean, 10, 0);
  const LatentState state{inv.trajectory[5], 5, 5, 10, 0};
  const auto maps = toy.capture_attention(state, {});
  REQUIRE(maps.size() == 2);  // two heads of up.1.attn1
  for (const auto& m : maps) {
    CHECK(m.layer == "up.1.attn1");
    CHECK(m.grid == GridShape{8, 8});
    for (Eigen::Index q = 0; q < m.probabilities.rows(); ++q) {
      CHECK(m.probabilities.row(q).sum() == doctest::Approx(1.0));
    }
    // Outside the radius-1 window the mass is zero.
    CHECK(m.probabilities(0, 63) == 0.0);
  }
  const auto coarse = toy.capture_attention(state, {{"up.0.attn1"}});
  CHECK(coarse.front().grid == GridShape{4, 4});
  CHECK_THROWS_AS(toy.capture_attention(state, {{"missing"}}), ConfigError);
}

TEST_CASE("toy determinism and checksum") {
  const ToyBackbone a;
  const ToyBackbone b;
  CHECK(a.weights_checksum() == b.weights_checksum());
  ToyConfig other;
  other.layers[0].weight = 0.25;
  CHECK(ToyBackbone(other).weights_checksum() != a.weights_checksum());
  ToyConfig broken;
  broken.layers[0].temperatures = {0.0};
  CHECK_THROWS_AS(ToyBackbone{broken}, ConfigError);
}

TEST_CASE("DDIM schedule and round trip") {
  const DdimScheduler ddim;
  CHECK(ddim.alpha_bar(0, 50) == 1.0);
  CHECK(ddim.train_timestep(1, 50) == 1);
  CHECK(ddim.train_timestep(50, 50) == 981);
  double prev = 1.0;
  for (int level = 1; level <= 50; ++level) {
    const double ab = ddim.alpha_bar(level, 50);
    CHECK(ab < prev);
    CHECK(ab > 0.0);
    prev = ab;
  }
  CHECK_THROWS_AS(ddim.train_timestep(0, 50), ArgumentError);
  CHECK_THROWS_AS(ddim.train_timestep(1, 0), ArgumentError);

  Latent x(GridShape{2, 2}, 4);
  Latent eps(GridShape{2, 2}, 4);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    x.values[i] = 0.1 * static_cast<double>(i) - 0.5;
    eps.values[i] = std::sin(static_cast<double>(i));
  }
  const Latent up = ddim.invert_step(x, eps, 10, 50);
  const Latent down = ddim.step(up, eps, 10, 50);
  for (std::size_t i = 0; i < x.values.size(); ++i) CHECK(down.values[i] == doctest::Approx(x.values[i]).epsilon(1e-12));
  CHECK_THROWS_AS(ddim.step(x, Latent(GridShape{1, 1}, 4), 5, 50), ShapeError);
}

TEST_CASE("preset registry loads built-in descriptors") {
  const auto reg = PresetRegistry::load_default();
  for (const char* name : {"toy", "sd15", "sd21", "sdxl10"}) CHECK(reg.contains(name));
  CHECK_THROWS_AS((void)reg.get("nope"), ConfigError);

  const auto& sd15 = reg.get("sd15").descriptor;
  CHECK(sd15.native_width == 512);
  CHECK(sd15.latent_grid == GridShape{64, 64});
  CHECK(sd15.capture_grid() == GridShape{32, 32});
  CHECK(sd15.decoder_self_attention.size() == 9);
  CHECK(sd15.find_layer("up_blocks.2.attentions.1.transformer_blocks.0.attn1") != nullptr);
  CHECK(reg.get("sd21").descriptor.capture_grid() == GridShape{48, 48});
  CHECK(reg.get("sdxl10").descriptor.capture_grid() == GridShape{64, 64});

  const auto toy = reg.make_backbone("toy");
  CHECK(toy->available());
  CHECK(toy->weights_checksum() == ToyBackbone().weights_checksum());

  const auto sd = reg.make_backbone("sd15");
  CHECK_FALSE(sd->available());
  CHECK_THROWS_AS((void)sd->encode(Image(512, 512)), BackboneUnavailable);
  const Latent x(GridShape{64, 64}, 4, 0.1);
  const LatentState state{x, 50, 0, 50, 0};
  CHECK_THROWS_AS((void)sd->predict_noise(state, nullptr), BackboneUnavailable);
  // The sampler itself works without weights.
  const Latent next = sd->denoise_step(state, {Latent(GridShape{64, 64}, 4, 0.0), PredictionVariant::original});
  CHECK(next.finite());
}

TEST_CASE("parse_preset validates the schema") {
  CHECK_THROWS_AS(parse_preset("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_preset(R"({"preset": "x"})"), ConfigError);
  CHECK_THROWS_AS(parse_preset(R"({"preset": "x", "native_resolution": [64, 64], "latent_grid": [8, 8],
      "latent_channels": 4, "decoder_self_attention": [{"name": "a", "grid": [3, 3], "heads": 1}]})"),
                  ConfigError);  // 3 does not divide 8
  const auto entry = parse_preset(R"({"preset": "x", "native_resolution": [64, 64], "latent_grid": [8, 8],
      "latent_channels": 4, "decoder_self_attention": [{"name": "a", "grid": [4, 4], "heads": 2}]})");
  CHECK(entry.descriptor.preset == "x");
  CHECK(entry.descriptor.capture_grid() == GridShape{4, 4});
  CHECK_FALSE(entry.toy.has_value());
}

TEST_CASE("checkpoint cache honours CLICKERASE_CACHE_DIR") {
  setenv("CLICKERASE_CACHE_DIR", "/tmp/clickerase-cache-test", 1);
  CHECK(checkpoint_cache_dir() == std::filesystem::path("/tmp/clickerase-cache-test"));
  unsetenv("CLICKERASE_CACHE_DIR");
  CHECK_FALSE(checkpoint_cache_dir().empty());
}
