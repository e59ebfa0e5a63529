// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"

#include "clickerase/errors.hpp"
#include "clickerase/pipeline.hpp"
#include "clickerase/toy_backbone.hpp"
#include "support.hpp"

using namespace clickerase;
using clickerase::testing::count;
using clickerase::testing::far_cells;
using clickerase::testing::gradient_scene;
using clickerase::testing::scene;

namespace {

// 16x16 px object covering latent cells (2..3, 2..3).
RemovalRequest object_request(double r = 0.8) {
  RemovalRequest req;
  req.image = scene(64, 64, {90, 140, 200}, {220, 40, 30}, 16, 16, 16, 16);
  req.clicks.positives.push_back({0.375, 0.375});
  req.schedule.r = r;
  req.seed = 5;
  return req;
}

}  // namespace

TEST_CASE("blend is the affine combination of both predictions") {
  NoisePrediction a{Latent(GridShape{1, 2}, 1), PredictionVariant::original};
  NoisePrediction b{Latent(GridShape{1, 2}, 1), PredictionVariant::modulated};
  a.noise.values = {1.0, -2.0};
  b.noise.values = {3.0, 5.0};
  CHECK(blend(a, b, 0.0).noise == a.noise);
  CHECK(blend(a, b, 0.0).variant == PredictionVariant::original);
  CHECK(blend(a, b, 1.0).noise == b.noise);
  CHECK(blend(a, b, 1.0).variant == PredictionVariant::modulated);
  const auto mid = blend(a, b, 0.25);
  CHECK(mid.noise.values[0] == doctest::Approx(1.5));
  CHECK(mid.noise.values[1] == doctest::Approx(-0.25));
  CHECK_THROWS_AS(blend(a, b, 1.5), ArgumentError);
  CHECK_THROWS_AS(blend(a, b, -0.1), ArgumentError);
  NoisePrediction c{Latent(GridShape{2, 2}, 1), PredictionVariant::modulated};
  CHECK_THROWS_AS(blend(a, c, 0.5), ShapeError);
}

TEST_CASE("reconstruct is exact on the toy backbone") {
  const ToyBackbone toy;
  const Image img = gradient_scene(64, 10, 20, 20, 12);
  CHECK(reconstruct(toy, img, 50, 1) == img);
  CHECK_THROWS_AS(reconstruct(toy, Image(30, 30), 10, 1, ResizePolicy::reject), ValidationError);
}

TEST_CASE("extract_maps isolates a flat object") {
  const ToyBackbone toy;
  const auto req = object_request();
  const Inversion inv = toy.invert(toy.encode(req.image), 50, req.seed);
  const RemovalMaps maps = extract_maps(toy, inv, req.clicks, req.propagation, req.seed);
  REQUIRE(maps.grid == GridShape{8, 8});
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const bool inside = r >= 2 && r <= 3 && c >= 2 && c <= 3;
      CHECK(maps.m_ob[maps.grid.index(r, c)] == (inside ? 1 : 0));
    }
  }
  CHECK(maps.m_bg_tilde[maps.grid.index(2, 2)] > 0.0);
  CHECK(maps.m_bg_tilde[maps.grid.index(7, 7)] == 0.0);
}

TEST_CASE("remove_object is deterministic and follows the stage plan") {
  const ToyBackbone toy;
  const auto req = object_request();
  std::vector<std::pair<Stage, int>> seen;
  const auto a = remove_object(toy, req, [&](Stage s, int step, int total) {
    CHECK(total == 50);
    seen.emplace_back(s, step);
  });
  const auto b = remove_object(toy, req);
  CHECK(a.output == b.output);
  CHECK(a.latent == b.latent);
  CHECK(a.stage_lengths == std::array<int, 4>{10, 8, 22, 10});
  REQUIRE(seen.size() == 50);
  CHECK(seen[9].first == Stage::untouched);
  CHECK(seen[10].first == Stage::object_and_bg);
  CHECK(seen[45].first == Stage::free);
  REQUIRE(a.steps.size() == 50);
  int modulated = 0;
  for (const auto& s : a.steps) modulated += s.modulated;
  CHECK(modulated == 30);
  CHECK_FALSE(a.no_object_found);
  CHECK(a.output.width == 64);
  CHECK(count(a.object_mask) == 16 * 16);

  // The object region moves towards the background colour.
  const Image reference = scene(64, 64, {90, 140, 200}, {90, 140, 200}, 0, 0, 0, 0);
  std::vector<std::uint8_t> object(64 * 64, 0);
  for (int y = 16; y < 32; ++y) {
    for (int x = 16; x < 32; ++x) object[static_cast<std::size_t>(y) * 64 + x] = 1;
  }
  CHECK(mean_abs_delta(a.output, reference, object) < mean_abs_delta(req.image, reference, object));
}

TEST_CASE("r = 0 reproduces the plain reconstruction") {
  const ToyBackbone toy;
  const auto req = object_request(0.0);
  const auto result = remove_object(toy, req);
  CHECK(result.output == reconstruct(toy, req.image, 50, req.seed));
  CHECK(result.output == req.image);
}

TEST_CASE("far-region latents are unchanged by guidance") {
  const ToyBackbone toy;
  const auto r0 = remove_object(toy, object_request(0.0));
  const auto r1 = remove_object(toy, object_request(1.0));
  const auto far = far_cells(toy.config(), r1.maps);
  REQUIRE(count(far) > 0);
  bool any_change = false;
  for (std::size_t i = 0; i < far.size(); ++i) {
    const auto a = r0.latent.cell(i);
    const auto b = r1.latent.cell(i);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (far[i]) CHECK(std::abs(a[k] - b[k]) < 1e-6);
      any_change |= a[k] != b[k];
    }
  }
  CHECK(any_change);
}

TEST_CASE("non-native inputs are resized in and out") {
  const ToyBackbone toy;
  RemovalRequest req = object_request();
  req.image = scene(120, 90, {90, 140, 200}, {220, 40, 30}, 30, 22, 30, 22);
  const auto result = remove_object(toy, req);
  CHECK(result.output.width == 120);
  CHECK(result.output.height == 90);
  CHECK(result.object_mask.size() == 120u * 90u);
  req.resize_policy = ResizePolicy::reject;
  CHECK_THROWS_AS(remove_object(toy, req), ValidationError);
}

TEST_CASE("a negative click over the whole object yields NO_OBJECT_FOUND") {
  const ToyBackbone toy;
  RemovalRequest req = object_request();
  req.clicks.negatives.push_back({0.3, 0.3});  // another cell of the same object
  const auto result = remove_object(toy, req);
  CHECK(result.no_object_found);
  CHECK(result.maps.object_empty());
  CHECK(result.output == reconstruct(toy, req.image, 50, req.seed));
  for (const auto& s : result.steps) CHECK_FALSE(s.modulated);
}

TEST_CASE("remove_object preconditions") {
  const ToyBackbone toy;
  RemovalRequest req = object_request();
  req.clicks.positives.clear();
  CHECK_THROWS_AS(remove_object(toy, req), PreconditionError);
  req = object_request();
  req.schedule.r = 2.0;
  CHECK_THROWS_AS(remove_object(toy, req), ArgumentError);
  req = object_request();
  req.image = Image();
  CHECK_THROWS_AS(remove_object(toy, req), ValidationError);
}

TEST_CASE("progressive_refine merges clicks and re-runs on the original") {
  const ToyBackbone toy;
  RemovalRequest req = object_request();
  req.image = scene(64, 64, {90, 140, 200}, {220, 40, 30}, 16, 16, 16, 16);
  for (int y = 40; y < 56; ++y) {
    for (int x = 40; x < 56; ++x) {
      req.image.at(x, y, 0) = 20;
      req.image.at(x, y, 1) = 220;
      req.image.at(x, y, 2) = 60;
    }
  }
  const auto first = remove_object(toy, req);
  ClickSet added;
  added.positives.push_back({0.75, 0.75});
  added.positives.push_back({0.38, 0.38});  // duplicate cell, ignored
  const auto refined = progressive_refine(toy, first, added, req);
  CHECK(refined.clicks.positives.size() == 2);
  CHECK(count(refined.maps.m_ob) == 8);

  RemovalRequest direct = req;
  direct.clicks.positives = {{0.375, 0.375}, {0.75, 0.75}};
  CHECK(remove_object(toy, direct).output == refined.output);
}
