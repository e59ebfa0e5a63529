// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "doctest.h"

#include "clickerase/errors.hpp"
#include "clickerase/semantic_map.hpp"
#include "support.hpp"

using namespace clickerase;
using clickerase::testing::brute_force_distance;
using clickerase::testing::component;
using clickerase::testing::random_stochastic;

TEST_CASE("rasterize maps normalized coordinates to row-major cells") {
  const GridShape g{8, 8};
  CHECK(rasterize({0.5, 0.5}, g) == g.index(4, 4));
  CHECK(rasterize({0.0, 0.0}, g) == 0);
  CHECK(rasterize({1.0, 1.0}, g) == g.index(7, 7));
  CHECK(rasterize({0.99, 0.0}, g) == g.index(0, 7));
  CHECK(rasterize({0.0, 0.26}, GridShape{4, 2}) == GridShape{4, 2}.index(1, 0));
}

TEST_CASE("ClickSet deduplicates per cell and keeps polarities disjoint") {
  const GridShape g{8, 8};
  ClickSet s;
  CHECK(s.add({0.51, 0.51}, Polarity::positive, g));
  CHECK_FALSE(s.add({0.55, 0.6}, Polarity::positive, g));  // same cell (4,4)
  CHECK(s.positives.size() == 1);
  CHECK(s.add({0.52, 0.52}, Polarity::negative, g));  // flips the cell
  CHECK(s.positives.empty());
  CHECK(s.negatives.size() == 1);
  CHECK(s.add({0.1, 0.1}, Polarity::positive, g));
  CHECK(s.size() == 2);

  ClickSet other;
  other.positives.push_back({0.9, 0.9});
  other.positives.push_back({0.12, 0.12});  // duplicate of (0.1, 0.1)
  s.merge(other, g);
  CHECK(s.positives.size() == 2);

  CHECK_THROWS_AS(s.add({1.5, 0.2}, Polarity::positive, g), ArgumentError);
  ClickSet bad;
  bad.negatives.push_back({0.2, -0.1});
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("aggregate_attention averages then row-normalizes") {
  const GridShape g{1, 3};
  AttentionMap a(3, 3), b(3, 3);
  a << 1, 0, 0, 0, 2, 2, 0, 0, 0;
  b << 1, 2, 1, 0, 0, 0, 0, 0, 0;
  const std::vector<AttentionMap> maps{a, b};
  const auto t = aggregate_attention(maps, g);
  // Mean rows: [1,1,0.5], [0,1,1], [0,0,0] (degenerate -> uniform).
  CHECK(t.a(0, 0) == doctest::Approx(1.0 / 2.5));
  CHECK(t.a(0, 1) == doctest::Approx(1.0 / 2.5));
  CHECK(t.a(0, 2) == doctest::Approx(0.5 / 2.5));
  CHECK(t.a(1, 0) == 0.0);
  CHECK(t.a(1, 1) == doctest::Approx(0.5));
  for (int k = 0; k < 3; ++k) CHECK(t.a(2, k) == doctest::Approx(1.0 / 3.0));

  const std::vector<AttentionMap> wrong{AttentionMap::Ones(2, 2)};
  CHECK_THROWS_AS(aggregate_attention(wrong, g), ShapeError);
  CHECK_THROWS_AS(aggregate_attention(std::span<const AttentionMap>{}, g), ShapeError);
  const std::vector<AttentionMap> negative{-AttentionMap::Ones(3, 3)};
  CHECK_THROWS_AS(aggregate_attention(negative, g), ArgumentError);
}

TEST_CASE("aggregate_attention rows are stochastic for random inputs") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> unit(0.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const GridShape g{3, 4};
    std::vector<AttentionMap> maps;
    for (int m = 0; m < 1 + trial % 4; ++m) {
      maps.push_back(AttentionMap::NullaryExpr(12, 12, [&] { return unit(gen); }));
    }
    const auto t = aggregate_attention(maps, g);
    for (int i = 0; i < 12; ++i) CHECK(t.a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("propagate matches matrix-power oracle") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const GridShape g{4, 4};
    const TransitionMatrix t{g, random_stochastic(16, gen, 0.7)};
    const std::size_t click = static_cast<std::size_t>(trial % 16);
    const PropagationConfig cfg{0.3, 12};
    CHECK(propagate(t, click, cfg).d == brute_force_distance(t.a, click, cfg.tau, cfg.n_max));
  }
}

TEST_CASE("propagate on simple chains") {
  SUBCASE("click cell is at distance zero, identity never spreads") {
    const TransitionMatrix t{GridShape{2, 2}, Eigen::MatrixXd::Identity(4, 4)};
    const auto d = propagate(t, 1, {0.5, 5});
    CHECK(d.d == std::vector<int>{6, 0, 6, 6});
    CHECK(d.unreachable() == 6);
  }
  SUBCASE("uniform kernel reaches everything in one step") {
    const TransitionMatrix t{GridShape{1, 4}, Eigen::MatrixXd::Constant(4, 4, 0.25)};
    CHECK(propagate(t, 2, {0.9, 3}).d == std::vector<int>{1, 1, 0, 1});
  }
  SUBCASE("right shift moves the mass along a line") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);
    a(0, 1) = a(1, 2) = a(2, 3) = a(3, 3) = 1.0;
    CHECK(propagate({GridShape{1, 4}, a}, 0, {0.5, 10}).d == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("errors") {
    const TransitionMatrix t{GridShape{1, 2}, Eigen::MatrixXd::Identity(2, 2)};
    CHECK_THROWS_AS(propagate(t, 2, {}), IndexError);
    CHECK_THROWS_AS(propagate(t, 0, {0.0, 5}), ArgumentError);
    CHECK_THROWS_AS(propagate(t, 0, {1.2, 5}), ArgumentError);
    CHECK_THROWS_AS(propagate(t, 0, {0.5, 0}), ArgumentError);
  }
}

TEST_CASE("propagate distance is non-decreasing in tau") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const TransitionMatrix t{GridShape{3, 3}, random_stochastic(9, gen, 0.5)};
    const auto lo = propagate(t, 4, {0.2, 16}).d;
    const auto hi = propagate(t, 4, {0.8, 16}).d;
    for (std::size_t i = 0; i < lo.size(); ++i) CHECK(lo[i] <= hi[i]);
  }
}

TEST_CASE("flood_fill_object grows level by level and stops at the elbow") {
  const GridShape g{4, 4};
  SemanticDistanceMap d{g, 10, {}};
  // Object: the 2x2 top-left block at level <= 1. Background levels 2 (one
  // cell) then a burst at level 3.
  d.d = {0, 1, 3, 3,
         1, 1, 3, 3,
         2, 3, 3, 3,
         3, 3, 3, 11};
  const auto region = flood_fill_object(d, 0);
  // Level 0 (limit 1): 4 cells; level 1 (limit 2): +1 (growth 1 < 2*4);
  // level 2 (limit 3): +10 >= 2*1 -> stop.
  const std::vector<std::uint8_t> expected = {1, 1, 0, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0};
  CHECK(region == expected);

  // Disconnected low cells do not join the region.
  d.d = {0, 11, 0, 0, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11, 11};
  const auto lone = flood_fill_object(d, 0);
  CHECK(clickerase::testing::count(lone) == 1);
  CHECK_THROWS_AS(flood_fill_object(d, 16), IndexError);
}

TEST_CASE("flood_fill_object is a 4-connected component containing the click") {
  std::mt19937_64 gen(3);
  const GridShape g{6, 6};
  for (int trial = 0; trial < 30; ++trial) {
    const TransitionMatrix t{g, random_stochastic(36, gen, 0.9)};
    const std::size_t click = static_cast<std::size_t>(trial);
    const auto dist = propagate(t, click, {0.5, 10});
    const auto region = flood_fill_object(dist, click);
    REQUIRE(region[click] == 1);
    // Every set cell has some level limit at which it belongs to the component.
    int limit = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (region[i]) limit = std::max(limit, dist.d[i]);
    }
    const auto oracle = component(g, click, [&](std::size_t i) { return region[i] != 0; });
    CHECK(oracle == region);
    const auto full = component(g, click, [&](std::size_t i) { return dist.d[i] <= limit; });
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(region[i] <= full[i]);
  }
}

TEST_CASE("background_similarity is 1 - min(d, n_max) / n_max") {
  const SemanticDistanceMap d{GridShape{1, 4}, 4, {0, 2, 4, 5}};
  CHECK(background_similarity(d) == std::vector<double>{1.0, 0.5, 0.0, 0.0});
}

namespace {

// Two separated 2x2 blocks on a 4x4 grid; attention mixes only within a block
// and each background cell attends to itself.
TransitionMatrix two_blocks() {
  const GridShape g{4, 4};
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(16, 16);
  const std::vector<std::vector<int>> blocks = {{0, 1, 4, 5}, {10, 11, 14, 15}};
  for (const auto& b : blocks) {
    for (int i : b) {
      for (int j : b) a(i, j) = 0.25;
    }
  }
  for (int i = 0; i < 16; ++i) {
    if (a.row(i).sum() == 0.0) a(i, i) = 1.0;
  }
  return {g, a};
}

}  // namespace

TEST_CASE("combine_clicks unions positives and subtracts negatives") {
  const auto t = two_blocks();
  const PropagationConfig cfg{0.5, 4};
  ClickSet clicks;
  clicks.positives.push_back({0.1, 0.1});  // cell 0
  auto maps = combine_clicks(t, clicks, cfg);
  const std::vector<std::uint8_t> first = {1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(maps.m_ob == first);
  CHECK(maps.m_bg_tilde[0] == 1.0);
  CHECK(maps.m_bg_tilde[1] == doctest::Approx(0.75));
  CHECK(maps.m_bg_tilde[2] == 0.0);

  clicks.positives.push_back({0.9, 0.9});  // cell 15
  maps = combine_clicks(t, clicks, cfg);
  CHECK(clickerase::testing::count(maps.m_ob) == 8);
  CHECK(maps.m_bg_tilde[15] == 1.0);

  // Per-click oracle: union of the individual fills.
  for (std::size_t i = 0; i < 16; ++i) {
    const std::uint8_t a = flood_fill_object(propagate(t, 0, cfg), 0)[i];
    const std::uint8_t b = flood_fill_object(propagate(t, 15, cfg), 15)[i];
    CHECK(maps.m_ob[i] == (a | b));
  }

  clicks.negatives.push_back({0.65, 0.65});  // cell 10 removes the second block
  maps = combine_clicks(t, clicks, cfg);
  CHECK(maps.m_ob == first);
  CHECK(maps.m_bg_tilde[15] == 0.0);
  CHECK_FALSE(maps.object_empty());

  ClickSet none;
  none.negatives.push_back({0.5, 0.5});
  CHECK_THROWS_AS(combine_clicks(t, none, cfg), PreconditionError);
}

TEST_CASE("resize_maps: nearest for M_ob, bilinear for m_bg_tilde") {
  RemovalMaps maps{GridShape{2, 2}, {1, 0, 0, 0}, {1.0, 0.0, 0.0, 0.0}};
  const auto up = resize_maps(maps, GridShape{4, 4});
  const std::vector<std::uint8_t> ob = {1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(up.m_ob == ob);
  CHECK(up.m_bg_tilde[0] == 1.0);                        // clamped corner
  CHECK(up.m_bg_tilde[1] == doctest::Approx(0.75));      // x = 0.25
  CHECK(up.m_bg_tilde[5] == doctest::Approx(0.5625));    // (0.75)^2
  CHECK(up.m_bg_tilde[15] == 0.0);

  const auto same = resize_maps(maps, GridShape{2, 2});
  CHECK(same.m_ob == maps.m_ob);
  CHECK(same.m_bg_tilde == maps.m_bg_tilde);

  const auto down = resize_maps(up, GridShape{2, 2});
  CHECK(down.m_ob == maps.m_ob);
  CHECK_THROWS_AS(resize_maps(maps, GridShape{0, 2}), ArgumentError);
}
