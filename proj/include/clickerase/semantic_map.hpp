// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Clicks + backbone self-attention -> object map and background similarity map.
//
// Self-attention probabilities are averaged into a row-stochastic transition
// matrix A over latent cells. A one-hot distribution at the clicked cell is
// pushed through A repeatedly; the step at which a cell first carries at least
// tau times the current maximum mass is its semantic distance. The object map
// is grown from the click over that distance field; the background similarity
// map is the distance field itself, inverted and normalized.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "clickerase/grid.hpp"

namespace clickerase {

enum class Polarity { positive, negative };

/// Normalized image coordinates: u is horizontal, v vertical, both in [0,1].
struct Click {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Click&, const Click&) = default;
};

/// Maps (u,v) to cell (floor(v*h), floor(u*w)), clamped to the grid.
std::size_t rasterize(const Click& click, GridShape grid);

struct ClickSet {
  std::vector<Click> positives;
  std::vector<Click> negatives;

  /// Inserts a click unless one already occupies the same grid cell. A click
  /// of the opposite polarity on that cell is replaced, so positives and
  /// negatives stay disjoint as cells. Returns false when nothing changed.
  bool add(const Click& click, Polarity polarity, GridShape grid);

  /// Merges `other` into this set via add().
  void merge(const ClickSet& other, GridShape grid);

  /// Throws ArgumentError when any coordinate is outside [0,1].
  void validate() const;

  [[nodiscard]] std::size_t size() const { return positives.size() + negatives.size(); }
  [[nodiscard]] bool empty() const { return size() == 0; }
};

using AttentionMap = Eigen::MatrixXd;

/// Row-stochastic Markov kernel over the cells of `grid`.
struct TransitionMatrix {
  GridShape grid;
  Eigen::MatrixXd a;
};

struct PropagationConfig {
  double tau = 0.5;
  int n_max = 10;

  void validate() const;
};

struct SemanticDistanceMap {
  GridShape grid;
  int n_max = 0;
  std::vector<int> d;

  [[nodiscard]] int unreachable() const { return n_max + 1; }
};

struct RemovalMaps {
  GridShape grid;
  std::vector<std::uint8_t> m_ob;   // {0,1}
  std::vector<double> m_bg_tilde;   // [0,1], 1 = most similar to the click

  [[nodiscard]] bool object_empty() const;
  [[nodiscard]] bool background_empty() const;
};

/// Mean over all supplied maps, then each row renormalized to sum to one.
/// An all-zero row is replaced by the uniform row and a warning is logged.
TransitionMatrix aggregate_attention(std::span<const AttentionMap> maps, GridShape grid);

SemanticDistanceMap propagate(const TransitionMatrix& transition, std::size_t click_index,
                              const PropagationConfig& cfg);

struct FloodFillConfig {
  int level_tolerance = 1;
  // Growth at level l must stay below growth_limit * growth at level l-1.
  double growth_limit = 2.0;
};

/// Level-wise region growing from the click cell. Returns a {0,1} map whose
/// set cells form a single 4-connected region containing the click.
std::vector<std::uint8_t> flood_fill_object(const SemanticDistanceMap& distance,
                                            std::size_t click_index,
                                            const FloodFillConfig& cfg = {});

/// 1 - min(d, n_max) / n_max per cell.
std::vector<double> background_similarity(const SemanticDistanceMap& distance);

RemovalMaps combine_clicks(const TransitionMatrix& transition, const ClickSet& clicks,
                           const PropagationConfig& cfg, const FloodFillConfig& fill = {});

/// m_bg_tilde bilinear (half-pixel centers), m_ob nearest-neighbor.
RemovalMaps resize_maps(const RemovalMaps& maps, GridShape target);

}  // namespace clickerase
