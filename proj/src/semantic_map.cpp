// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/semantic_map.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <spdlog/spdlog.h>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

bool in_unit_range(double x) { return x >= 0.0 && x <= 1.0; }

std::vector<Click>::iterator find_cell(std::vector<Click>& clicks, std::size_t cell,
                                       GridShape grid) {
  return std::find_if(clicks.begin(), clicks.end(),
                      [&](const Click& c) { return rasterize(c, grid) == cell; });
}

// 4-connected component of {i : d[i] <= limit} containing seed.
std::vector<std::uint8_t> grow_region(const SemanticDistanceMap& distance, std::size_t seed,
                                      int limit) {
  const GridShape grid = distance.grid;
  std::vector<std::uint8_t> region(grid.size(), 0);
  if (distance.d[seed] > limit) return region;

  std::deque<std::size_t> frontier{seed};
  region[seed] = 1;
  constexpr int kDr[4] = {-1, 1, 0, 0};
  constexpr int kDc[4] = {0, 0, -1, 1};
  while (!frontier.empty()) {
    const std::size_t cell = frontier.front();
    frontier.pop_front();
    const int r = grid.row_of(cell);
    const int c = grid.col_of(cell);
    for (int k = 0; k < 4; ++k) {
      const int rr = r + kDr[k];
      const int cc = c + kDc[k];
      if (rr < 0 || rr >= grid.height || cc < 0 || cc >= grid.width) continue;
      const std::size_t next = grid.index(rr, cc);
      if (region[next] || distance.d[next] > limit) continue;
      region[next] = 1;
      frontier.push_back(next);
    }
  }
  return region;
}

std::size_t count_set(const std::vector<std::uint8_t>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

}  // namespace

std::size_t rasterize(const Click& click, GridShape grid) {
  const int row = std::clamp(static_cast<int>(std::floor(click.v * grid.height)), 0, grid.height - 1);
  const int col = std::clamp(static_cast<int>(std::floor(click.u * grid.width)), 0, grid.width - 1);
  return grid.index(row, col);
}

bool ClickSet::add(const Click& click, Polarity polarity, GridShape grid) {
  if (!in_unit_range(click.u) || !in_unit_range(click.v)) {
    throw ArgumentError("click coordinates must lie in [0,1], got (" + std::to_string(click.u) +
                        ", " + std::to_string(click.v) + ")");
  }
  const std::size_t cell = rasterize(click, grid);
  auto& same = polarity == Polarity::positive ? positives : negatives;
  auto& other = polarity == Polarity::positive ? negatives : positives;
  if (find_cell(same, cell, grid) != same.end()) return false;
  if (auto it = find_cell(other, cell, grid); it != other.end()) other.erase(it);
  same.push_back(click);
  return true;
}

void ClickSet::merge(const ClickSet& other, GridShape grid) {
  for (const auto& c : other.positives) add(c, Polarity::positive, grid);
  for (const auto& c : other.negatives) add(c, Polarity::negative, grid);
}

void ClickSet::validate() const {
  for (const auto* list : {&positives, &negatives}) {
    for (const auto& c : *list) {
      if (!in_unit_range(c.u) || !in_unit_range(c.v)) {
        throw ArgumentError("click coordinates must lie in [0,1]");
      }
    }
  }
}

void PropagationConfig::validate() const {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ArgumentError("tau must lie in (0,1], got " + std::to_string(tau));
  }
  if (n_max < 1) throw ArgumentError("n_max must be >= 1, got " + std::to_string(n_max));
}

bool RemovalMaps::object_empty() const {
  return std::none_of(m_ob.begin(), m_ob.end(), [](std::uint8_t v) { return v != 0; });
}

bool RemovalMaps::background_empty() const {
  return std::none_of(m_bg_tilde.begin(), m_bg_tilde.end(), [](double v) { return v != 0.0; });
}

TransitionMatrix aggregate_attention(std::span<const AttentionMap> maps, GridShape grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  if (maps.empty()) throw ShapeError("aggregate_attention needs at least one attention map");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  for (const auto& m : maps) {
    if (m.rows() != n || m.cols() != n) {
      throw ShapeError("attention map is " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ", expected " + std::to_string(n) + "x" +
                       std::to_string(n) + " for grid " + grid.str());
    }
    if ((m.array() < 0.0).any()) throw ArgumentError("attention maps must be non-negative");
    sum += m;
  }
  sum /= static_cast<double>(maps.size());

  int degenerate = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row_sum = sum.row(i).sum();
    if (row_sum > 0.0) {
      sum.row(i) /= row_sum;
    } else {
      sum.row(i).setConstant(1.0 / static_cast<double>(n));
      ++degenerate;
    }
  }
  if (degenerate > 0) {
    spdlog::warn("aggregate_attention: {} degenerate attention row(s) replaced by uniform rows",
                 degenerate);
  }
  return {grid, std::move(sum)};
}

SemanticDistanceMap propagate(const TransitionMatrix& transition, std::size_t click_index,
                              const PropagationConfig& cfg) {
  cfg.validate();
  const std::size_t n = transition.grid.size();
  if (click_index >= n) {
    throw IndexError("click index " + std::to_string(click_index) + " outside grid of " +
                     std::to_string(n) + " cells");
  }
  SemanticDistanceMap out{transition.grid, cfg.n_max,
                          std::vector<int>(n, cfg.n_max + 1)};

  Eigen::RowVectorXd p = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(n));
  p(static_cast<Eigen::Index>(click_index)) = 1.0;
  for (int step = 0; step <= cfg.n_max; ++step) {
    if (step > 0) p = (p * transition.a).eval();
    const double threshold = cfg.tau * p.maxCoeff();
    for (std::size_t i = 0; i < n; ++i) {
      if (out.d[i] > cfg.n_max && p(static_cast<Eigen::Index>(i)) >= threshold) out.d[i] = step;
    }
  }
  return out;
}

std::vector<std::uint8_t> flood_fill_object(const SemanticDistanceMap& distance,
                                            std::size_t click_index,
                                            const FloodFillConfig& cfg) {
  if (click_index >= distance.grid.size()) {
    throw IndexError("click index " + std::to_string(click_index) + " outside grid");
  }
  const int cap = distance.n_max / 2;
  std::vector<std::uint8_t> region = grow_region(distance, click_index, cfg.level_tolerance);
  std::size_t prev_growth = count_set(region);
  std::size_t prev_size = prev_growth;
  for (int level = 1; level <= cap; ++level) {
    auto next = grow_region(distance, click_index, level + cfg.level_tolerance);
    const std::size_t size = count_set(next);
    const std::size_t growth = size - prev_size;
    // Elbow: a growth burst means the region leaked past the object boundary.
    if (growth > 0 &&
        static_cast<double>(growth) >= cfg.growth_limit * static_cast<double>(prev_growth)) {
      break;
    }
    region = std::move(next);
    prev_growth = growth;
    prev_size = size;
  }
  return region;
}

std::vector<double> background_similarity(const SemanticDistanceMap& distance) {
  std::vector<double> out(distance.d.size());
  const double n_max = static_cast<double>(distance.n_max);
  std::transform(distance.d.begin(), distance.d.end(), out.begin(), [&](int d) {
    return 1.0 - static_cast<double>(std::min(d, distance.n_max)) / n_max;
  });
  return out;
}

RemovalMaps combine_clicks(const TransitionMatrix& transition, const ClickSet& clicks,
                           const PropagationConfig& cfg, const FloodFillConfig& fill) {
  if (clicks.positives.empty()) {
    throw PreconditionError("at least one positive click is required");
  }
  clicks.validate();
  const GridShape grid = transition.grid;
  RemovalMaps maps{grid, std::vector<std::uint8_t>(grid.size(), 0),
                   std::vector<double>(grid.size(), 0.0)};

  for (const auto& click : clicks.positives) {
    const std::size_t cell = rasterize(click, grid);
    const auto distance = propagate(transition, cell, cfg);
    const auto region = flood_fill_object(distance, cell, fill);
    const auto similarity = background_similarity(distance);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      maps.m_ob[i] |= region[i];
      maps.m_bg_tilde[i] = std::max(maps.m_bg_tilde[i], similarity[i]);
    }
  }
  for (const auto& click : clicks.negatives) {
    const std::size_t cell = rasterize(click, grid);
    const auto region = flood_fill_object(propagate(transition, cell, cfg), cell, fill);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (region[i]) {
        maps.m_ob[i] = 0;
        maps.m_bg_tilde[i] = 0.0;
      }
    }
  }
  return maps;
}

RemovalMaps resize_maps(const RemovalMaps& maps, GridShape target) {
  if (target.height < 1 || target.width < 1) {
    throw ArgumentError("resize target must be at least 1x1, got " + target.str());
  }
  if (target == maps.grid) return maps;

  const GridShape src = maps.grid;
  RemovalMaps out{target, std::vector<std::uint8_t>(target.size()),
                  std::vector<double>(target.size())};
  const double sy = static_cast<double>(src.height) / target.height;
  const double sx = static_cast<double>(src.width) / target.width;

  for (int r = 0; r < target.height; ++r) {
    const int nr = std::min(static_cast<int>(std::floor(r * sy)), src.height - 1);
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < target.width; ++c) {
      const int nc = std::min(static_cast<int>(std::floor(c * sx)), src.width - 1);
      out.m_ob[target.index(r, c)] = maps.m_ob[src.index(nr, nc)];

      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * maps.m_bg_tilde[src.index(y0, x0)] +
                         wx * maps.m_bg_tilde[src.index(y0, x1)];
      const double bottom = (1.0 - wx) * maps.m_bg_tilde[src.index(y1, x0)] +
                            wx * maps.m_bg_tilde[src.index(y1, x1)];
      out.m_bg_tilde[target.index(r, c)] =
          std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace clickerase
