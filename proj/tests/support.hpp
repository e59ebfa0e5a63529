// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Oracles and fixtures shared by the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "clickerase/image.hpp"
#include "clickerase/semantic_map.hpp"
#include "clickerase/toy_backbone.hpp"

namespace clickerase::testing {

/// Random non-negative matrix with rows normalized to one. Entries are zeroed
/// with probability `sparsity` (the diagonal is kept so no row is empty).
inline Eigen::MatrixXd random_stochastic(int n, std::mt19937_64& gen, double sparsity = 0.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = (i != j && unit(gen) < sparsity) ? 0.0 : unit(gen);
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

/// Literal definition: p_n = e_click * A^n with A^n formed by repeated
/// matrix products; d[i] = min n with p_n[i] >= tau * max_j p_n[j].
inline std::vector<int> brute_force_distance(const Eigen::MatrixXd& a, std::size_t click, double tau,
                                             int n_max) {
  const auto n = a.rows();
  std::vector<int> d(static_cast<std::size_t>(n), n_max + 1);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (int step = 0; step <= n_max; ++step) {
    if (step > 0) power = (power * a).eval();
    const Eigen::RowVectorXd p = power.row(static_cast<Eigen::Index>(click));
    const double peak = p.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& di = d[static_cast<std::size_t>(i)];
      if (di > n_max && p(i) >= tau * peak) di = step;
    }
  }
  return d;
}

/// Set of cells reachable from `seed` through 4-neighbours satisfying `keep`.
template <typename Keep>
std::vector<std::uint8_t> component(GridShape grid, std::size_t seed, Keep keep) {
  std::vector<std::uint8_t> out(grid.size(), 0);
  if (!keep(seed)) return out;
  std::vector<std::size_t> stack{seed};
  out[seed] = 1;
  while (!stack.empty()) {
    const std::size_t cell = stack.back();
    stack.pop_back();
    const int r = grid.row_of(cell);
    const int c = grid.col_of(cell);
    const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
    for (const auto& [rr, cc] : nbr) {
      if (rr < 0 || cc < 0 || rr >= grid.height || cc >= grid.width) continue;
      const std::size_t next = grid.index(rr, cc);
      if (out[next] || !keep(next)) continue;
      out[next] = 1;
      stack.push_back(next);
    }
  }
  return out;
}

/// Flat background with one axis-aligned rectangle.
inline Image scene(int width, int height, std::array<std::uint8_t, 3> bg, std::array<std::uint8_t, 3> fg,
                   int x0, int y0, int w, int h) {
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = inside ? fg[c] : bg[c];
    }
  }
  return img;
}

/// Horizontal gradient background (cells differ from each other).
inline Image gradient_scene(int side, int x0, int y0, int w, int h) {
  Image img(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const bool inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
      img.at(x, y, 0) = inside ? 230 : static_cast<std::uint8_t>(40 + x);
      img.at(x, y, 1) = inside ? 30 : static_cast<std::uint8_t>(60 + y / 2);
      img.at(x, y, 2) = inside ? 40 : 120;
    }
  }
  return img;
}

/// Latent cells whose attention window contains no modulated key in any toy
/// layer, i.e. cells the redirection cannot reach.
inline std::vector<std::uint8_t> far_cells(const ToyConfig& config, const RemovalMaps& maps) {
  const GridShape fine = config.grid;
  std::vector<std::uint8_t> far(fine.size(), 1);
  for (const auto& layer : config.layers) {
    const GridShape g{fine.height / layer.downsample, fine.width / layer.downsample};
    const RemovalMaps m = resize_maps(maps, g);
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const int qr = fine.row_of(i) / layer.downsample;
      const int qc = fine.col_of(i) / layer.downsample;
      for (int r = std::max(0, qr - layer.radius); r <= std::min(g.height - 1, qr + layer.radius); ++r) {
        for (int c = std::max(0, qc - layer.radius); c <= std::min(g.width - 1, qc + layer.radius); ++c) {
          const std::size_t k = g.index(r, c);
          if (m.m_ob[k] != 0 || m.m_bg_tilde[k] != 0.0) far[i] = 0;
        }
      }
    }
  }
  return far;
}

inline std::size_t count(const std::vector<std::uint8_t>& mask) {
  std::size_t n = 0;
  for (auto v : mask) n += v != 0;
  return n;
}

}  // namespace clickerase::testing
