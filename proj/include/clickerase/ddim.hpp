// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "clickerase/backbone.hpp"

namespace clickerase {

/// Deterministic DDIM (eta = 0) over a scaled-linear beta schedule, the
/// Stable Diffusion default. Level i in 1..T maps to training timestep
/// (i-1) * (train_steps / T) + 1; level 0 is the clean sample (alpha_bar = 1).
class DdimScheduler {
 public:
  explicit DdimScheduler(int train_steps = 1000, double beta_start = 0.00085,
                         double beta_end = 0.012);

  [[nodiscard]] int train_timestep(int level, int steps) const;
  [[nodiscard]] double alpha_bar(int level, int steps) const;

  /// x_{i-1} from x_i and predicted noise at level i.
  [[nodiscard]] Latent step(const Latent& x, const Latent& eps, int level, int steps) const;
  /// x_i from x_{i-1}, reusing the noise predicted at x_{i-1} (standard DDIM inversion).
  [[nodiscard]] Latent invert_step(const Latent& x_prev, const Latent& eps, int level,
                                   int steps) const;

 private:
  std::vector<double> alphas_cumprod_;
};

}  // namespace clickerase
