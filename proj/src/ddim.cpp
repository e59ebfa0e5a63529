// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/ddim.hpp"

#include <cmath>
#include <string>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

// x_to = sqrt(ab_to) * x0_hat + sqrt(1 - ab_to) * eps, x0_hat from x_from.
Latent transfer(const Latent& x, const Latent& eps, double ab_from, double ab_to) {
  if (!x.same_shape(eps)) throw ShapeError("DDIM: latent and noise shapes differ");
  Latent out = x;
  const double sf = std::sqrt(ab_from);
  const double nf = std::sqrt(1.0 - ab_from);
  const double st = std::sqrt(ab_to);
  const double nt = std::sqrt(1.0 - ab_to);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double x0 = (x.values[i] - nf * eps.values[i]) / sf;
    out.values[i] = st * x0 + nt * eps.values[i];
  }
  return out;
}

}  // namespace

DdimScheduler::DdimScheduler(int train_steps, double beta_start, double beta_end) {
  if (train_steps < 2) throw ArgumentError("DDIM needs at least 2 training steps");
  alphas_cumprod_.resize(static_cast<std::size_t>(train_steps));
  const double a = std::sqrt(beta_start);
  const double b = std::sqrt(beta_end);
  double prod = 1.0;
  for (int t = 0; t < train_steps; ++t) {
    const double root = a + (b - a) * t / (train_steps - 1);
    prod *= 1.0 - root * root;
    alphas_cumprod_[static_cast<std::size_t>(t)] = prod;
  }
}

int DdimScheduler::train_timestep(int level, int steps) const {
  const int train = static_cast<int>(alphas_cumprod_.size());
  if (steps < 1 || steps > train) throw ArgumentError("DDIM steps out of range: " + std::to_string(steps));
  if (level < 1 || level > steps) throw ArgumentError("DDIM level out of range: " + std::to_string(level));
  return (level - 1) * (train / steps) + 1;
}

double DdimScheduler::alpha_bar(int level, int steps) const {
  if (level == 0) return 1.0;
  return alphas_cumprod_[static_cast<std::size_t>(train_timestep(level, steps))];
}

Latent DdimScheduler::step(const Latent& x, const Latent& eps, int level, int steps) const {
  return transfer(x, eps, alpha_bar(level, steps), alpha_bar(level - 1, steps));
}

Latent DdimScheduler::invert_step(const Latent& x_prev, const Latent& eps, int level,
                                  int steps) const {
  return transfer(x_prev, eps, alpha_bar(level - 1, steps), alpha_bar(level, steps));
}

}  // namespace clickerase
