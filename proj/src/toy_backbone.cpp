// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/toy_backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

constexpr double kNoiseQuantum = 256.0;
constexpr double kNoiseClamp = 4.0;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
}

void fnv_mix(std::uint64_t& h, double v) { fnv_mix(h, std::bit_cast<std::uint64_t>(v)); }

void check_latent(const Latent& latent, const BackboneDescriptor& desc) {
  if (!(latent.grid == desc.latent_grid) || latent.channels != desc.latent_channels ||
      latent.values.size() != latent.grid.size() * static_cast<std::size_t>(latent.channels)) {
    throw ShapeError("latent is " + latent.grid.str() + "x" + std::to_string(latent.channels) +
                     ", preset " + desc.preset + " expects " + desc.latent_grid.str() + "x" +
                     std::to_string(desc.latent_channels));
  }
}

Eigen::MatrixXd as_matrix(const Latent& content) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(content.grid.size()), content.channels);
  for (std::size_t i = 0; i < content.grid.size(); ++i) {
    const auto cell = content.cell(i);
    for (int c = 0; c < content.channels; ++c) m(static_cast<Eigen::Index>(i), c) = cell[c];
  }
  return m;
}

}  // namespace

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index q = 0; q < logits.rows(); ++q) {
    const double peak = logits.row(q).maxCoeff();
    double total = 0.0;
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      const double e = std::exp(logits(q, k) - peak);
      out(q, k) = e;
      total += e;
    }
    out.row(q) /= total;
  }
  return out;
}

ToyBackbone::ToyBackbone(ToyConfig config) : config_(std::move(config)) {
  if (config_.patch < 1 || config_.grid.size() == 0) throw ConfigError("toy: empty grid or patch");
  if (!(config_.sigma_step > 0.0)) throw ConfigError("toy: sigma_step must be > 0");
  descriptor_.preset = "toy";
  descriptor_.native_width = config_.grid.width * config_.patch;
  descriptor_.native_height = config_.grid.height * config_.patch;
  descriptor_.latent_grid = config_.grid;
  descriptor_.latent_channels = config_.patch * config_.patch * 3;
  for (const auto& layer : config_.layers) {
    if (layer.downsample < 1 || layer.radius < 0 || layer.temperatures.empty()) {
      throw ConfigError("toy: invalid layer " + layer.name);
    }
    for (double t : layer.temperatures) {
      if (!(t > 0.0)) throw ConfigError("toy: temperatures must be > 0 in layer " + layer.name);
    }
    descriptor_.decoder_self_attention.push_back(
        {layer.name,
         GridShape{config_.grid.height / layer.downsample, config_.grid.width / layer.downsample},
         static_cast<int>(layer.temperatures.size())});
  }
  descriptor_.validate();
}

Latent ToyBackbone::encode(const Image& image) const {
  if (image.width != descriptor_.native_width || image.height != descriptor_.native_height) {
    throw ShapeError("toy encode expects " + std::to_string(descriptor_.native_width) + "x" +
                     std::to_string(descriptor_.native_height) + " images, got " +
                     std::to_string(image.width) + "x" + std::to_string(image.height));
  }
  const int p = config_.patch;
  Latent out(config_.grid, descriptor_.latent_channels);
  for (int r = 0; r < config_.grid.height; ++r) {
    for (int c = 0; c < config_.grid.width; ++c) {
      auto cell = out.cell(config_.grid.index(r, c));
      for (int py = 0; py < p; ++py) {
        for (int px = 0; px < p; ++px) {
          for (int ch = 0; ch < 3; ++ch) {
            const int value = image.at(c * p + px, r * p + py, ch);
            cell[static_cast<std::size_t>((py * p + px) * 3 + ch)] = (value - 128) / 128.0;
          }
        }
      }
    }
  }
  return out;
}

Image ToyBackbone::decode(const Latent& latent) const {
  check_latent(latent, descriptor_);
  const int p = config_.patch;
  Image out(descriptor_.native_width, descriptor_.native_height);
  for (int r = 0; r < config_.grid.height; ++r) {
    for (int c = 0; c < config_.grid.width; ++c) {
      const auto cell = latent.cell(config_.grid.index(r, c));
      for (int py = 0; py < p; ++py) {
        for (int px = 0; px < p; ++px) {
          for (int ch = 0; ch < 3; ++ch) {
            const double x = cell[static_cast<std::size_t>((py * p + px) * 3 + ch)];
            const double level = std::clamp(std::round(x * 128.0 + 128.0), 0.0, 255.0);
            out.at(c * p + px, r * p + py, ch) = static_cast<std::uint8_t>(level);
          }
        }
      }
    }
  }
  return out;
}

Latent ToyBackbone::noise_field(std::uint64_t seed) const {
  std::mt19937_64 gen(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Latent z(config_.grid, descriptor_.latent_channels);
  for (double& v : z.values) {
    v = std::clamp(std::round(normal(gen) * kNoiseQuantum), -kNoiseClamp * kNoiseQuantum,
                   kNoiseClamp * kNoiseQuantum) /
        kNoiseQuantum;
  }
  return z;
}

Inversion ToyBackbone::invert(const Latent& clean, int steps, std::uint64_t seed) const {
  check_latent(clean, descriptor_);
  if (steps < 1) throw ArgumentError("invert needs steps >= 1");
  const Latent z = noise_field(seed);
  Inversion out;
  out.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  out.trajectory.push_back(clean);
  for (int level = 1; level <= steps; ++level) {
    Latent x = clean;
    const double s = sigma(level);
    for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] += s * z.values[i];
    out.trajectory.push_back(std::move(x));
  }
  return out;
}

Latent ToyBackbone::clean_estimate(const LatentState& state, const Latent& z) const {
  Latent v = state.latent;
  const double s = sigma(state.level);
  for (std::size_t i = 0; i < v.values.size(); ++i) v.values[i] -= s * z.values[i];
  return v;
}

const ToyLayerConfig& ToyBackbone::layer_config(const std::string& name) const {
  for (const auto& layer : config_.layers) {
    if (layer.name == name) return layer;
  }
  throw ConfigError("unknown toy layer '" + name + "'");
}

Latent ToyBackbone::layer_content(const Latent& clean_estimate, const ToyLayerConfig& layer) const {
  if (layer.downsample == 1) return clean_estimate;
  const int ds = layer.downsample;
  const GridShape coarse{config_.grid.height / ds, config_.grid.width / ds};
  Latent out(coarse, clean_estimate.channels);
  const double inv = 1.0 / (ds * ds);
  for (int r = 0; r < coarse.height; ++r) {
    for (int c = 0; c < coarse.width; ++c) {
      auto dst = out.cell(coarse.index(r, c));
      for (int dy = 0; dy < ds; ++dy) {
        for (int dx = 0; dx < ds; ++dx) {
          const auto src = clean_estimate.cell(config_.grid.index(r * ds + dy, c * ds + dx));
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        }
      }
      for (double& v : dst) v *= inv;
    }
  }
  return out;
}

Eigen::MatrixXd ToyBackbone::head_logits(const Latent& content, const ToyLayerConfig& layer,
                                          double temperature) const {
  const GridShape g = content.grid;
  const auto n = static_cast<Eigen::Index>(g.size());
  Eigen::MatrixXd logits =
      Eigen::MatrixXd::Constant(n, n, -std::numeric_limits<double>::infinity());
  for (std::size_t q = 0; q < g.size(); ++q) {
    const int qr = g.row_of(q);
    const int qc = g.col_of(q);
    const auto vq = content.cell(q);
    for (int r = std::max(0, qr - layer.radius); r <= std::min(g.height - 1, qr + layer.radius); ++r) {
      for (int c = std::max(0, qc - layer.radius); c <= std::min(g.width - 1, qc + layer.radius); ++c) {
        const std::size_t k = g.index(r, c);
        const auto vk = content.cell(k);
        double msd = 0.0;
        for (std::size_t ch = 0; ch < vq.size(); ++ch) {
          const double diff = vq[ch] - vk[ch];
          msd += diff * diff;
        }
        msd /= static_cast<double>(vq.size());
        logits(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) = -msd / temperature;
      }
    }
  }
  return logits;
}

NoisePrediction ToyBackbone::predict_noise(const LatentState& state,
                                           const LayerModulations* modulation) const {
  check_latent(state.latent, descriptor_);
  Latent z = noise_field(state.seed);
  if (modulation == nullptr) return {std::move(z), PredictionVariant::original};

  check_modulations(*modulation);
  if (state.level < 1) throw ArgumentError("modulated prediction needs noise level >= 1");
  const double s = sigma(state.level);
  const Latent v = clean_estimate(state, z);

  Latent delta(config_.grid, descriptor_.latent_channels);
  for (const auto& layer : config_.layers) {
    const auto it = modulation->find(layer.name);
    if (it == modulation->end() || it->second.is_identity()) continue;
    const Latent content = layer_content(v, layer);
    const Eigen::MatrixXd values = as_matrix(content);
    Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(values.rows(), values.cols());
    for (double temperature : layer.temperatures) {
      const Eigen::MatrixXd logits = head_logits(content, layer, temperature);
      const Eigen::MatrixXd base = softmax_rows(logits);
      const Eigen::MatrixXd redirected = softmax_rows(redirect_logits(logits, it->second));
      shift += (redirected - base) * values;
    }
    shift /= static_cast<double>(layer.temperatures.size());

    const int ds = layer.downsample;
    for (std::size_t i = 0; i < config_.grid.size(); ++i) {
      const int r = config_.grid.row_of(i) / ds;
      const int c = config_.grid.col_of(i) / ds;
      const auto row = static_cast<Eigen::Index>(content.grid.index(r, c));
      auto cell = delta.cell(i);
      for (int ch = 0; ch < delta.channels; ++ch) cell[static_cast<std::size_t>(ch)] += layer.weight * shift(row, ch);
    }
  }

  for (std::size_t i = 0; i < z.values.size(); ++i) z.values[i] -= delta.values[i] / s;
  return {std::move(z), PredictionVariant::modulated};
}

std::vector<AttentionCapture> ToyBackbone::capture_attention(const LatentState& state,
                                                             const LayerSelector& selector) const {
  check_latent(state.latent, descriptor_);
  const auto layers = resolve(selector);
  const Latent v = clean_estimate(state, noise_field(state.seed));
  std::vector<AttentionCapture> out;
  for (const AttentionLayer* layer : layers) {
    const ToyLayerConfig& cfg = layer_config(layer->name);
    const Latent content = layer_content(v, cfg);
    for (std::size_t h = 0; h < cfg.temperatures.size(); ++h) {
      out.push_back({layer->name, static_cast<int>(h), layer->grid,
                     softmax_rows(head_logits(content, cfg, cfg.temperatures[h]))});
    }
  }
  return out;
}

Latent ToyBackbone::denoise_step(const LatentState& state, const NoisePrediction& noise) const {
  check_latent(state.latent, descriptor_);
  if (!noise.noise.same_shape(state.latent)) throw ShapeError("noise prediction shape mismatch");
  if (state.level < 1) throw ArgumentError("denoise_step needs noise level >= 1");
  const double s = sigma(state.level);
  const double s_prev = sigma(state.level - 1);
  Latent out = state.latent;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double eps = noise.noise.values[i];
    const double clean = out.values[i] - s * eps;
    out.values[i] = clean + s_prev * eps;
  }
  return out;
}

std::uint64_t ToyBackbone::weights_checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv_mix(h, static_cast<std::uint64_t>(config_.grid.height));
  fnv_mix(h, static_cast<std::uint64_t>(config_.grid.width));
  fnv_mix(h, static_cast<std::uint64_t>(config_.patch));
  fnv_mix(h, config_.sigma_step);
  for (const auto& layer : config_.layers) {
    for (char ch : layer.name) fnv_mix(h, static_cast<std::uint64_t>(ch));
    fnv_mix(h, static_cast<std::uint64_t>(layer.downsample));
    fnv_mix(h, static_cast<std::uint64_t>(layer.radius));
    fnv_mix(h, layer.weight);
    for (double t : layer.temperatures) fnv_mix(h, t);
  }
  return h;
}

}  // namespace clickerase
